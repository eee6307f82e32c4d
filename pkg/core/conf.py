"""
Single accessor for the COAGDIFF settings dict.
"""

from django.conf import settings

DEFAULTS = {
    "STABILITY_LIMIT": 0.5,
    "MAX_SUBSTEPS": 64,
    "PICARD_TOL": 1e-12,
    "PICARD_KMAX": 50,
    "MONITOR_TOLERANCE": 0.05,
    "SUBADDITIVITY_TOL": 1e-12,
    "DOMINATION_TOL": 1e-12,
    "PHI_SAMPLE_MAX": 1e4,
    "PHI_SAMPLE_POINTS": 41,
    "WRAP_TAIL_TOL": 1e-16,
    "REFINE_EPSILON": 1e-8,
    "BLOWUP_LIMIT": 1e12,
    "MAX_HISTORY_VALUES": 50_000_000,
    "CLIP_ACCEPT_FRACTION": 1e-8,
    "ORACLE_DT_FRACTION": 0.1,
    "STEP_MATCH_RTOL": 1e-9,
    "TIME_MATCH_RTOL": 1e-9,
    "DERIVED_MATCH_RTOL": 1e-12,
    "STAGE_POSITIVITY_LIMIT": 1.0,
}


def solver_setting(name):
    """Get a solver tolerance from settings, falling back to the built-in default."""
    configured = getattr(settings, "COAGDIFF", {})
    return configured.get(name, DEFAULTS[name])


def all_solver_settings():
    """Effective tolerances, as recorded in run manifests."""
    configured = getattr(settings, "COAGDIFF", {})
    return {key: configured.get(key, default) for key, default in DEFAULTS.items()}

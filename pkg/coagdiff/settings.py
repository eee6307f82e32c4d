"""
Django settings for the coagdiff solver project.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# --- Environment Setup ---
load_dotenv()


def get_bool_from_env(key, default_value="False"):
    """Helper to convert environment variable strings to booleans safely."""
    return str(os.getenv(key, default_value)).lower() in ("true", "1", "t", "y", "yes")


def get_float_from_env(key, default_value):
    """Helper to read a numeric override, keeping the default when unset."""
    raw = os.getenv(key)
    return float(raw) if raw not in (None, "") else default_value


def get_int_from_env(key, default_value):
    raw = os.getenv(key)
    return int(raw) if raw not in (None, "") else default_value


BASE_DIR = Path(__file__).resolve().parent.parent

# --- Core ---
DEBUG = get_bool_from_env("DEBUG", "False")

# No sessions, signing or web surface; Django still insists on a key.
SECRET_KEY = os.getenv("SECRET_KEY", "coagdiff-offline-key-no-web-surface")

ALLOWED_HOSTS = []

# --- Application Definition ---
INSTALLED_APPS = [
    # Third-Party Apps
    "rest_framework",
    # Project Apps
    "core.apps.CoreConfig",
    "typespace.apps.TypespaceConfig",
    "state.apps.StateConfig",
    "heatflow.apps.HeatflowConfig",
    "coagulation.apps.CoagulationConfig",
    "solver.apps.SolverConfig",
    "oracles.apps.OraclesConfig",
    "cli.apps.CliConfig",
]

# Scenarios and outputs are files; nothing is persisted in a database.
DATABASES = {}

# --- Internationalization ---
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# --- Scenario Files ---
SCENARIO_DIR = BASE_DIR / "scenarios"
OUTPUT_ROOT = Path(os.getenv("COAGDIFF_OUTPUT_ROOT", str(BASE_DIR / "runs")))

# --- Solver Tolerances & Defaults ---
# Copied verbatim into every run manifest.
COAGDIFF = {
    # Splitting sub-cycling: c_max * h must not exceed this per coagulation substep.
    "STABILITY_LIMIT": get_float_from_env("COAGDIFF_STABILITY_LIMIT", 0.5),
    "MAX_SUBSTEPS": get_int_from_env("COAGDIFF_MAX_SUBSTEPS", 64),
    "PICARD_TOL": get_float_from_env("COAGDIFF_PICARD_TOL", 1e-12),
    "PICARD_KMAX": get_int_from_env("COAGDIFF_PICARD_KMAX", 50),
    "MONITOR_TOLERANCE": get_float_from_env("COAGDIFF_MONITOR_TOLERANCE", 0.05),
    "SUBADDITIVITY_TOL": get_float_from_env("COAGDIFF_SUBADDITIVITY_TOL", 1e-12),
    "DOMINATION_TOL": get_float_from_env("COAGDIFF_DOMINATION_TOL", 1e-12),
    "PHI_SAMPLE_MAX": get_float_from_env("COAGDIFF_PHI_SAMPLE_MAX", 1e4),
    "PHI_SAMPLE_POINTS": get_int_from_env("COAGDIFF_PHI_SAMPLE_POINTS", 41),
    "WRAP_TAIL_TOL": get_float_from_env("COAGDIFF_WRAP_TAIL_TOL", 1e-16),
    "REFINE_EPSILON": get_float_from_env("COAGDIFF_REFINE_EPSILON", 1e-8),
    "BLOWUP_LIMIT": get_float_from_env("COAGDIFF_BLOWUP_LIMIT", 1e12),
    "MAX_HISTORY_VALUES": get_int_from_env("COAGDIFF_MAX_HISTORY_VALUES", 50_000_000),
    "CLIP_ACCEPT_FRACTION": get_float_from_env("COAGDIFF_CLIP_ACCEPT_FRACTION", 1e-8),
    "ORACLE_DT_FRACTION": get_float_from_env("COAGDIFF_ORACLE_DT_FRACTION", 0.1),
    # Relative slack when matching t_end to whole steps and output times.
    "STEP_MATCH_RTOL": get_float_from_env("COAGDIFF_STEP_MATCH_RTOL", 1e-9),
    "TIME_MATCH_RTOL": get_float_from_env("COAGDIFF_TIME_MATCH_RTOL", 1e-9),
    "DERIVED_MATCH_RTOL": get_float_from_env("COAGDIFF_DERIVED_MATCH_RTOL", 1e-12),
    # Forward-Euler stage: c_max * h above this is no longer positivity preserving.
    "STAGE_POSITIVITY_LIMIT": get_float_from_env("COAGDIFF_STAGE_POSITIVITY_LIMIT", 1.0),
}

# --- Logging ---
LOG_LEVEL = os.getenv("COAGDIFF_LOG_LEVEL", "INFO").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "INFO",
    },
    "loggers": {
        "django": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        },
        **{
            app: {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False}
            for app in ("typespace", "state", "heatflow", "coagulation", "solver", "oracles", "cli")
        },
    },
}

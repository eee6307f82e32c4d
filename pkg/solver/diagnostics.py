import logging
from dataclasses import astuple, dataclass, fields

import numpy as np

from core.conf import solver_setting
from state.measures import bracket, norm_inf, norm_l1, total_mass
from state.snapshots import format_float

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiagnosticsRow:
    """
    One output time. Bound flags are None when the bound does not apply:
    the horizon bound only before zeta_lower, the global bound only with v.
    """

    t: float
    mass_mu: float
    mass_lambda: float
    eta_l1: float
    wmom_l1: float
    wmom_inf: float
    w2_sup: float
    bound_horizon_ok: bool | None
    bound_global_ok: bool | None
    clip_mass: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_csv_row(self):
        row = []
        for value in astuple(self):
            if value is None:
                row.append("")
            elif isinstance(value, bool):
                row.append("1" if value else "0")
            else:
                row.append(format_float(value))
        return row


def horizon_bound(horizon, t):
    """(zeta_lower - t)^-1 before the horizon, None after it."""
    if not horizon.finite:
        return 0.0
    if t >= horizon.zeta_lower:
        return None
    return 1.0 / (horizon.zeta_lower - t)


def global_bound(horizon, v_over_w_max, t):
    """alpha exp(2 C alpha t), or None without v."""
    if v_over_w_max is None:
        return None
    return horizon.alpha * np.exp(2.0 * v_over_w_max * horizon.alpha * t)


def _within(value, bound, tolerance):
    if bound is None:
        return None
    return bool(value <= (1.0 + tolerance) * bound)


def measure(t, state, defect, model, horizon, clip_mass=0.0):
    """Diagnostics of one live StateMeasure and its DefectState; eta is the one cached on the defect state."""
    m = model.num_classes
    w = model.weights
    grid = state.grid
    weight_moment = bracket(w[:m], state)
    w2_sup = norm_inf(bracket(w[:m] ** 2, state))
    tolerance = solver_setting("MONITOR_TOLERANCE")
    return DiagnosticsRow(
        t=float(t),
        mass_mu=total_mass(state),
        mass_lambda=total_mass(defect),
        eta_l1=norm_l1(defect.eta, grid),
        wmom_l1=norm_l1(weight_moment, grid),
        wmom_inf=norm_inf(weight_moment),
        w2_sup=w2_sup,
        bound_horizon_ok=_within(w2_sup, horizon_bound(horizon, t), tolerance),
        bound_global_ok=_within(w2_sup, global_bound(horizon, model.v_over_w_max, t), tolerance),
        clip_mass=float(clip_mass),
    )

"""
Structural checks on a Model.

Every check is exhaustive over live pairs 1 <= i, j <= M; failures are
collected as witnesses rather than raised.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from core.conf import solver_setting

logger = logging.getLogger(__name__)

MANDATORY_CHECKS = (
    "symmetric",
    "weights_positive",
    "kernel_dominated",
    "diffusivity_K_decreasing",
    "phi_sublinear_sampled",
)


@dataclass(frozen=True)
class Violation:
    check: str
    i: int
    j: int
    value: float

    def to_dict(self):
        return {"check": self.check, "i": self.i, "j": self.j, "value": self.value}


@dataclass(frozen=True)
class SubadditivityResult:
    ok: bool
    witness: tuple | None = None

    def __bool__(self):
        return self.ok


@dataclass
class AdmissibilityReport:
    symmetric: bool = True
    weights_positive: bool = True
    kernel_dominated: bool = True
    worst_domination_ratio: float = 0.0
    diffusivity_K_decreasing: bool = True
    phi_sublinear_sampled: bool = True
    vw_bound: bool | None = None
    worst_vw_ratio: float | None = None
    v_over_w_max: float | None = None
    avw_subadditive: bool | None = None
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        """True iff every mandatory check passes; the v bound checks are informational."""
        return not self.failed_mandatory()

    @property
    def global_existence(self):
        """K <= w v + v w plus subadditivity of a^(-d/2) v w, the no-blow-up criterion."""
        return bool(self.vw_bound and self.avw_subadditive)

    def failed_mandatory(self):
        return [name for name in MANDATORY_CHECKS if not getattr(self, name)]

    def witnesses(self, check):
        return [v for v in self.violations if v.check == check]

    def to_dict(self):
        return {
            "passed": self.passed,
            "symmetric": self.symmetric,
            "weights_positive": self.weights_positive,
            "kernel_dominated": self.kernel_dominated,
            "worst_domination_ratio": self.worst_domination_ratio,
            "diffusivity_K_decreasing": self.diffusivity_K_decreasing,
            "phi_sublinear_sampled": self.phi_sublinear_sampled,
            "vw_bound": self.vw_bound,
            "worst_vw_ratio": self.worst_vw_ratio,
            "v_over_w_max": self.v_over_w_max,
            "avw_subadditive": self.avw_subadditive,
            "global_existence": self.global_existence,
            "violations": [v.to_dict() for v in self.violations],
        }


def check_subadditive(f, num_classes):
    """
    Return whether f_{i+j} <= f_i + f_j (+ tolerance) for all 1 <= i, j <= num_classes.

    f is a per-class vector over classes 1..2*num_classes; the witness is the
    first failing (i, j) pair in row-major order.
    """
    f = np.asarray(f, dtype=float)
    if f.size < 2 * num_classes:
        raise ValueError(f"f covers {f.size} classes, need {2 * num_classes}")
    tol = solver_setting("SUBADDITIVITY_TOL")
    idx = np.arange(num_classes)
    # product class i + j has zero-based index i + j + 1
    excess = f[idx[:, None] + idx[None, :] + 1] - (f[:num_classes, None] + f[None, :num_classes])
    bad = np.argwhere(excess > tol)
    if bad.size:
        i, j = bad[0]
        return SubadditivityResult(False, (int(i) + 1, int(j) + 1))
    return SubadditivityResult(True)


def _record(report, check, pairs, values):
    for (i, j), value in zip(pairs, values, strict=True):
        report.violations.append(Violation(check, int(i) + 1, int(j) + 1, float(value)))


def _check_phi(model, report):
    masses = model.masses
    tol = solver_setting("SUBADDITIVITY_TOL")
    if model.phi.is_tabulated:
        # discrete sublinearity: phi(m_j) <= (m_j / m_i) phi(m_i) for j >= i
        values = model.phi(masses)
        ratio = masses[None, :] / masses[:, None]
        excess = values[None, :] - ratio * values[:, None] * (1.0 + tol)
        excess = np.triu(excess, k=1)
        bad = np.argwhere(excess > 0)
        if bad.size:
            report.phi_sublinear_sampled = False
            _record(report, "phi_sublinear_sampled", bad[:1], [excess[tuple(bad[0])]])
        return
    scales = np.logspace(0.0, np.log10(solver_setting("PHI_SAMPLE_MAX")), solver_setting("PHI_SAMPLE_POINTS"))
    scaled = model.phi(scales[None, :] * masses[:, None])
    bound = scales[None, :] * model.phi(masses)[:, None] * (1.0 + tol)
    bad = np.argwhere(scaled > bound)
    if bad.size:
        report.phi_sublinear_sampled = False
        i, k = bad[0]
        # witness: (class, sample index of lambda)
        report.violations.append(Violation("phi_sublinear_sampled", int(i) + 1, int(k), float(scales[k])))


def check_admissible(model):
    """Exhaustively check the structural hypotheses on (a, K, w, phi, v)."""
    report = AdmissibilityReport()
    m = model.num_classes
    kernel = model.kernel
    w = model.weights
    a = model.diffusivity

    asym = np.argwhere(kernel != kernel.T)
    if asym.size:
        report.symmetric = False
        _record(report, "symmetric", asym[:1], [kernel[tuple(asym[0])] - kernel.T[tuple(asym[0])]])

    if np.any(w <= 0):
        report.weights_positive = False
        i = int(np.argmax(w <= 0))
        report.violations.append(Violation("weights_positive", i + 1, i + 1, float(w[i])))

    live = kernel[:m, :m]
    ratio = live / np.outer(w[:m], w[:m])
    report.worst_domination_ratio = float(ratio.max())
    bad = np.argwhere(ratio > 1.0 + solver_setting("DOMINATION_TOL"))
    if bad.size:
        report.kernel_dominated = False
        _record(report, "kernel_dominated", bad[:1], [ratio[tuple(bad[0])]])

    idx = np.arange(m)
    product = a[idx[:, None] + idx[None, :] + 1]
    bad = np.argwhere(product > np.minimum(a[:m, None], a[None, :m]))
    if bad.size:
        report.diffusivity_K_decreasing = False
        _record(report, "diffusivity_K_decreasing", bad[:1], [product[tuple(bad[0])]])

    _check_phi(model, report)

    if model.v_weights is not None:
        v = model.v_weights
        bound = np.outer(w[:m], v[:m]) + np.outer(v[:m], w[:m])
        with np.errstate(divide="ignore", invalid="ignore"):
            vw_ratio = np.where(bound > 0, live / bound, np.where(live > 0, np.inf, 0.0))
        report.worst_vw_ratio = float(vw_ratio.max())
        report.v_over_w_max = model.v_over_w_max
        bad = np.argwhere(vw_ratio > 1.0 + solver_setting("DOMINATION_TOL"))
        report.vw_bound = not bad.size
        if bad.size:
            _record(report, "vw_bound", bad[:1], [vw_ratio[tuple(bad[0])]])

        g = a ** (-model.dim / 2.0) * v * w
        result = check_subadditive(g, m)
        report.avw_subadditive = result.ok
        if not result.ok:
            i, j = result.witness
            report.violations.append(Violation("avw_subadditive", i, j, float(g[i + j - 1] - g[i - 1] - g[j - 1])))

    if report.passed:
        logger.debug(f"Model with M={m} passed admissibility (worst K/ww ratio {report.worst_domination_ratio:.6f})")
    else:
        logger.warning(f"Model with M={m} failed admissibility checks: {', '.join(report.failed_mandatory())}")
    return report

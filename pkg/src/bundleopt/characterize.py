"""When is pure bundling optimal?

``decide_pure_bundling`` compares the optimal sales volume of the grand bundle
with that of every smaller bundle. The remaining functions give the local
(single-point) ratio test, a global ratio-shape classifier, and the two
results specific to additive values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .assumptions import AssumptionReport, check_assumptions
from .core import Bundle, MarketInstance, TypeDistribution, ValueModel, all_bundles
from .errors import InputDomainError, PreconditionError
from .volumes import DEFAULT_GRID, optimal_cutoff

DEFAULT_TOL = 1e-6
DERIV_STEP = 1e-5
BISECT_XTOL = 1e-9

BOUNDARY_NOTE = (
    "volumes tie within tolerance; under strict quasi-concavity alone the optimal "
    "strategy is undetermined in this case"
)


class Decision(str, enum.Enum):
    PURE_OPTIMAL = "PureOptimal"
    PURE_SUBOPTIMAL = "PureSubOptimal"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class BundlingVerdict:
    decision: Decision
    d_grand: float
    d_best_other: float
    best_other: Bundle | None
    tolerance: float
    assumption_report: AssumptionReport
    volumes: dict[str, float] = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "decision": self.decision.value,
            "d_grand": self.d_grand,
            "d_best_other": self.d_best_other,
            "best_other": None if self.best_other is None else self.best_other.bitstring(),
            "tolerance": self.tolerance,
            "volumes": self.volumes,
            "note": self.note,
            "assumption_report": self.assumption_report.to_dict(),
        }


def classify_volumes(d_grand: float, d_best_other: float, tol: float) -> Decision:
    if d_grand > d_best_other + tol:
        return Decision.PURE_OPTIMAL
    if d_grand < d_best_other - tol:
        return Decision.PURE_SUBOPTIMAL
    return Decision.BOUNDARY


def decide_pure_bundling(instance: MarketInstance, tol: float = DEFAULT_TOL, grid_size: int = DEFAULT_GRID,
                         report: AssumptionReport | None = None) -> BundlingVerdict:
    """Pure bundling is optimal when the grand bundle, sold alone at its best
    price, sells strictly more than any other bundle sold alone; it is not
    optimal when some other bundle sells strictly more.

    Assumption failures do not stop the computation; they are carried in
    ``assumption_report``.
    """
    if report is None:
        report = check_assumptions(instance)
    volumes = {b.bitstring(): optimal_cutoff(instance, b, grid_size=grid_size).d_star
               for b in all_bundles(instance.n)}
    grand = instance.grand
    d_grand = volumes[grand.bitstring()]
    best_other, d_other = None, 0.0
    for b in all_bundles(instance.n):
        if b.is_grand:
            continue
        d = volumes[b.bitstring()]
        if best_other is None or d > d_other:  # strict: smallest mask wins ties
            best_other, d_other = b, d
    decision = classify_volumes(d_grand, d_other, tol)
    note = BOUNDARY_NOTE if decision is Decision.BOUNDARY else ""
    return BundlingVerdict(decision, d_grand, d_other, best_other, tol, report, volumes, note)


def hazard(dist: TypeDistribution, t):
    """``f(t) / (1 - F(t))``; infinite at ``t = 1``."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr >= 1.0):
        raise InputDomainError("hazard rate is infinite at t = 1")
    out = dist.pdf(arr) / dist.survival(arr)
    return float(out) if arr.ndim == 0 else out


def log_slope(model: ValueModel, b: Bundle, t, h: float = DERIV_STEP):
    """Central-difference ``d/dt log v(b, t)``."""
    t = np.asarray(t, dtype=float)
    out = (np.log(model.value(b, t + h)) - np.log(model.value(b, t - h))) / (2 * h)
    return float(out) if out.ndim == 0 else out


class RatioVerdict(str, enum.Enum):
    GREATER = "greater"  # reference bundle has the strictly larger optimal volume
    NOT_GREATER = "not_greater"
    BOUNDARY = "boundary"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RatioReport:
    t_tilde: float
    lhs: float
    rhs: float
    verdict: RatioVerdict
    reason: str = ""

    def to_dict(self) -> dict:
        return {"t_tilde": self.t_tilde, "lhs": self.lhs, "rhs": self.rhs,
                "verdict": self.verdict.value, "reason": self.reason}


def local_ratio_monotonicity(instance: MarketInstance, b: Bundle, reference: Bundle, h: float = DERIV_STEP,
                             xtol: float = BISECT_XTOL, tol: float = DEFAULT_TOL,
                             scan_size: int = 4097) -> RatioReport:
    """Compare ``D*(reference)`` with ``D*(b)`` from primitives at one point.

    ``t_tilde`` solves ``d log v(reference, t)/dt = hazard(t)``; the reference
    bundle sells strictly more iff ``d log v(b, t_tilde)/dt`` exceeds the
    hazard there. Requires zero production costs.
    """
    if not instance.zero_cost:
        raise PreconditionError("the local ratio test needs zero production costs")
    model, dist = instance.model, instance.dist
    nan = float("nan")

    def gap(t):
        return log_slope(model, reference, t, h) - hazard(dist, t)

    scan = np.linspace(h, 1 - 2 * h, scan_size)
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (model.value(reference, scan - h) > 0) & (model.value(reference, scan + h) > 0)
        ts = scan[ok]
        if len(ts) < 2:
            return RatioReport(nan, nan, nan, RatioVerdict.INCONCLUSIVE, "reference value is not positive")
        g = gap(ts)
    fin = np.isfinite(g) & (g != 0)
    ts, g = ts[fin], g[fin]
    flips = np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:]))
    if len(flips) != 1:
        reason = "no hazard crossing on (0, 1)" if len(flips) == 0 else f"{len(flips)} hazard crossings"
        return RatioReport(nan, nan, nan, RatioVerdict.INCONCLUSIVE, reason)

    a, c = float(ts[flips[0]]), float(ts[flips[0] + 1])
    ga = g[flips[0]]
    while c - a > xtol:
        m = (a + c) / 2
        gm = gap(m)
        if gm == 0:
            a = c = m
            break
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            c = m
    t_tilde = (a + c) / 2
    rhs = hazard(dist, t_tilde)
    if model.value(b, t_tilde - h) <= 0 or model.value(b, t_tilde + h) <= 0:
        return RatioReport(t_tilde, nan, rhs, RatioVerdict.INCONCLUSIVE, f"value of {b} not positive at t_tilde")
    lhs = log_slope(model, b, t_tilde, h)
    if abs(lhs - rhs) <= tol:
        verdict = RatioVerdict.BOUNDARY
    elif lhs > rhs:
        verdict = RatioVerdict.GREATER
    else:
        verdict = RatioVerdict.NOT_GREATER
    return RatioReport(t_tilde, lhs, rhs, verdict)


class RatioShape(str, enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    CONSTANT = "Constant"
    NON_MONOTONE = "NonMonotone"


@dataclass(frozen=True)
class GlobalRatioResult:
    shape: RatioShape
    decreasing_pair: tuple[float, float] | None
    increasing_pair: tuple[float, float] | None
    excluded: int
    note: str = ""

    @property
    def weakly_increasing(self) -> bool:
        return self.decreasing_pair is None

    @property
    def weakly_decreasing(self) -> bool:
        return self.increasing_pair is None


def global_ratio_monotonicity(model: ValueModel, b: Bundle, grid_size: int = 4097, tol: float = 1e-12,
                              eps: float = 1e-12) -> GlobalRatioResult:
    """Shape of ``v(b,t) / v(grand,t)`` as a function of ``v(grand,t)``.

    Grid points where the grand-bundle value is not above ``eps`` are left out
    and counted in ``excluded``.
    """
    lo, hi = model.domain
    grid = np.linspace(lo, hi, grid_size)
    g = model.value(Bundle.grand(model.n), grid)
    keep = g > eps
    excluded = int((~keep).sum())
    grid, g = grid[keep], g[keep]
    r = model.value(b, grid) / g
    order = np.argsort(g, kind="stable")
    rs, ts, gs = r[order], grid[order], g[order]
    moved = np.diff(gs) > 0
    dr = np.diff(rs)
    dec = np.flatnonzero(moved & (dr < -tol))
    inc = np.flatnonzero(moved & (dr > tol))
    dec_pair = None if len(dec) == 0 else (float(ts[dec[0]]), float(ts[dec[0] + 1]))
    inc_pair = None if len(inc) == 0 else (float(ts[inc[0]]), float(ts[inc[0] + 1]))
    if dec_pair is None and inc_pair is None:
        shape = RatioShape.CONSTANT
    elif dec_pair is None:
        shape = RatioShape.INCREASING
    elif inc_pair is None:
        shape = RatioShape.DECREASING
    else:
        shape = RatioShape.NON_MONOTONE
    note = f"{excluded} grid points with non-positive grand-bundle value excluded" if excluded else ""
    return GlobalRatioResult(shape, dec_pair, inc_pair, excluded, note)


def _require_additive(model: ValueModel, grid: np.ndarray, tol: float) -> None:
    singles = [model.value(Bundle.of(model.n, i), grid) for i in range(1, model.n + 1)]
    for b in all_bundles(model.n):
        total = sum(singles[i - 1] for i in b.products)
        v = model.value(b, grid)
        if np.any(np.abs(v - total) > tol * (1 + np.abs(v))):
            raise PreconditionError(f"model is not additive: v({b}) differs from the sum of its components")


@dataclass(frozen=True)
class ProportionalityResult:
    proportional: bool
    ratios: dict[str, float]
    counterexample: tuple[Bundle, float, float] | None = None


def additive_proportionality(model: ValueModel, tol: float = 1e-9, grid_size: int = 4097) -> ProportionalityResult:
    """Is every ``v(b,t) / v(grand,t)`` constant in ``t``? Additive models only."""
    lo, hi = model.domain
    grid = np.linspace(lo, hi, grid_size)
    _require_additive(model, grid, tol)
    g = model.value(Bundle.grand(model.n), grid)
    keep = g > tol
    grid, g = grid[keep], g[keep]
    ratios: dict[str, float] = {}
    for b in all_bundles(model.n):
        r = model.value(b, grid) / g
        if r.max() - r.min() > tol:
            i, j = int(np.argmin(r)), int(np.argmax(r))
            return ProportionalityResult(False, ratios, (b, float(grid[i]), float(grid[j])))
        ratios[b.bitstring()] = float(np.mean(r))
    return ProportionalityResult(True, ratios)


@dataclass(frozen=True)
class AdditiveVerdict:
    pure_optimal: bool
    label: str
    volumes: dict[str, float]
    witness: Bundle | None
    assumption_report: AssumptionReport


def additive_pure_bundling(instance: MarketInstance, tol: float = DEFAULT_TOL, grid_size: int = DEFAULT_GRID,
                           additivity_tol: float = 1e-9) -> AdditiveVerdict:
    """With additive values, pure bundling is optimal (by indifference) exactly
    when every bundle and its complement have equal optimal volumes."""
    model = instance.model
    lo, hi = model.domain
    _require_additive(model, np.linspace(lo, hi, grid_size), additivity_tol)
    report = check_assumptions(instance)
    volumes = {b.bitstring(): optimal_cutoff(instance, b, grid_size=grid_size).d_star
               for b in all_bundles(instance.n)}
    for b in all_bundles(instance.n):
        comp = b.complement()
        if comp.is_empty:
            continue
        if abs(volumes[b.bitstring()] - volumes[comp.bitstring()]) > tol:
            return AdditiveVerdict(False, "sub_optimal", volumes, b, report)
    return AdditiveVerdict(True, "pure_optimal_by_indifference", volumes, None, report)


@dataclass(frozen=True)
class SweepRow:
    value: float
    d_grand: float
    d_best_other: float
    decision: Decision
    assumptions_passed: bool


def sweep(instance: MarketInstance, param: str, values: Iterable[float], tol: float = DEFAULT_TOL,
          grid_size: int = DEFAULT_GRID) -> list[SweepRow]:
    """Re-run the pure-bundling verdict while one model parameter varies."""
    model = instance.model
    if not hasattr(model, "with_params"):
        raise PreconditionError(f"{type(model).__name__} has no sweepable parameters")
    rows = []
    for x in values:
        inst = replace(instance, model=model.with_params(**{param: float(x)}))
        v = decide_pure_bundling(inst, tol, grid_size)
        rows.append(SweepRow(float(x), v.d_grand, v.d_best_other, v.decision, v.assumption_report.passed))
    return rows

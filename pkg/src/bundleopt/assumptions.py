"""Grid checks for the monotonicity and quasi-concavity assumptions, the
primitive single-crossing condition, and type normalization.

Every failing check carries a witness (bundle plus the offending types) that
can be re-evaluated to reproduce the violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Bundle, MarketInstance, TabulatedModel, ValueModel, all_bundles
from .errors import DegenerateModelError, PreconditionError
from .search import single_peak_violation
from .volumes import profit_at_cutoff

DEFAULT_GRID = 4097
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Witness:
    bundle: Bundle
    conditional: bool  # True: the curve conditions on holding the complement
    types: tuple[float, ...]
    values: tuple[float, ...]
    reason: str

    def to_dict(self) -> dict:
        return {
            "bundle": self.bundle.bitstring(),
            "conditional": self.conditional,
            "types": list(self.types),
            "values": list(self.values),
            "reason": self.reason,
        }


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    witness: Witness | None = None

    def to_dict(self) -> dict:
        return {"passed": self.passed, "witness": None if self.witness is None else self.witness.to_dict()}


@dataclass(frozen=True)
class AssumptionReport:
    monotonicity: CheckResult
    quasiconcavity: CheckResult
    grid_size: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.monotonicity.passed and self.quasiconcavity.passed

    def to_dict(self) -> dict:
        return {
            "monotonicity": self.monotonicity.to_dict(),
            "quasiconcavity": self.quasiconcavity.to_dict(),
            "grid_size": self.grid_size,
            "tolerance": self.tolerance,
        }


def _type_grid(model: ValueModel, grid_size: int) -> np.ndarray:
    if grid_size < 3:
        raise PreconditionError(f"grid_size must be >= 3, got {grid_size}")
    lo, hi = model.domain
    return np.linspace(lo, hi, grid_size)


def _curves(model: ValueModel, grid: np.ndarray):
    """Yield ``(bundle, conditional, values)`` in mask order, plain curve first."""
    for b in all_bundles(model.n):
        yield b, False, model.value(b, grid)
        comp = b.complement()
        if not comp.is_empty:
            yield b, True, model.conditional_value(b, grid, comp)


def model_monotonicity(model: ValueModel, grid_size: int = DEFAULT_GRID, tol: float = DEFAULT_TOL) -> CheckResult:
    """Monotonicity check on a bare value model (no costs or distribution needed)."""
    grid = _type_grid(model, grid_size)
    grand = Bundle.grand(model.n)
    g = model.value(grand, grid)

    if g.max() - g.min() <= tol:
        for b, cond, c in _curves(model, grid):
            if c.max() - c.min() > tol:
                i, j = int(np.argmin(c)), int(np.argmax(c))
                return CheckResult(False, Witness(
                    b, cond, (float(grid[i]), float(grid[j])), (float(c[i]), float(c[j])),
                    "grand-bundle value is constant so types cannot be ordered, yet this curve varies"))
        return CheckResult(False, Witness(
            grand, False, (float(grid[0]), float(grid[-1])), (float(g[0]), float(g[-1])),
            "grand-bundle value is constant; ordering of types is undefined"))

    order = np.argsort(g, kind="stable")
    lo_idx, hi_idx = order[:-1], order[1:]
    dg = g[hi_idx] - g[lo_idx]
    tie = dg <= tol
    for b, cond, c in _curves(model, grid):
        dc = c[hi_idx] - c[lo_idx]
        bad_tie = tie & (np.abs(dc) > tol)
        bad_dec = ~tie & (dc < -tol)
        bad_strict = ~tie & (c[hi_idx] > tol) & (dc <= tol)
        bad = bad_tie | bad_dec | bad_strict
        if np.any(bad):
            k = int(np.argmax(bad))
            i, j = int(lo_idx[k]), int(hi_idx[k])
            if bad_tie[k]:
                reason = "equal grand-bundle values but different bundle values"
            elif bad_dec[k]:
                reason = "bundle value decreases while grand-bundle value increases"
            else:
                reason = "positive bundle value is not strictly increasing"
            return CheckResult(False, Witness(
                b, cond, (float(grid[i]), float(grid[j])), (float(c[i]), float(c[j])), reason))
    return CheckResult(True)


def check_monotonicity(instance: MarketInstance, grid_size: int = DEFAULT_GRID,
                       tol: float = DEFAULT_TOL) -> CheckResult:
    return model_monotonicity(instance.model, grid_size, tol)


def check_quasiconcavity(instance: MarketInstance, grid_size: int = DEFAULT_GRID,
                         tol: float = DEFAULT_TOL) -> CheckResult:
    """Single-peakedness of every profit-vs-cutoff curve over the types that
    leave strictly positive demand (``t < 1``)."""
    grid = _type_grid(instance.model, grid_size)[:-1]
    for b in all_bundles(instance.n):
        comp = b.complement()
        endowments = [(False, Bundle.empty(instance.n))]
        if not comp.is_empty:
            endowments.append((True, comp))
        for cond, given in endowments:
            prof = profit_at_cutoff(instance, b, grid, given)
            hit = single_peak_violation(prof, tol)
            if hit is not None:
                return CheckResult(False, Witness(
                    b, cond, tuple(float(grid[x]) for x in hit), tuple(float(prof[x]) for x in hit),
                    "profit dips between two higher points (more than one peak)"))
    return CheckResult(True)


def check_assumptions(instance: MarketInstance, grid_size: int = DEFAULT_GRID,
                      tol: float = DEFAULT_TOL) -> AssumptionReport:
    return AssumptionReport(
        check_monotonicity(instance, grid_size, tol),
        check_quasiconcavity(instance, grid_size, tol),
        grid_size,
        tol,
    )


@dataclass(frozen=True)
class PrimitiveCondition:
    passed: bool
    crossings: int
    crossing_types: tuple[float, ...]
    first_sign: int  # +1 when the curve starts above zero


def check_primitive_condition(instance: MarketInstance, b: Bundle,
                              grid_size: int = DEFAULT_GRID) -> PrimitiveCondition:
    """Count sign changes of ``d/dt log(v(b,t) - cost(b)) - f(t)/(1-F(t))``.

    Passes when the curve crosses zero exactly once, from above. Only the
    types with a positive margin are used, and ``t = 1`` is dropped because
    the hazard is infinite there.
    """
    grid = _type_grid(instance.model, grid_size)[:-1]
    margin = instance.model.value(b, grid) - instance.bundle_cost(b)
    pos = margin > 0
    if pos.sum() < 3:
        raise PreconditionError(f"bundle {b} has no positive-margin interval; log margin is undefined")

    # split into contiguous runs of positive margin
    edges = np.flatnonzero(np.diff(pos.astype(int)))
    bounds = np.concatenate([[0], edges + 1, [len(pos)]])
    g_parts, t_parts = [], []
    for s, e in zip(bounds[:-1], bounds[1:]):
        if not pos[s] or e - s < 2:
            continue
        t = grid[s:e]
        dlog = np.gradient(np.log(margin[s:e]), t)
        f = instance.dist.pdf(t)
        hz = f / instance.dist.survival(t)
        g_parts.append(dlog - hz)
        t_parts.append(t)
    if not g_parts:
        raise PreconditionError(f"bundle {b} has no positive-margin interval of usable length")

    crossings, first_sign = 0, 0
    where: list[float] = []
    for g, t in zip(g_parts, t_parts):
        nz = g != 0
        gs, ts = g[nz], t[nz]
        if len(gs) == 0:
            continue
        signs = np.sign(gs)
        if first_sign == 0:
            first_sign = int(signs[0])
        flips = np.flatnonzero(signs[:-1] != signs[1:])
        crossings += len(flips)
        for k in flips:
            g0, g1 = gs[k], gs[k + 1]
            where.append(float(ts[k] + (ts[k + 1] - ts[k]) * g0 / (g0 - g1)))
    return PrimitiveCondition(crossings == 1 and first_sign > 0, crossings, tuple(where), first_sign)


@dataclass(frozen=True)
class TypeNormalization:
    """Re-indexing of a model onto ``tau in [0, 1]`` ordered by grand-bundle value."""

    model: TabulatedModel
    v_min: float
    v_max: float
    source: ValueModel = field(repr=False)

    def tau(self, t):
        g = self.source.value(Bundle.grand(self.source.n), t)
        return (g - self.v_min) / (self.v_max - self.v_min)

    def grand_value(self, tau):
        """Invert ``tau`` back to a grand-bundle value."""
        return self.v_min + np.asarray(tau) * (self.v_max - self.v_min)


def normalize_types(model: ValueModel, grid_size: int = DEFAULT_GRID, tol: float = DEFAULT_TOL) -> TypeNormalization:
    """Map types to ``tau(t) = (v(grand,t) - min) / (max - min)`` and tabulate
    every bundle value against ``tau``."""
    grid = _type_grid(model, grid_size)
    grand = Bundle.grand(model.n)
    g = model.value(grand, grid)
    v_min, v_max = float(g.min()), float(g.max())
    if v_max - v_min <= tol:
        raise DegenerateModelError("grand-bundle value is constant; types cannot be normalized")
    mono = model_monotonicity(model, grid_size, tol)
    if not mono.passed:
        raise PreconditionError(f"monotonicity fails, no sufficient statistic exists: {mono.witness.reason} "
                                f"(bundle {mono.witness.bundle}, types {mono.witness.types})")
    tau = (g - v_min) / (v_max - v_min)
    order = np.argsort(tau, kind="stable")
    knots = tau[order]
    knots[0], knots[-1] = 0.0, 1.0
    table = {b.mask: model.value(b, grid)[order] for b in all_bundles(model.n)}
    return TypeNormalization(TabulatedModel(knots, table, model.n), v_min, v_max, model)


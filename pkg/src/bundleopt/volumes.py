"""Single-bundle profit curves, optimal cutoff types and optimal sales volumes.

Selling only bundle ``b`` (to types already holding ``given``) at the price
that makes type ``t`` indifferent sells to ``[t, 1]``; the profit of that
choice is ``profit_at_cutoff``. Maximizing it over ``t`` gives the optimal
cutoff, the optimal volume ``1 - F(t*)`` and the optimal price.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bundle, MarketInstance
from .errors import ContractViolation, QuasiConcavityError
from .search import grid_then_golden, single_peak_violation

DEFAULT_GRID = 4097
DEFAULT_XTOL = 1e-8
PLATEAU_TOL = 1e-12


def _endowment(instance: MarketInstance, given: Bundle | None) -> Bundle:
    return Bundle.empty(instance.n) if given is None else given


def profit_at_cutoff(instance: MarketInstance, b: Bundle, t, given: Bundle | None = None):
    """``(1 - F(t)) * (v(b, t | given) - cost(b))``."""
    given = _endowment(instance, given)
    if not b.isdisjoint(given):
        raise ContractViolation(f"bundle {b} overlaps endowment {given}")
    margin = instance.model.conditional_value(b, t, given) - instance.bundle_cost(b)
    return instance.dist.survival(t) * margin


@dataclass(frozen=True)
class CutoffSolution:
    bundle: Bundle
    endowment: Bundle
    t_star: float
    d_star: float
    p_star: float
    profit: float
    no_sale: bool = False
    plateau: bool = False

    def to_dict(self) -> dict:
        return {
            "bundle": self.bundle.bitstring(),
            "endowment": self.endowment.bitstring(),
            "t_star": self.t_star,
            "d_star": self.d_star,
            "p_star": self.p_star,
            "profit": self.profit,
            "no_sale": self.no_sale,
            "plateau": self.plateau,
        }


def optimal_cutoff(instance: MarketInstance, b: Bundle, given: Bundle | None = None,
                   grid_size: int = DEFAULT_GRID, xtol: float = DEFAULT_XTOL) -> CutoffSolution:
    """Profit-maximizing cutoff type for selling ``b`` alone.

    Dense grid scan followed by golden-section refinement between the grid
    neighbours of the scan's argmax. If no cutoff earns positive profit the
    solution is flagged ``no_sale`` with ``t_star = 1`` and zero volume.
    """
    given = _endowment(instance, given)
    if b.is_empty:
        raise ContractViolation("optimal cutoff of the empty bundle is undefined")
    if not b.isdisjoint(given):
        raise ContractViolation(f"bundle {b} overlaps endowment {given}")

    def curve(t):
        return profit_at_cutoff(instance, b, t, given)

    t_best, best, grid, vals = grid_then_golden(curve, 0.0, 1.0, grid_size, xtol)
    model = instance.model
    if best <= 0.0:
        return CutoffSolution(b, given, 1.0, 0.0, float(model.conditional_value(b, 1.0, given)), 0.0,
                              no_sale=True)

    plateau = False
    near = vals >= best - PLATEAU_TOL
    k = int(np.argmax(vals))
    if near[k]:
        lo = hi = k
        while lo > 0 and near[lo - 1]:
            lo -= 1
        while hi < len(vals) - 1 and near[hi + 1]:
            hi += 1
        if hi - lo >= 2:
            plateau = True
            t_best = float((grid[lo] + grid[hi]) / 2)
            best = float(curve(t_best))

    d_star = float(instance.dist.survival(t_best))
    p_star = float(model.conditional_value(b, t_best, given))
    return CutoffSolution(b, given, t_best, d_star, p_star, d_star * (p_star - instance.bundle_cost(b)),
                          plateau=plateau)


def optimal_volume(instance: MarketInstance, b: Bundle, given: Bundle | None = None, **kw) -> float:
    return optimal_cutoff(instance, b, given, **kw).d_star


@dataclass(frozen=True)
class ArgmaxOrder:
    argmax_first: float
    argmax_second: float
    argmax_sum: float
    sandwiched: bool


def argmax_order(f1, f2, grid, tol: float = 1e-9) -> ArgmaxOrder:
    """Locate the argmaxes of ``f1``, ``f2`` and ``f1 + f2`` on a shared grid
    and certify that the sum peaks between the other two (within one step).

    All three curves must be single-peaked on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    step = float(np.max(np.diff(grid))) if len(grid) > 1 else 0.0
    args = []
    for name, f in (("f1", f1), ("f2", f2), ("f1+f2", f1 + f2)):
        bad = single_peak_violation(f, tol)
        if bad is not None:
            triple = tuple(float(grid[i]) for i in bad)
            raise QuasiConcavityError(f"{name} is not single-peaked: witness types {triple}", triple)
        args.append(float(grid[int(np.argmax(f))]))
    a1, a2, a12 = args
    lo, hi = min(a1, a2), max(a1, a2)
    return ArgmaxOrder(a1, a2, a12, lo - step <= a12 <= hi + step)

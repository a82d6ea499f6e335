"""Nonlinear pricing as bundling along a chain.

A ladder of quantity (or quality) levels ``q_1 < ... < q_L`` is treated as
``L`` units of one good, where holding units ``1..k`` means consuming level
``q_k``. The optimal schedule is then built level by level from conditional
optimal volumes: start with the batch that has the largest optimal volume on
its own, then repeatedly add the batch with the largest volume conditional on
what is already held.

Quantities in this module are level indices ``k = 0..L`` (``0`` buys nothing).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Bundle, CountValueModel, MarketInstance, TypeDistribution, Uniform01, quality_root
from .errors import ConditionIVViolation, ContractViolation, ModelFormatError
from .grid import TIE_TOL, TypeGrid, choose, payoff_integral, split_cells
from .volumes import DEFAULT_GRID, DEFAULT_XTOL, CutoffSolution, optimal_cutoff

ARGMAX_TOL = 1e-6
TYPE_STEPS = 20001
SEARCH_TYPE_STEPS = 2001
PRICE_STEPS = 201
REFINEMENTS = 2
COMBO_BUDGET = 20000


@dataclass(frozen=True)
class QuantityInstance:
    """Levels, a value ``v(q, t)`` with ``v(0, t) = 0``, cumulative costs and a type distribution.

    ``level_costs[k-1]`` is the cost of serving one buyer at level ``k``; it
    may be nonlinear in the level but must not decrease.
    """

    levels: tuple[float, ...]
    value_fn: Callable = field(repr=False)
    level_costs: tuple[float, ...] | None = None
    dist: TypeDistribution = field(default_factory=Uniform01)

    def __post_init__(self):
        levels = tuple(float(q) for q in self.levels)
        object.__setattr__(self, "levels", levels)
        costs = (0.0,) * len(levels) if self.level_costs is None else tuple(float(c) for c in self.level_costs)
        object.__setattr__(self, "level_costs", costs)
        if len(costs) != len(levels):
            raise ModelFormatError(f"expected {len(levels)} level costs, got {len(costs)}")
        if any(not math.isfinite(c) for c in costs) or any(b < a for a, b in zip((0.0,) + costs, costs)):
            raise ModelFormatError("level costs must be finite, >= 0 and nondecreasing in the level")
        object.__setattr__(self, "_model", CountValueModel(levels, self.value_fn))  # validates the levels

    @property
    def size(self) -> int:
        return len(self.levels)

    def value(self, k: int, t):
        """Value of consuming level index ``k`` (``0`` is worth nothing)."""
        t = np.asarray(t, dtype=float)
        if k == 0:
            return np.zeros_like(t)
        return np.asarray(self.value_fn(self.levels[k - 1], t), dtype=float)

    def cost(self, k: int) -> float:
        return 0.0 if k == 0 else self.level_costs[k - 1]

    def as_market(self) -> MarketInstance:
        unit_costs = np.diff((0.0,) + self.level_costs)
        return MarketInstance(self._model, tuple(unit_costs), self.dist)

    def batch(self, q: int, given: int) -> tuple[Bundle, Bundle]:
        """Units ``given+1 .. given+q`` and the endowment ``1 .. given`` as bundles."""
        n = self.size
        if q < 1 or given < 0 or q + given > n:
            raise ContractViolation(f"batch of {q} on top of {given} exceeds the {n} available levels")
        held = (1 << given) - 1
        return Bundle(((1 << (given + q)) - 1) & ~held, n), Bundle(held, n)


def quality_root_instance(levels: Sequence[float], dist: TypeDistribution | None = None) -> QuantityInstance:
    return QuantityInstance(tuple(levels), quality_root, None, dist or Uniform01())


@dataclass(frozen=True)
class TariffSchedule:
    """Step tariff: every level in ``(breakpoints[i-1], breakpoints[i]]`` costs ``tier_prices[i]``.

    Levels above the last breakpoint are not offered.
    """

    breakpoints: tuple[int, ...]
    tier_prices: tuple[float, ...]
    cutoffs: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.breakpoints) != len(self.tier_prices):
            raise ContractViolation("breakpoints and tier prices differ in length")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])) or (
                self.breakpoints and self.breakpoints[0] < 1):
            raise ContractViolation("breakpoints must be increasing level indices >= 1")

    @property
    def top(self) -> int:
        return self.breakpoints[-1] if self.breakpoints else 0

    def price(self, k: int) -> float:
        if k == 0:
            return 0.0
        for b, p in zip(self.breakpoints, self.tier_prices):
            if k <= b:
                return p
        return math.inf

    def prices(self) -> np.ndarray:
        """``T(k)`` for ``k = 0..top``."""
        return np.array([self.price(k) for k in range(self.top + 1)])

    @classmethod
    def from_level_prices(cls, prices: Sequence[float]) -> "TariffSchedule":
        """Collapse a per-level price list into tiers of equal price."""
        bps, tps = [], []
        for k, p in enumerate(prices, start=1):
            if tps and p == tps[-1]:
                bps[-1] = k
            else:
                bps.append(k)
                tps.append(float(p))
        return cls(tuple(bps), tuple(tps))

    def to_dict(self, qinstance: QuantityInstance | None = None) -> dict:
        d = {"breakpoints": list(self.breakpoints), "tier_prices": list(self.tier_prices),
             "cutoffs": list(self.cutoffs)}
        if qinstance is not None:
            d["quantities"] = [qinstance.levels[k - 1] for k in self.breakpoints]
        return d


def tariff_choice(qinstance: QuantityInstance, schedule: TariffSchedule, t, tie_tol: float = TIE_TOL):
    """Level index each type buys; ties go to the higher level."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    best_k = np.zeros(t_arr.shape, dtype=int)
    best_u = np.zeros(t_arr.shape)
    for k in range(1, schedule.top + 1):
        u = qinstance.value(k, t_arr) - schedule.price(k)
        take = u >= best_u - tie_tol
        best_k = np.where(take, k, best_k)
        best_u = np.where(take, np.maximum(u, best_u), best_u)
    return int(best_k[0]) if np.ndim(t) == 0 else best_k


def conditional_batch_volume(qinstance: QuantityInstance, q: int, given: int, grid_size: int = DEFAULT_GRID,
                             xtol: float = DEFAULT_XTOL) -> CutoffSolution:
    """Optimal cutoff for selling ``q`` more levels to types already at level ``given``."""
    b, held = qinstance.batch(q, given)
    return optimal_cutoff(qinstance.as_market(), b, held, grid_size, xtol)


def construct_optimal_tariff(qinstance: QuantityInstance, grid_size: int = DEFAULT_GRID,
                             tol: float = ARGMAX_TOL) -> TariffSchedule:
    """Build the step tariff from conditional optimal volumes.

    At each step the batch size with the strictly largest conditional volume
    is added and its optimal price is stacked on the previous tier. A tie
    within ``tol`` breaks the uniqueness requirement and raises
    ``ConditionIVViolation``. The recursion ends at the top level, or earlier
    when no extension can be sold at a profit.
    """
    n = qinstance.size
    held, price = 0, 0.0
    bps, tps, cuts = [], [], []
    while held < n:
        sols = [conditional_batch_volume(qinstance, q, held, grid_size) for q in range(1, n - held + 1)]
        if all(s.no_sale for s in sols):
            break
        vols = np.array([s.d_star for s in sols])
        best = float(vols.max())
        tied = [held + q for q, v in enumerate(vols, start=1) if v >= best - tol]
        if len(tied) > 1:
            raise ConditionIVViolation(
                f"condition (iv) violated: optimal volumes conditional on level {held} tie within {tol} "
                f"at levels {tied}", tuple(tied))
        q = int(np.argmax(vols)) + 1
        sol = sols[q - 1]
        held += q
        price += sol.p_star
        bps.append(held)
        tps.append(price)
        cuts.append(sol.t_star)
    return TariffSchedule(tuple(bps), tuple(tps), tuple(cuts))


class _TariffTable:
    def __init__(self, qinstance: QuantityInstance, grid: TypeGrid):
        self.grid = grid
        n = qinstance.size
        self.values = np.stack([qinstance.value(k, grid.knots) for k in range(n + 1)])
        self.costs = np.array([qinstance.cost(k) for k in range(n + 1)])
        self.levels = np.arange(n + 1, dtype=float)

    def profits(self, level_prices: np.ndarray) -> np.ndarray:
        """Profit for each row of per-level prices (shape ``(batch, L)``)."""
        level_prices = np.atleast_2d(level_prices)
        batch = level_prices.shape[0]
        p = np.concatenate([np.zeros((batch, 1)), level_prices], axis=1)
        util = self.values[None, :, :] - p[:, :, None]
        chosen = choose(util, [np.broadcast_to(self.levels, p.shape)])
        split = split_cells(util, chosen, self.grid)
        return payoff_integral(split, chosen, p - self.costs)


def _level_prices(qinstance: QuantityInstance, schedule: TariffSchedule) -> np.ndarray:
    # levels that are not offered are priced out of reach
    ceiling = float(np.max(qinstance.value(qinstance.size, np.linspace(0, 1, 3)))) * 1e6 + 1e6
    return np.array([min(schedule.price(k), ceiling) for k in range(1, qinstance.size + 1)])


def tariff_profit(qinstance: QuantityInstance, schedule: TariffSchedule, type_steps: int = TYPE_STEPS) -> float:
    """Integral of ``T(k(t)) - cost(k(t))`` over types."""
    table = _TariffTable(qinstance, TypeGrid.build(qinstance.dist, type_steps))
    return float(table.profits(_level_prices(qinstance, schedule)[None, :])[0])


@dataclass(frozen=True)
class TariffOracleResult:
    schedule: TariffSchedule
    level_prices: tuple[float, ...]
    profit: float

    def to_dict(self) -> dict:
        return {"schedule": self.schedule.to_dict(), "level_prices": list(self.level_prices), "profit": self.profit}


def _coarse_steps(levels: int, price_steps: int, budget: int) -> int:
    steps = 2
    while steps < price_steps and math.comb(steps + levels, levels) <= budget:
        steps += 1
    return steps


def brute_force_tariff(qinstance: QuantityInstance, price_steps: int = PRICE_STEPS, refinements: int = REFINEMENTS,
                       type_steps: int = TYPE_STEPS, search_type_steps: int = SEARCH_TYPE_STEPS,
                       budget: int = COMBO_BUDGET) -> TariffOracleResult:
    """Search weakly increasing per-level price vectors for the best profit.

    Every nondecreasing vector on a coarse grid over ``[0, max v]`` is tried
    (as many grid points as ``budget`` allows, up to ``price_steps``), then
    the winner is polished by moving each price by ``-d, 0, +d`` while keeping
    the vector nondecreasing, halving ``d`` until it reaches the spacing of a
    ``price_steps`` grid, plus ``refinements`` more passes.
    """
    n = qinstance.size
    grid = TypeGrid.build(qinstance.dist, min(search_type_steps, type_steps))
    table = _TariffTable(qinstance, grid)
    hi = float(table.values.max())
    steps = _coarse_steps(n, price_steps, budget)
    axis = np.linspace(0.0, hi, steps)
    combos = np.array(list(itertools.combinations_with_replacement(range(steps), n)))
    best, best_val = None, -np.inf
    for s in range(0, len(combos), 2048):
        pts = axis[combos[s:s + 2048]]
        vals = table.profits(pts)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best, best_val = pts[i], float(vals[i])

    delta = hi / (steps - 1) / 2
    target = hi / (price_steps - 1)
    passes = max(0, math.ceil(math.log2(delta / target))) + 1 + refinements if target > 0 else 0
    offsets = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))
    for _ in range(passes):
        pts = np.clip(best + delta * offsets, 0.0, hi)
        pts = pts[np.all(np.diff(pts, axis=1) >= 0, axis=1)]
        vals = table.profits(pts)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best, best_val = pts[i], float(vals[i])
        delta /= 2

    final = _TariffTable(qinstance, TypeGrid.build(qinstance.dist, type_steps))
    profit = float(final.profits(best[None, :])[0])
    return TariffOracleResult(TariffSchedule.from_level_prices(best), tuple(float(p) for p in best), profit)

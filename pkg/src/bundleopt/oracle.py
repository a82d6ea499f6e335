"""Brute-force ground truth for the bundling problem.

Every type picks the subset of the menu that maximizes its surplus (ties go to
the seller, then to the lowest subset index). Demand and profit are integrated
over a type grid, prices are found by grid search, and every possible menu is
tried. Nothing here relies on the monotonicity or quasi-concavity assumptions.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Bundle, MarketInstance, all_bundles
from .errors import ContractViolation, PreconditionError
from .grid import TIE_TOL, TypeGrid, alternative_masses, choose, payoff_integral, split_cells

MAX_PRODUCTS = 3
TYPE_STEPS = 20001
SEARCH_TYPE_STEPS = 2001
PRICE_STEPS = 201
REFINEMENTS = 2
MULTI_GRID_POINTS = 2048
PROFIT_TOL = 1e-9
MASS_TOL = 1e-9
BATCH_ELEMENTS = 4_000_000


def worker_count() -> int:
    env = os.environ.get("BUNDLEOPT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


class Classification(str, enum.Enum):
    PURE_BUNDLING = "PureBundling"
    MIXED = "Mixed"
    PARTIAL_ONLY = "PartialOnly"
    NO_SALE = "NoSale"


@dataclass(frozen=True)
class Strategy:
    """A menu of nonempty bundles and one price per bundle."""

    menu: tuple[Bundle, ...]
    prices: tuple[float, ...]

    def __post_init__(self):
        menu = tuple(self.menu)
        prices = tuple(float(p) for p in self.prices)
        object.__setattr__(self, "menu", menu)
        object.__setattr__(self, "prices", prices)
        if len(menu) != len(prices):
            raise ContractViolation("menu and prices differ in length")
        if any(b.is_empty for b in menu):
            raise ContractViolation("the empty bundle cannot be offered")
        if len({b.mask for b in menu}) != len(menu):
            raise ContractViolation("menu lists a bundle twice")
        if len({b.n for b in menu}) > 1:
            raise ContractViolation("menu mixes bundles over different product counts")
        if any(not math.isfinite(p) for p in prices):
            raise ContractViolation("prices must be finite")

    @classmethod
    def of(cls, priced: dict[Bundle, float]) -> "Strategy":
        items = sorted(priced.items(), key=lambda kv: kv[0].mask)
        return cls(tuple(b for b, _ in items), tuple(p for _, p in items))

    @property
    def encoding(self) -> int:
        """Menu as a set of bundle masks: bit ``mask - 1`` is set per offered bundle."""
        return sum(1 << (b.mask - 1) for b in self.menu)

    def price(self, b: Bundle) -> float:
        for m, p in zip(self.menu, self.prices):
            if m == b:
                return p
        raise ContractViolation(f"bundle {b} is not on the menu")

    def to_dict(self) -> dict:
        return {"menu": [b.bitstring() for b in self.menu], "prices": list(self.prices)}


@dataclass(frozen=True)
class ChoiceOutcome:
    basket: tuple[Bundle, ...]
    union: Bundle
    surplus: float
    seller_profit_contribution: float


def consumer_choice(instance: MarketInstance, strategy: Strategy, t: float,
                    tie_tol: float = TIE_TOL) -> ChoiceOutcome:
    """Best subset of the menu for type ``t`` by full enumeration."""
    n = instance.n
    menu, prices = strategy.menu, strategy.prices
    costs = [instance.bundle_cost(b) for b in menu]
    best = None
    for sid in range(1 << len(menu)):
        union = Bundle.empty(n)
        price = seller = 0.0
        for j, b in enumerate(menu):
            if sid >> j & 1:
                union = union | b
                price += prices[j]
                seller += prices[j] - costs[j]
        surplus = float(instance.model.value(union, t)) - price
        if best is None:
            best = (surplus, seller, sid, union)
            continue
        bs, bp, _, _ = best
        if surplus > bs + tie_tol or (abs(surplus - bs) <= tie_tol and seller > bp):
            best = (surplus, seller, sid, union)
    surplus, seller, sid, union = best
    basket = tuple(b for j, b in enumerate(menu) if sid >> j & 1)
    return ChoiceOutcome(basket, union, surplus, seller)


@dataclass(frozen=True)
class Segment:
    t_lo: float
    t_hi: float
    union: Bundle

    def to_dict(self) -> dict:
        return {"t_lo": self.t_lo, "t_hi": self.t_hi, "union": self.union.bitstring()}


@dataclass(frozen=True)
class StrategyOutcome:
    profit: float
    union_masses: dict[int, float]
    demand: dict[int, float]  # keyed by menu bundle mask
    knot_unions: np.ndarray = field(repr=False)
    segments: tuple[Segment, ...] = ()


class _MenuTable:
    """Everything about a menu that does not depend on prices."""

    def __init__(self, instance: MarketInstance, menu: Sequence[Bundle], grid: TypeGrid):
        self.instance, self.menu, self.grid = instance, tuple(menu), grid
        k = len(menu)
        self.costs = np.array([instance.bundle_cost(b) for b in menu])
        self.member = np.array([[sid >> j & 1 for j in range(k)] for sid in range(1 << k)], dtype=float)
        unions = []
        for sid in range(1 << k):
            m = 0
            for j in range(k):
                if sid >> j & 1:
                    m |= menu[j].mask
            unions.append(m)
        self.union_masks = sorted(set(unions))
        self.groups = [np.array([s for s in range(1 << k) if unions[s] == u]) for u in self.union_masks]
        n = instance.n
        self.values = np.stack([instance.model.value(Bundle(u, n), grid.knots) for u in self.union_masks])

    def _alternatives(self, prices: np.ndarray):
        """Per union keep only its cheapest subset (then most profitable, then lowest index)."""
        totals = prices @ self.member.T
        seller = (prices - self.costs) @ self.member.T
        batch = prices.shape[0]
        rows = np.arange(batch)
        a = len(self.union_masks)
        p_alt = np.empty((batch, a))
        s_alt = np.empty((batch, a))
        sid_alt = np.empty((batch, a), dtype=int)
        for i, g in enumerate(self.groups):
            pg, sg = totals[:, g], seller[:, g]
            ok = pg <= pg.min(axis=1, keepdims=True) + TIE_TOL
            j = np.argmax(np.where(ok, sg, -np.inf), axis=1)
            p_alt[:, i], s_alt[:, i], sid_alt[:, i] = pg[rows, j], sg[rows, j], g[j]
        return p_alt, s_alt, sid_alt

    def _solve(self, prices: np.ndarray):
        p_alt, s_alt, sid_alt = self._alternatives(prices)
        util = self.values[None, :, :] - p_alt[:, :, None]
        chosen = choose(util, [s_alt, -sid_alt.astype(float)])
        split = split_cells(util, chosen, self.grid)
        return chosen, split, s_alt, sid_alt

    def profits(self, prices: np.ndarray) -> np.ndarray:
        prices = np.atleast_2d(np.asarray(prices, dtype=float))
        per_row = max(1, BATCH_ELEMENTS // (len(self.union_masks) * self.grid.size))
        out = np.empty(prices.shape[0])
        for s in range(0, prices.shape[0], per_row):
            chunk = prices[s:s + per_row]
            chosen, split, s_alt, _ = self._solve(chunk)
            out[s:s + per_row] = payoff_integral(split, chosen, s_alt)
        return out

    def outcome(self, prices: Sequence[float]) -> StrategyOutcome:
        p = np.asarray(prices, dtype=float)[None, :]
        chosen, split, s_alt, sid_alt = self._solve(p)
        profit = float(payoff_integral(split, chosen, s_alt)[0])
        masses = alternative_masses(split, chosen, len(self.union_masks))[0]
        union_masses = {u: float(m) for u, m in zip(self.union_masks, masses)}
        demand = {}
        for j, b in enumerate(self.menu):
            demand[b.mask] = float(sum(masses[i] for i in range(len(self.union_masks))
                                       if sid_alt[0, i] >> j & 1))
        um = np.asarray(self.union_masks)[chosen[0]]
        n = self.instance.n
        change = np.flatnonzero(um[1:] != um[:-1])
        segs, start = [], float(self.grid.knots[0])
        for i in change:
            cut = float(split.switch[0, i])
            segs.append(Segment(start, cut, Bundle(int(um[i]), n)))
            start = cut
        segs.append(Segment(start, float(self.grid.knots[-1]), Bundle(int(um[-1]), n)))
        return StrategyOutcome(profit, union_masses, demand, um, tuple(segs))


def evaluate_strategy(instance: MarketInstance, strategy: Strategy, type_steps: int = TYPE_STEPS) -> StrategyOutcome:
    grid = TypeGrid.build(instance.dist, type_steps)
    if not strategy.menu:
        return StrategyOutcome(0.0, {0: 1.0}, {}, np.zeros(type_steps, dtype=int),
                               (Segment(0.0, 1.0, Bundle.empty(instance.n)),))
    return _MenuTable(instance, strategy.menu, grid).outcome(strategy.prices)


def demand(instance: MarketInstance, strategy: Strategy, b: Bundle, type_steps: int = TYPE_STEPS) -> float:
    """Mass of types whose basket contains ``b``."""
    if b not in strategy.menu:
        raise ContractViolation(f"bundle {b} is not on the menu")
    return evaluate_strategy(instance, strategy, type_steps).demand[b.mask]


def strategy_profit(instance: MarketInstance, strategy: Strategy, type_steps: int = TYPE_STEPS) -> float:
    return evaluate_strategy(instance, strategy, type_steps).profit


def classify_masses(union_masses: dict[int, float], n: int, mass_tol: float = MASS_TOL) -> Classification:
    grand = (1 << n) - 1
    sold = {u for u, m in union_masses.items() if m > mass_tol and u != 0}
    if not sold:
        return Classification.NO_SALE
    if sold == {grand}:
        return Classification.PURE_BUNDLING
    if grand in sold:
        return Classification.MIXED
    return Classification.PARTIAL_ONLY


def classify_outcome(instance: MarketInstance, strategy: Strategy, type_steps: int = TYPE_STEPS):
    """Pure bundling iff every type ends up with nothing or everything.

    Returns ``(classification, segments)``; sets of types with no mass are
    ignored.
    """
    out = evaluate_strategy(instance, strategy, type_steps)
    return classify_masses(out.union_masses, instance.n), out.segments


def _cartesian(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _grid_search(evaluate, lows: np.ndarray, highs: np.ndarray, steps: int, passes: int):
    axes = [np.linspace(lo, hi, steps) for lo, hi in zip(lows, highs)]
    pts = _cartesian(axes)
    vals = evaluate(pts)
    i = int(np.argmax(vals))
    best, best_val = pts[i], float(vals[i])
    span = highs - lows
    for _ in range(passes):
        span = span / 2
        lo = np.clip(best - span / 2, lows, highs - span)
        hi = lo + span
        pts = _cartesian([np.linspace(a, b, steps) for a, b in zip(lo, hi)])
        vals = evaluate(pts)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best, best_val = pts[i], float(vals[i])
    return best, best_val


def grid_plan(menu_size: int, price_steps: int = PRICE_STEPS, refinements: int = REFINEMENTS) -> tuple[int, int]:
    """Points per price coordinate and number of halving passes for a menu.

    One-bundle menus use the full grid. Larger menus use a coarser Cartesian
    grid (about ``MULTI_GRID_POINTS`` vectors) and extra halving passes until
    their spacing matches the one-bundle case.
    """
    if menu_size <= 1:
        return price_steps, refinements
    steps = max(3, min(price_steps, int(MULTI_GRID_POINTS ** (1.0 / menu_size))))
    extra = max(0, math.ceil(math.log2((price_steps - 1) / (steps - 1))))
    return steps, refinements + extra


@dataclass(frozen=True)
class PriceOptimum:
    prices: tuple[float, ...]
    profit: float


def optimize_prices(instance: MarketInstance, menu: Sequence[Bundle], price_steps: int = PRICE_STEPS,
                    refinements: int = REFINEMENTS, type_steps: int = SEARCH_TYPE_STEPS) -> PriceOptimum:
    """Grid search for the profit-maximizing prices of a fixed menu.

    Each coordinate ranges over ``[cost(b), max_t v(b, t)]``. The search
    returns a lower bound on the menu's best profit.
    """
    menu = tuple(menu)
    if not menu:
        return PriceOptimum((), 0.0)
    grid = TypeGrid.build(instance.dist, type_steps)
    table = _MenuTable(instance, menu, grid)
    lows = np.array([instance.bundle_cost(b) for b in menu])
    highs = np.array([float(np.max(instance.model.value(b, grid.knots))) for b in menu])
    highs = np.maximum(highs, lows)
    steps, passes = grid_plan(len(menu), price_steps, refinements)
    best, val = _grid_search(table.profits, lows, highs, steps, passes)
    return PriceOptimum(tuple(float(p) for p in best), val)


@dataclass(frozen=True)
class MenuResult:
    strategy: Strategy
    profit: float


@dataclass(frozen=True)
class OracleResult:
    best_strategy: Strategy
    best_profit: float
    classification: Classification
    buyer_segments: tuple[Segment, ...]
    union_masses: dict[int, float]
    candidates: tuple[MenuResult, ...] = ()

    def to_dict(self) -> dict:
        n = self.best_strategy.menu[0].n if self.best_strategy.menu else None
        return {
            "best_strategy": self.best_strategy.to_dict(),
            "best_profit": self.best_profit,
            "classification": self.classification.value,
            "buyer_segments": [s.to_dict() for s in self.buyer_segments],
            "union_masses": {(format(u, f"0{n}b") if n else str(u)): m for u, m in self.union_masses.items()},
            "candidates": [{**c.strategy.to_dict(), "profit": c.profit} for c in self.candidates],
        }


def all_menus(n: int) -> list[tuple[Bundle, ...]]:
    """Every nonempty menu of nonempty bundles, ordered by encoding."""
    bundles = all_bundles(n)
    menus = []
    for code in range(1, 1 << len(bundles)):
        menus.append(tuple(b for i, b in enumerate(bundles) if code >> i & 1))
    return menus


def brute_force_best(instance: MarketInstance, price_steps: int = PRICE_STEPS, type_steps: int = TYPE_STEPS,
                     refinements: int = REFINEMENTS, search_type_steps: int = SEARCH_TYPE_STEPS,
                     workers: int | None = None, profit_tol: float = PROFIT_TOL) -> OracleResult:
    """Try every menu, price each by grid search, and keep the most profitable.

    Prices are searched on a ``search_type_steps`` grid; every menu's winner is
    then re-scored on the ``type_steps`` grid. Profits within ``profit_tol`` of
    each other are tied and the menu with the smallest encoding wins.
    """
    n = instance.n
    if n > MAX_PRODUCTS:
        raise PreconditionError(
            f"exhaustive search is limited to n <= {MAX_PRODUCTS} (there are 2^(2^n - 1) menus); "
            "use decide_pure_bundling for larger n")
    final_grid = TypeGrid.build(instance.dist, type_steps)
    search_steps = min(search_type_steps, type_steps)

    def run(menu):
        opt = optimize_prices(instance, menu, price_steps, refinements, search_steps)
        profit = float(_MenuTable(instance, menu, final_grid).profits(np.array([opt.prices]))[0])
        return MenuResult(Strategy(menu, opt.prices), profit)

    menus = all_menus(n)
    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, menus))
    else:
        results = [run(m) for m in menus]

    best = MenuResult(Strategy((), ()), 0.0)
    for r in sorted(results, key=lambda r: r.strategy.encoding):
        if r.profit > best.profit + profit_tol:
            best = r
    outcome = evaluate_strategy(instance, best.strategy, type_steps)
    cls = classify_masses(outcome.union_masses, n)
    return OracleResult(best.strategy, outcome.profit, cls, outcome.segments, outcome.union_masses, tuple(results))

"""Bundles, value functions, type distributions and market instances.

Types are normalized to ``[0, 1]``. Every value function is vectorized: pass a
float to get a float back, pass an array to get an array of the same shape.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ContractViolation, InputDomainError, ModelFormatError

MAX_PRODUCTS = 16


# ---------------------------------------------------------------------------
# Bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Bundle:
    """A set of products ``{1..n}`` stored as a bitmask (product 1 is bit 0)."""

    mask: int
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_PRODUCTS:
            raise ContractViolation(f"product count must be in [1, {MAX_PRODUCTS}], got {self.n}")
        if not 0 <= self.mask < (1 << self.n):
            raise ContractViolation(f"mask {self.mask:#b} is not a subset of {{1..{self.n}}}")

    @classmethod
    def of(cls, n: int, *products: int) -> "Bundle":
        mask = 0
        for i in products:
            if not 1 <= i <= n:
                raise ContractViolation(f"product index {i} outside 1..{n}")
            mask |= 1 << (i - 1)
        return cls(mask, n)

    @classmethod
    def grand(cls, n: int) -> "Bundle":
        return cls((1 << n) - 1, n)

    @classmethod
    def empty(cls, n: int) -> "Bundle":
        return cls(0, n)

    @classmethod
    def from_bitstring(cls, bits: str) -> "Bundle":
        """Parse ``"011"`` style keys; the rightmost character is product 1."""
        if not bits or set(bits) - {"0", "1"}:
            raise ContractViolation(f"bundle key {bits!r} is not a binary string")
        return cls(int(bits, 2), len(bits))

    def bitstring(self) -> str:
        return format(self.mask, f"0{self.n}b")

    @property
    def products(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.n) if self.mask >> i & 1)

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    @property
    def is_grand(self) -> bool:
        return self.mask == (1 << self.n) - 1

    def complement(self) -> "Bundle":
        return Bundle(((1 << self.n) - 1) & ~self.mask, self.n)

    def isdisjoint(self, other: "Bundle") -> bool:
        self._same_universe(other)
        return self.mask & other.mask == 0

    def __or__(self, other: "Bundle") -> "Bundle":
        self._same_universe(other)
        return Bundle(self.mask | other.mask, self.n)

    def __and__(self, other: "Bundle") -> "Bundle":
        self._same_universe(other)
        return Bundle(self.mask & other.mask, self.n)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __iter__(self) -> Iterator[int]:
        return iter(self.products)

    def __str__(self) -> str:
        if self.is_empty:
            return "{}"
        return "{" + ",".join(map(str, self.products)) + "}"

    def _same_universe(self, other: "Bundle") -> None:
        if self.n != other.n:
            raise ContractViolation(f"bundles over {self.n} and {other.n} products cannot be combined")


def bundle_complement(b: Bundle) -> Bundle:
    return b.complement()


def all_bundles(n: int, include_empty: bool = False) -> list[Bundle]:
    """Every bundle over ``n`` products, ordered by mask."""
    start = 0 if include_empty else 1
    return [Bundle(m, n) for m in range(start, 1 << n)]


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


# ---------------------------------------------------------------------------
# Piecewise-linear curves
# ---------------------------------------------------------------------------


class PiecewiseLinear:
    """Right-continuous piecewise-linear interpolant.

    Knots must be nondecreasing. A repeated knot encodes a jump: the curve
    takes the value of the *last* duplicate at that knot.
    """

    def __init__(self, knots: Sequence[float], values: Sequence[float]):
        x = np.asarray(knots, dtype=float)
        y = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 2:
            raise ModelFormatError("tabulated curve needs matching 1-d knot and value arrays of length >= 2")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ModelFormatError("tabulated curve contains non-finite entries")
        if np.any(np.diff(x) < 0):
            raise ModelFormatError("tabulated knots must be sorted in nondecreasing order")
        if x[0] == x[-1]:
            raise ModelFormatError("tabulated knots must span an interval of positive length")
        self.knots = x
        self.values = y

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def __call__(self, t):
        arr, scalar = _as_array(t)
        x, y = self.knots, self.values
        lo, hi = x[0], x[-1]
        eps = 1e-12 * max(1.0, abs(hi - lo))
        if np.any(arr < lo - eps) or np.any(arr > hi + eps):
            raise InputDomainError(f"type outside tabulated range [{lo}, {hi}]")
        a = np.clip(arr, lo, hi)
        idx = np.searchsorted(x, a, side="right") - 1
        idx = np.clip(idx, 0, len(x) - 2)
        x0, x1 = x[idx], x[idx + 1]
        y0, y1 = y[idx], y[idx + 1]
        dx = x1 - x0
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(dx > 0, (a - x0) / np.where(dx > 0, dx, 1.0), 1.0)
        return _out(y0 + w * (y1 - y0), scalar)


# ---------------------------------------------------------------------------
# Value models
# ---------------------------------------------------------------------------


class ValueModel(ABC):
    """Valuation ``v(b, t)`` of bundle ``b`` by type ``t``."""

    n: int

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, 1.0)

    @abstractmethod
    def _bundle_values(self, mask: int, t: np.ndarray) -> np.ndarray:
        """Values of a nonempty bundle on an array of types."""

    def value(self, b: Bundle, t):
        self._check_bundle(b)
        arr, scalar = _as_array(t)
        if b.is_empty:
            return _out(np.zeros_like(arr), scalar)
        return _out(np.asarray(self._bundle_values(b.mask, arr), dtype=float), scalar)

    def conditional_value(self, b: Bundle, t, given: Bundle):
        """Value of ``b`` for a type already holding ``given``."""
        self._check_bundle(b)
        self._check_bundle(given)
        if not b.isdisjoint(given):
            raise ContractViolation(f"conditional value needs disjoint bundles, got {b} and {given}")
        if given.is_empty:
            return self.value(b, t)
        return self.value(b | given, t) - self.value(given, t)

    def _check_bundle(self, b: Bundle) -> None:
        if b.n != self.n:
            raise ContractViolation(f"bundle over {b.n} products used with a {self.n}-product model")


@dataclass(frozen=True)
class AddOnModel(ValueModel):
    """Base product plus an add-on worth nothing alone.

    ``v({1},t) = t + k1``, ``v({2},t) = 0`` and ``v({1,2},t) = t + k1 + t**k2``.
    """

    k1: float
    k2: float
    n: int = field(default=2, init=False)

    def __post_init__(self):
        if not (math.isfinite(self.k1) and math.isfinite(self.k2)):
            raise ModelFormatError("add-on parameters must be finite")
        if self.k2 <= 0:
            raise ModelFormatError(f"add-on exponent k2 must be positive, got {self.k2}")

    def _bundle_values(self, mask, t):
        if mask == 0b01:
            return t + self.k1
        if mask == 0b10:
            return np.zeros_like(t)
        return t + self.k1 + np.power(t, self.k2)

    def with_params(self, **params) -> "AddOnModel":
        return replace(self, **params)


class AdditiveModel(ValueModel):
    """Bundle value is the sum of its component values."""

    def __init__(self, components: Sequence[Callable]):
        if not components:
            raise ModelFormatError("additive model needs at least one component")
        self.components = tuple(components)
        self.n = len(self.components)
        self._domain = (0.0, 1.0)
        hulls = [c.hull for c in self.components if isinstance(c, PiecewiseLinear)]
        if hulls:
            self._domain = (max(h[0] for h in hulls), min(h[1] for h in hulls))

    @classmethod
    def from_table(cls, knots: Sequence[float], component_values: Sequence[Sequence[float]]) -> "AdditiveModel":
        return cls([PiecewiseLinear(knots, vals) for vals in component_values])

    @property
    def domain(self):
        return self._domain

    def _bundle_values(self, mask, t):
        total = np.zeros_like(t)
        for i, comp in enumerate(self.components):
            if mask >> i & 1:
                total = total + np.asarray(comp(t), dtype=float)
        return total


class TabulatedModel(ValueModel):
    """Bundle values given on a shared type grid, one array per nonempty bundle."""

    def __init__(self, knots: Sequence[float], table: Mapping[int, Sequence[float]], n: int):
        if not 1 <= n <= MAX_PRODUCTS:
            raise ModelFormatError(f"product count must be in [1, {MAX_PRODUCTS}], got {n}")
        self.n = n
        expected = set(range(1, 1 << n))
        missing = expected - set(table)
        extra = set(table) - expected
        if missing:
            keys = ", ".join(Bundle(m, n).bitstring() for m in sorted(missing))
            raise ModelFormatError(f"tabulated model is missing bundles: {keys}")
        if extra:
            raise ModelFormatError(f"tabulated model has bundle masks outside 1..{(1 << n) - 1}: {sorted(extra)}")
        self.knots = np.asarray(knots, dtype=float)
        self.curves = {m: PiecewiseLinear(self.knots, table[m]) for m in sorted(expected)}

    @property
    def domain(self):
        return self.curves[1].hull

    def _bundle_values(self, mask, t):
        return self.curves[mask](t)


class CountValueModel(ValueModel):
    """Units of one good: a bundle of ``k`` units is worth ``value_fn(levels[k-1], t)``.

    This is the bundling view of a quantity or quality ladder: owning units
    ``{1..k}`` is the same as holding level ``levels[k-1]``.
    """

    def __init__(self, levels: Sequence[float], value_fn: Callable[[float, np.ndarray], np.ndarray]):
        lv = [float(q) for q in levels]
        if not lv or any(q <= 0 for q in lv) or any(b <= a for a, b in zip(lv, lv[1:])):
            raise ModelFormatError("levels must be strictly increasing positive numbers")
        self.levels = tuple(lv)
        self.n = len(lv)
        self.value_fn = value_fn

    def _bundle_values(self, mask, t):
        k = bin(mask).count("1")
        return np.asarray(self.value_fn(self.levels[k - 1], t), dtype=float)


def quality_root(q: float, t):
    """``q * t**(1/q)``: more concave in the type as the level ``q`` grows."""
    return q * np.power(t, 1.0 / q)


class QualityRootModel(CountValueModel):
    def __init__(self, levels: Sequence[float]):
        super().__init__(levels, quality_root)


def value(model: ValueModel, b: Bundle, t):
    return model.value(b, t)


def conditional_value(model: ValueModel, b: Bundle, t, given: Bundle):
    return model.conditional_value(b, t, given)


# ---------------------------------------------------------------------------
# Type distributions
# ---------------------------------------------------------------------------


class TypeDistribution(ABC):
    """Atomless distribution of types on ``[0, 1]`` with a strictly increasing cdf."""

    @abstractmethod
    def cdf(self, t): ...

    @abstractmethod
    def pdf(self, t): ...

    @abstractmethod
    def quantile(self, u): ...

    def survival(self, t):
        return 1.0 - self.cdf(t)


@dataclass(frozen=True)
class Uniform01(TypeDistribution):
    def cdf(self, t):
        arr, scalar = _as_array(t)
        return _out(np.clip(arr, 0.0, 1.0), scalar)

    def pdf(self, t):
        arr, scalar = _as_array(t)
        return _out(np.where((arr >= 0) & (arr <= 1), 1.0, 0.0), scalar)

    def quantile(self, u):
        arr, scalar = _as_array(u)
        return _out(np.clip(arr, 0.0, 1.0), scalar)


class TabulatedCdf(TypeDistribution):
    """Piecewise-linear cdf through ``(t_i, F_i)``; the density is piecewise constant."""

    def __init__(self, knots: Sequence[float], cdf: Sequence[float]):
        x = np.asarray(knots, dtype=float)
        F = np.asarray(cdf, dtype=float)
        if x.ndim != 1 or x.shape != F.shape or len(x) < 2:
            raise ModelFormatError("tabulated cdf needs matching 1-d arrays of length >= 2")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise ModelFormatError("tabulated cdf knots must start at 0 and end at 1")
        if F[0] != 0.0 or F[-1] != 1.0:
            raise ModelFormatError("tabulated cdf must satisfy F(0) = 0 and F(1) = 1")
        if np.any(np.diff(x) <= 0):
            raise ModelFormatError("tabulated cdf knots must be strictly increasing")
        if np.any(np.diff(F) <= 0):
            raise ModelFormatError("tabulated cdf must be strictly increasing (no flat segments, f > 0)")
        self.knots = x
        self.values = F
        self._slopes = np.diff(F) / np.diff(x)

    @classmethod
    def from_density(cls, knots: Sequence[float], density: Sequence[float]) -> "TabulatedCdf":
        """Build from piecewise-constant density weights on each knot interval;
        the weights are renormalized, so any positive scale gives the same cdf."""
        x = np.asarray(knots, dtype=float)
        w = np.asarray(density, dtype=float)
        if w.shape != (len(x) - 1,) or np.any(w <= 0):
            raise ModelFormatError("density needs one positive weight per knot interval")
        mass = np.concatenate([[0.0], np.cumsum(w * np.diff(x))])
        F = mass / mass[-1]
        F[-1] = 1.0
        return cls(x, F)

    def cdf(self, t):
        arr, scalar = _as_array(t)
        return _out(np.interp(np.clip(arr, 0.0, 1.0), self.knots, self.values), scalar)

    def pdf(self, t):
        arr, scalar = _as_array(t)
        idx = np.clip(np.searchsorted(self.knots, arr, side="right") - 1, 0, len(self._slopes) - 1)
        dens = np.where((arr >= 0) & (arr <= 1), self._slopes[idx], 0.0)
        return _out(dens, scalar)

    def quantile(self, u):
        arr, scalar = _as_array(u)
        return _out(np.interp(np.clip(arr, 0.0, 1.0), self.values, self.knots), scalar)


# ---------------------------------------------------------------------------
# Market instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarketInstance:
    model: ValueModel
    costs: tuple[float, ...]
    dist: TypeDistribution = field(default_factory=Uniform01)

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        object.__setattr__(self, "costs", costs)
        if len(costs) != self.model.n:
            raise ModelFormatError(f"expected {self.model.n} costs, got {len(costs)}")
        if any(not math.isfinite(c) or c < 0 for c in costs):
            raise ModelFormatError("per-product costs must be finite and >= 0")
        lo, hi = self.model.domain
        if lo > 1e-12 or hi < 1 - 1e-12:
            raise ModelFormatError(
                f"value model is defined on [{lo}, {hi}]; types must cover [0, 1] (normalize types first)"
            )

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def grand(self) -> Bundle:
        return Bundle.grand(self.n)

    def bundle_cost(self, b: Bundle) -> float:
        return float(sum(self.costs[i - 1] for i in b.products))

    @property
    def zero_cost(self) -> bool:
        return all(c == 0 for c in self.costs)

    def with_model(self, model: ValueModel) -> "MarketInstance":
        return replace(self, model=model)


def bundle_cost(instance: MarketInstance, b: Bundle) -> float:
    return instance.bundle_cost(b)

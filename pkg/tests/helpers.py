"""Seeded instance generators shared by the property and acceptance tests."""

import numpy as np

from bundleopt.characterize import global_ratio_monotonicity
from bundleopt.core import AddOnModel, AdditiveModel, MarketInstance, PiecewiseLinear, TabulatedModel, all_bundles

TAB_KNOTS = np.linspace(0.0, 1.0, 9)


def addon_instance(k1, k2):
    return MarketInstance(AddOnModel(k1, k2), (0.0, 0.0))


def random_addon(rng):
    return addon_instance(float(rng.uniform(-0.2, 0.3)), float(rng.uniform(0.3, 1.5)))


def _increasing(rng, start_hi, step_lo, step_hi):
    steps = rng.uniform(step_lo, step_hi, len(TAB_KNOTS) - 1)
    return np.concatenate([[rng.uniform(0.0, start_hi)], steps]).cumsum()


def random_tabulated(rng, cost_hi=0.1):
    """n = 2 tabulated instance whose curves all rise with the type.

    The grand bundle adds an increasing interaction term (scaled to allow
    mild substitutes), so it may or may not pass the assumption checks.
    """
    v1 = _increasing(rng, 0.2, 0.01, 0.25)
    v2 = _increasing(rng, 0.2, 0.01, 0.25)
    inter = rng.uniform(-0.3, 1.0) * _increasing(rng, 0.0, 0.0, 0.2)
    grand = v1 + v2 + inter
    model = TabulatedModel(TAB_KNOTS, {1: v1, 2: v2, 3: grand}, 2)
    costs = tuple(float(c) for c in rng.uniform(0.0, cost_hi, 2))
    return MarketInstance(model, costs)


def additive_model(scales, bends):
    """Additive model with components ``a * t**(1 + c)`` tabulated on 9 knots."""
    return AdditiveModel([PiecewiseLinear(TAB_KNOTS, a * TAB_KNOTS ** (1 + c)) for a, c in zip(scales, bends)])


def random_additive(rng):
    """Two or three components; half the draws share one curvature."""
    n = int(rng.integers(2, 4))
    scales = rng.uniform(0.05, 1.0, n)
    bends = np.full(n, rng.uniform(0.0, 2.0)) if rng.random() < 0.5 else rng.uniform(0.0, 2.0, n)
    return additive_model(scales, bends)


def ratio_monotone_one_way(model, grid_size=513):
    """Every bundle's ratio weakly increasing, or every one weakly decreasing."""
    shapes = [global_ratio_monotonicity(model, b, grid_size=grid_size, tol=1e-9) for b in all_bundles(model.n)]
    return all(r.weakly_increasing for r in shapes) or all(r.weakly_decreasing for r in shapes)

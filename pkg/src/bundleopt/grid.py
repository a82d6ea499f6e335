"""Discrete choice over a type grid, batched over many price vectors.

Utilities are evaluated on grid knots. Inside a cell whose two end knots pick
different alternatives, the switch point is placed where the linear
interpolants of the two utilities cross, and the cell's probability mass is
split there. This keeps the integration error second order in the knot
spacing, where counting knots would leave it first order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TypeDistribution

TIE_TOL = 1e-12


@dataclass(frozen=True)
class TypeGrid:
    knots: np.ndarray
    cdf: np.ndarray
    dist: TypeDistribution

    @classmethod
    def build(cls, dist: TypeDistribution, steps: int) -> "TypeGrid":
        if steps < 2:
            raise ValueError("type grid needs at least 2 knots")
        knots = np.linspace(0.0, 1.0, steps)
        return cls(knots, np.asarray(dist.cdf(knots), dtype=float), dist)

    @property
    def size(self) -> int:
        return len(self.knots)


def choose(utilities: np.ndarray, keys: list[np.ndarray], tie_tol: float = TIE_TOL) -> np.ndarray:
    """Index of the chosen alternative at every knot.

    ``utilities`` has shape ``(batch, alternatives, knots)``. Alternatives
    within ``tie_tol`` of the best utility are tied; ties are resolved by
    maximizing each array in ``keys`` (shape ``(batch, alternatives)``) in
    turn, then by the lowest alternative index.
    """
    best = utilities.max(axis=1, keepdims=True)
    cand = utilities >= best - tie_tol
    for key in keys:
        k = np.where(cand, key[:, :, None], -np.inf)
        cand &= k >= k.max(axis=1, keepdims=True)
    return np.argmax(cand, axis=1)


@dataclass(frozen=True)
class CellSplit:
    left: np.ndarray  # mass of each cell credited to the choice at its left knot
    right: np.ndarray  # mass credited to the choice at its right knot
    switch: np.ndarray  # switch type inside each cell (right knot when no switch)


def split_cells(utilities: np.ndarray, chosen: np.ndarray, grid: TypeGrid) -> CellSplit:
    a, b = chosen[:, :-1], chosen[:, 1:]
    u_l, u_r = utilities[:, :, :-1], utilities[:, :, 1:]
    d_left = (np.take_along_axis(u_l, a[:, None, :], 1) - np.take_along_axis(u_l, b[:, None, :], 1))[:, 0, :]
    d_right = (np.take_along_axis(u_r, a[:, None, :], 1) - np.take_along_axis(u_r, b[:, None, :], 1))[:, 0, :]
    den = d_left - d_right
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(den > 0, np.clip(d_left / np.where(den > 0, den, 1.0), 0.0, 1.0), 0.5)
    lam = np.where(a == b, 1.0, lam)
    t0 = grid.knots[:-1]
    switch = t0 + lam * np.diff(grid.knots)
    f_switch = np.asarray(grid.dist.cdf(switch), dtype=float)
    left = f_switch - grid.cdf[:-1]
    right = grid.cdf[1:] - f_switch
    return CellSplit(left, right, switch)


def payoff_integral(split: CellSplit, chosen: np.ndarray, payoff: np.ndarray) -> np.ndarray:
    """``sum over cells of mass x payoff of the chosen alternative`` per batch row."""
    pa = np.take_along_axis(payoff, chosen[:, :-1], 1)
    pb = np.take_along_axis(payoff, chosen[:, 1:], 1)
    return (split.left * pa + split.right * pb).sum(axis=1)


def alternative_masses(split: CellSplit, chosen: np.ndarray, n_alternatives: int) -> np.ndarray:
    """Probability mass of every alternative, shape ``(batch, alternatives)``."""
    batch = chosen.shape[0]
    out = np.zeros((batch, n_alternatives))
    rows = np.repeat(np.arange(batch), chosen.shape[1] - 1)
    np.add.at(out, (rows, chosen[:, :-1].ravel()), split.left.ravel())
    np.add.at(out, (rows, chosen[:, 1:].ravel()), split.right.ravel())
    return out

"""One-dimensional maximization helpers for single-peaked curves."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_max(f: Callable[[float], float], a: float, b: float, xtol: float = 1e-8):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    if b < a:
        a, b = b, a
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def grid_then_golden(f_vec: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                     grid_size: int = 4097, xtol: float = 1e-8):
    """Dense grid scan, then golden-section refinement inside the bracket
    around the grid argmax.

    Returns ``(x, fx, grid, values)`` so callers can inspect the scan.
    """
    grid = np.linspace(lo, hi, grid_size)
    vals = np.asarray(f_vec(grid), dtype=float)
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid_size - 1)]
    x, fx = golden_section_max(lambda s: float(f_vec(np.asarray(s))), a, b, xtol)
    if vals[k] > fx:
        x, fx = float(grid[k]), float(vals[k])
    return float(x), float(fx), grid, vals


def single_peak_violation(values: np.ndarray, tol: float = 1e-9):
    """First index ``(i, j, k)``, ``i < j < k``, with
    ``values[j] <= min(values[i], values[k]) - tol``, or ``None``.

    ``i`` and ``k`` are the positions of the running maxima on either side
    of ``j``, so the triple is the strongest witness for that ``j``.
    """
    v = np.asarray(values, dtype=float)
    m = len(v)
    if m < 3:
        return None
    left = np.maximum.accumulate(v)
    right = np.maximum.accumulate(v[::-1])[::-1]
    # left max strictly before j, right max strictly after j
    lmax = left[:-2]
    rmax = right[2:]
    mid = v[1:-1]
    bad = mid <= np.minimum(lmax, rmax) - tol
    if not np.any(bad):
        return None
    j = int(np.argmax(bad)) + 1
    i = int(np.argmax(v[:j]))
    k = j + 1 + int(np.argmax(v[j + 1:]))
    return i, j, k

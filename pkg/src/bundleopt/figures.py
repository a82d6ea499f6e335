"""CSV exports of the curves behind the add-on and quality-root figures.

Every file starts with a ``# schema: ...`` line naming its layout and version.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import AddOnModel, Bundle, MarketInstance, quality_root
from .volumes import optimal_cutoff

ADDON_SCHEMA = "bundleopt.addon-curves/1"
QUALITY_SCHEMA = "bundleopt.quality-curves/1"
QUALITY_LEVELS = (0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class FigureData:
    t: np.ndarray
    v_part: np.ndarray
    v_grand: np.ndarray
    ratio: np.ndarray  # nan where v(grand) <= 0
    d_part: float
    d_grand: float
    verdict: str


def addon_figure_data(k1: float, k2: float, grid: int = 1001) -> FigureData:
    """Curves of ``v({1}, t)``, ``v(grand, t)`` and their ratio for one add-on case.

    The verdict compares the optimal volumes of the two bundles sold alone.
    """
    model = AddOnModel(k1, k2)
    inst = MarketInstance(model, (0.0, 0.0))
    part, grand = Bundle.of(2, 1), Bundle.grand(2)
    t = np.linspace(0.0, 1.0, grid)
    vb, vg = model.value(part, t), model.value(grand, t)
    ratio = np.full_like(t, np.nan)
    pos = vg > 0
    ratio[pos] = vb[pos] / vg[pos]
    d_part = optimal_cutoff(inst, part).d_star
    d_grand = optimal_cutoff(inst, grand).d_star
    verdict = "pure_optimal" if d_grand > d_part else "pure_suboptimal" if d_grand < d_part else "boundary"
    return FigureData(t, vb, vg, ratio, d_part, d_grand, verdict)


def falls_then_rises(values: Sequence[float]) -> bool:
    """True if some strict decrease is followed (later) by a strict increase.

    NaN entries are skipped.
    """
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    d = np.diff(v)
    down = np.flatnonzero(d < 0)
    return bool(down.size and np.any(d[down[0] + 1:] > 0))


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def _emit(text: str, path: str | Path | None) -> str:
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def export_figure_data(k1: float, k2: float, grid: int = 1001, path: str | Path | None = None) -> str:
    """CSV with columns ``t, v_b, v_grand, ratio``; ratio is blank where ``v_grand <= 0``.

    A trailing ``# summary`` line records the two optimal volumes and the verdict.
    """
    data = addon_figure_data(k1, k2, grid)
    buf = io.StringIO()
    buf.write(f"# schema: {ADDON_SCHEMA} k1={k1!r} k2={k2!r} b=01\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "v_b", "v_grand", "ratio"])
    for row in zip(data.t, data.v_part, data.v_grand, data.ratio):
        w.writerow([_fmt(x) for x in row])
    buf.write(f"# summary: d_b={data.d_part!r} d_grand={data.d_grand!r} verdict={data.verdict}\n")
    return _emit(buf.getvalue(), path)


def export_quality_curves(levels: Sequence[float] = QUALITY_LEVELS, grid: int = 1001,
                          path: str | Path | None = None) -> str:
    """CSV of ``q * t**(1/q)`` against ``t``, one column per quality level."""
    t = np.linspace(0.0, 1.0, grid)
    buf = io.StringIO()
    buf.write(f"# schema: {QUALITY_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"v_q{q:g}" for q in levels])
    cols = [quality_root(q, t) for q in levels]
    for i, ti in enumerate(t):
        w.writerow([_fmt(ti)] + [_fmt(c[i]) for c in cols])
    return _emit(buf.getvalue(), path)


def read_csv_columns(text: str) -> dict[str, np.ndarray]:
    """Parse an exported CSV back into float columns (blank cells become NaN)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    return {h: np.array([float(r[i]) if r[i] else np.nan for r in body]) for i, h in enumerate(header)}

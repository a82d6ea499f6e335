"""JSON model documents.

Market model::

    {"products": 2, "costs": [0, 0],
     "distribution": {"type": "uniform"},
     "values": {"family": "addon", "k1": 0.2, "k2": 0.5}}

Value families: ``addon`` (k1, k2), ``additive`` (``components: [t, [values
per product]]``), ``tabulated`` (``t`` and ``bundles`` keyed by bitstring,
product 1 rightmost) and ``qualityroot`` (``levels``). The distribution is
``uniform`` or ``tabulated`` (``t`` and ``cdf``).

Quantity model (for tariffs)::

    {"levels": [0.25, 0.5, ...], "value": {"family": "qualityroot"},
     "level_costs": [...], "distribution": {...}}

with value families ``qualityroot``, ``proportional`` (``v = q t``) and
``tabulated`` (``t`` and one array per level in ``values``).

Unknown top-level keys such as ``description`` or ``expected`` are ignored.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import (AddOnModel, AdditiveModel, Bundle, MarketInstance, PiecewiseLinear, QualityRootModel,
                   TabulatedCdf, TabulatedModel, TypeDistribution, Uniform01, ValueModel, quality_root)
from .errors import ModelFormatError
from .tariff import QuantityInstance


def _require(doc: dict, key: str, where: str) -> Any:
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{where} must be a JSON object")
    if key not in doc:
        raise ModelFormatError(f"{where} is missing required key '{key}'")
    return doc[key]


def _floats(x, where: str) -> list[float]:
    if not isinstance(x, list) or not x:
        raise ModelFormatError(f"{where} must be a nonempty array of numbers")
    try:
        out = [float(v) for v in x]
    except (TypeError, ValueError):
        raise ModelFormatError(f"{where} must contain only numbers") from None
    if not np.all(np.isfinite(out)):
        raise ModelFormatError(f"{where} must contain only finite numbers")
    return out


def parse_distribution(doc: dict | None) -> TypeDistribution:
    if doc is None:
        return Uniform01()
    kind = _require(doc, "type", "distribution")
    if kind == "uniform":
        return Uniform01()
    if kind == "tabulated":
        return TabulatedCdf(_floats(_require(doc, "t", "distribution"), "distribution.t"),
                            _floats(_require(doc, "cdf", "distribution"), "distribution.cdf"))
    raise ModelFormatError(f"distribution.type must be 'uniform' or 'tabulated', got {kind!r}")


def parse_values(doc: dict, n: int) -> ValueModel:
    family = _require(doc, "family", "values")
    if family == "addon":
        if n != 2:
            raise ModelFormatError(f"addon family has exactly 2 products, document declares {n}")
        return AddOnModel(float(_require(doc, "k1", "values")), float(_require(doc, "k2", "values")))
    if family == "additive":
        comps = _require(doc, "components", "values")
        if not isinstance(comps, list) or len(comps) != 2 or not isinstance(comps[1], list):
            raise ModelFormatError("values.components must be [t-grid, [per-product value arrays]]")
        knots = _floats(comps[0], "values.components[0]")
        arrays = [_floats(a, f"values.components[1][{i}]") for i, a in enumerate(comps[1])]
        if len(arrays) != n:
            raise ModelFormatError(f"additive family needs one value array per product ({n}), got {len(arrays)}")
        return AdditiveModel([PiecewiseLinear(knots, a) for a in arrays])
    if family == "tabulated":
        knots = _floats(_require(doc, "t", "values"), "values.t")
        bundles = _require(doc, "bundles", "values")
        if not isinstance(bundles, dict):
            raise ModelFormatError("values.bundles must be an object keyed by bundle bitstrings")
        table = {}
        for key, arr in bundles.items():
            if len(key) != n:
                raise ModelFormatError(f"bundle key {key!r} must have exactly {n} characters")
            b = Bundle.from_bitstring(key)
            if b.is_empty:
                raise ModelFormatError("the empty bundle is worth 0 by definition and must not be tabulated")
            table[b.mask] = _floats(arr, f"values.bundles[{key!r}]")
        return TabulatedModel(knots, table, n)
    if family == "qualityroot":
        levels = _floats(_require(doc, "levels", "values"), "values.levels")
        if len(levels) != n:
            raise ModelFormatError(f"qualityroot family needs one level per product ({n}), got {len(levels)}")
        return QualityRootModel(levels)
    raise ModelFormatError(f"values.family must be addon, additive, tabulated or qualityroot, got {family!r}")


def parse_model(doc: dict) -> MarketInstance:
    n = _require(doc, "products", "model")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ModelFormatError(f"products must be a positive integer, got {n!r}")
    costs = _floats(_require(doc, "costs", "model"), "costs")
    if len(costs) != n:
        raise ModelFormatError(f"costs must list one cost per product ({n}), got {len(costs)}")
    model = parse_values(_require(doc, "values", "model"), n)
    return MarketInstance(model, tuple(costs), parse_distribution(doc.get("distribution")))


def _proportional(q, t):
    return q * np.asarray(t, dtype=float)


def parse_quantity_model(doc: dict) -> QuantityInstance:
    levels = _floats(_require(doc, "levels", "quantity model"), "levels")
    vdoc = _require(doc, "value", "quantity model")
    family = _require(vdoc, "family", "value")
    if family == "qualityroot":
        fn = quality_root
    elif family == "proportional":
        fn = _proportional
    elif family == "tabulated":
        knots = _floats(_require(vdoc, "t", "value"), "value.t")
        arrays = _require(vdoc, "values", "value")
        if not isinstance(arrays, list) or len(arrays) != len(levels):
            raise ModelFormatError(f"value.values must hold one array per level ({len(levels)})")
        curves = {q: PiecewiseLinear(knots, _floats(a, f"value.values[{i}]"))
                  for i, (q, a) in enumerate(zip(levels, arrays))}
        lo, hi = next(iter(curves.values())).hull
        if lo > 0 or hi < 1:
            raise ModelFormatError("value.t must cover types [0, 1]")

        def fn(q, t):
            return curves[q](t)
    else:
        raise ModelFormatError(f"value.family must be qualityroot, proportional or tabulated, got {family!r}")
    costs = doc.get("level_costs")
    costs = None if costs is None else _floats(costs, "level_costs")
    return QuantityInstance(tuple(levels), fn, None if costs is None else tuple(costs),
                            parse_distribution(doc.get("distribution")))


def read_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top level must be a JSON object")
    return doc


def load_model(path: str | Path) -> MarketInstance:
    return parse_model(read_json(path))


def load_quantity_model(path: str | Path) -> QuantityInstance:
    return parse_quantity_model(read_json(path))

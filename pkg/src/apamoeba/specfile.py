"""JSON sum specification files.

Schema (unknown keys are rejected at every level)::

    {
      "name": "optional free text",
      "dimension": 1,
      "base_irrationals": [{"label": "1", "value": "1"},
                           {"label": "sqrt2", "value": "1.4142135623730951"}],
      "terms": [
        {"coefficient": [1.0, 0.0], "frequency": [["0", "1"]], "label": "optional"},
        ...
      ]
    }

``frequency`` is a p x B matrix of exact rationals ("a/b" strings or
integers): row j holds the coefficients of the base irrationals in coordinate
j. When B = 1 a flat list of p entries is accepted. ``base_irrationals`` may be
omitted, meaning ``[{"label": "1", "value": "1"}]``.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any, Dict, List

from .errors import SumSpecError
from .expsum import BaseIrrationals, ExponentialSum, FrequencyVector

_TOP = {"name", "dimension", "base_irrationals", "terms"}
_BASE = {"label", "value"}
_TERM = {"coefficient", "frequency", "label"}


def _fail(path: str, msg: str):
    raise SumSpecError(f"{path}: {msg}")


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        _fail(path, f"unknown field(s) {extra}")


def _rational(v, path) -> Fraction:
    if isinstance(v, bool) or isinstance(v, float):
        _fail(path, "rationals must be integers or 'a/b' strings, not floats")
    try:
        return Fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        _fail(path, f"not a rational: {v!r}")


def _real(v, path) -> float:
    if isinstance(v, bool):
        _fail(path, "expected a number")
    try:
        x = float(v)
    except (TypeError, ValueError):
        _fail(path, f"not a number: {v!r}")
    if not math.isfinite(x):
        _fail(path, "must be finite")
    return x


def parse_sum_spec(text: str) -> ExponentialSum:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SumSpecError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return sum_from_dict(doc)


def sum_from_dict(doc: Dict[str, Any]) -> ExponentialSum:
    _check_keys(doc, _TOP, "$")
    for key in ("dimension", "terms"):
        if key not in doc:
            _fail("$", f"missing field '{key}'")
    p = doc["dimension"]
    if not isinstance(p, int) or isinstance(p, bool) or p < 1:
        _fail("$.dimension", "must be a positive integer")

    raw_base = doc.get("base_irrationals", [{"label": "1", "value": "1"}])
    if not isinstance(raw_base, list) or not raw_base:
        _fail("$.base_irrationals", "expected a nonempty list")
    labels, values = [], []
    for i, b in enumerate(raw_base):
        path = f"$.base_irrationals[{i}]"
        _check_keys(b, _BASE, path)
        if "label" not in b or "value" not in b:
            _fail(path, "needs 'label' and 'value'")
        labels.append(str(b["label"]))
        values.append(_real(b["value"], path + ".value"))
    try:
        basis = BaseIrrationals(tuple(values), tuple(labels))
    except ValueError as exc:
        _fail("$.base_irrationals", str(exc))
    nb = basis.size

    terms = doc["terms"]
    if not isinstance(terms, list) or not terms:
        _fail("$.terms", "expected a nonempty list")
    items = []
    seen_labels: Dict[FrequencyVector, str] = {}
    for i, t in enumerate(terms):
        path = f"$.terms[{i}]"
        _check_keys(t, _TERM, path)
        if "coefficient" not in t or "frequency" not in t:
            _fail(path, "needs 'coefficient' and 'frequency'")
        c = t["coefficient"]
        if isinstance(c, (int, float)) and not isinstance(c, bool):
            c = [c, 0]
        if not isinstance(c, list) or len(c) != 2:
            _fail(path + ".coefficient", "expected [re, im]")
        coef = complex(_real(c[0], path + ".coefficient[0]"), _real(c[1], path + ".coefficient[1]"))
        fr = t["frequency"]
        if not isinstance(fr, list) or len(fr) != p:
            _fail(path + ".frequency", f"expected {p} rows")
        rows = []
        for j, row in enumerate(fr):
            rpath = f"{path}.frequency[{j}]"
            if not isinstance(row, list):
                if nb != 1:
                    _fail(rpath, f"expected a list of {nb} rationals")
                row = [row]
            if len(row) != nb:
                _fail(rpath, f"expected {nb} entries")
            rows.append(tuple(_rational(v, f"{rpath}[{m}]") for m, v in enumerate(row)))
        freq = FrequencyVector(tuple(rows))
        label = t.get("label")
        if label is not None:
            prev = seen_labels.get(freq)
            if prev is not None and prev != label:
                _fail(path + ".label", f"frequency {freq} already labelled {prev!r}")
            seen_labels[freq] = label
        items.append((coef, freq))
    try:
        return ExponentialSum(p, basis, tuple(items))
    except ValueError as exc:
        _fail("$.terms", str(exc))


def sum_to_dict(sum_: ExponentialSum, name: str = None) -> Dict[str, Any]:
    doc: Dict[str, Any] = {}
    if name is not None:
        doc["name"] = name
    doc["dimension"] = sum_.dimension
    doc["base_irrationals"] = [
        {"label": lab, "value": repr(val)} for lab, val in zip(sum_.basis.labels, sum_.basis.values)
    ]
    doc["terms"] = [
        {"coefficient": [c.real, c.imag], "frequency": [[str(a) for a in row] for row in f.coords]}
        for c, f in sum_.terms
    ]
    return doc


def dump_sum_spec(sum_: ExponentialSum, name: str = None) -> str:
    return json.dumps(sum_to_dict(sum_, name), indent=2) + "\n"


def describe_frequency(freq: FrequencyVector, labels) -> List[str]:
    """Human-readable coordinates, e.g. ``['1/2 + 3*sqrt2']``."""
    out = []
    for row in freq.coords:
        parts = []
        for m, (q, lab) in enumerate(zip(row, labels)):
            if q == 0:
                continue
            parts.append(str(q) if m == 0 else (lab if q == 1 else f"{q}*{lab}"))
        out.append(" + ".join(parts) if parts else "0")
    return out

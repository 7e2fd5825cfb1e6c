"""JSON wire format for algebra elements.

::

    {"shape": [{"type": "finite", "dim": 2}, {"type": "shift"}],
     "blocks": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                {"symbol": {"1": [1, 0]},
                 "perturbation": [{"i": 0, "j": 0, "re": 0.5, "im": 0}]}]}

Complex numbers are ``[re, im]`` pairs and all indices are 0-based. Floats
are written with ``repr`` precision so ``parse(dump(x)) == x`` exactly.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import AlgebraElement, AlgebraShape, FiniteFactor, ShiftFactor
from .errors import CStarError, ParseError
from .shift import ShiftClassOperator

MAX_DIM = 512
MAX_INDEX = 512
MAX_DEGREE = 1024
_DEGREE = re.compile(r"[+-]?[0-9]{1,6}")


def _number(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{what}: expected a number, got {type(v).__name__}")
    f = float(v)
    if not math.isfinite(f):
        raise ParseError(f"{what}: non-finite value")
    return f


def _index(v, what: str, bound: int) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{what}: expected an integer")
    if not 0 <= v < bound:
        raise ParseError(f"{what}: index {v} outside [0, {bound})")
    return v


def complex_to_pair(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def pair_to_complex(v, what: str = "complex") -> complex:
    if not isinstance(v, list) or len(v) != 2:
        raise ParseError(f"{what}: expected [re, im]")
    return complex(_number(v[0], what), _number(v[1], what))


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[complex_to_pair(z) for z in row] for row in m]


def vectors_to_json(q) -> list:
    """Columns of ``q`` as lists of ``[re, im]`` pairs."""
    q = np.asarray(q, dtype=complex)
    return [[complex_to_pair(z) for z in q[:, j]] for j in range(q.shape[1])]


def parse_matrix(obj, rows: int | None = None, cols: int | None = None, what: str = "matrix") -> np.ndarray:
    if not isinstance(obj, list):
        raise ParseError(f"{what}: expected a list of rows")
    if rows is not None and len(obj) != rows:
        raise ParseError(f"{what}: expected {rows} rows, got {len(obj)}")
    if len(obj) > MAX_DIM:
        raise ParseError(f"{what}: too many rows")
    out = []
    for r, row in enumerate(obj):
        if not isinstance(row, list):
            raise ParseError(f"{what}: row {r} is not a list")
        if cols is not None and len(row) != cols:
            raise ParseError(f"{what}: row {r} has {len(row)} entries, expected {cols}")
        out.append([pair_to_complex(v, f"{what}[{r}]") for v in row])
    if out and len({len(r) for r in out}) != 1:
        raise ParseError(f"{what}: ragged rows")
    ncols = len(out[0]) if out else (cols or 0)
    return np.array(out, dtype=complex).reshape(len(out), ncols)


def shape_to_json(shape: AlgebraShape) -> list:
    return [
        {"type": "finite", "dim": int(b.dim)} if isinstance(b, FiniteFactor) else {"type": "shift"}
        for b in shape
    ]


def parse_shape(obj) -> AlgebraShape:
    if not isinstance(obj, list) or not obj:
        raise ParseError("shape: expected a nonempty list")
    blocks = []
    for k, b in enumerate(obj):
        if not isinstance(b, dict) or "type" not in b:
            raise ParseError(f"shape[{k}]: expected an object with a 'type'")
        if b["type"] == "shift":
            blocks.append(ShiftFactor())
        elif b["type"] == "finite":
            dim = b.get("dim")
            if isinstance(dim, bool) or not isinstance(dim, int) or not 1 <= dim <= MAX_DIM:
                raise ParseError(f"shape[{k}]: 'dim' must be an integer in [1, {MAX_DIM}]")
            blocks.append(FiniteFactor(dim))
        else:
            raise ParseError(f"shape[{k}]: unknown type {b['type']!r}")
    return AlgebraShape(tuple(blocks))


def shift_to_json(op: ShiftClassOperator) -> dict:
    return {
        "symbol": {str(k): complex_to_pair(c) for k, c in op.symbol.items()},
        "perturbation": [
            {"i": i, "j": j, "re": float(c.real), "im": float(c.imag)}
            for (i, j), c in sorted(op.entries().items())
        ],
    }


def parse_shift(obj, what: str = "shift block") -> ShiftClassOperator:
    if not isinstance(obj, dict):
        raise ParseError(f"{what}: expected an object")
    sym = obj.get("symbol", {})
    pert = obj.get("perturbation", [])
    if not isinstance(sym, dict):
        raise ParseError(f"{what}: 'symbol' must be an object")
    if not isinstance(pert, list):
        raise ParseError(f"{what}: 'perturbation' must be a list")
    coeffs = {}
    for key, val in sym.items():
        if not _DEGREE.fullmatch(key):
            raise ParseError(f"{what}: symbol degree {key!r} is not an integer")
        k = int(key)
        if abs(k) > MAX_DEGREE:
            raise ParseError(f"{what}: symbol degree {k} too large")
        coeffs[k] = coeffs.get(k, 0j) + pair_to_complex(val, f"{what} symbol[{key}]")
    entries: dict[tuple[int, int], complex] = {}
    for n, e in enumerate(pert):
        if not isinstance(e, dict):
            raise ParseError(f"{what}: perturbation[{n}] must be an object")
        i = _index(e.get("i"), f"{what} perturbation[{n}].i", MAX_INDEX)
        j = _index(e.get("j"), f"{what} perturbation[{n}].j", MAX_INDEX)
        real = _number(e.get("re", 0.0), f"{what} perturbation[{n}].re")
        imag = _number(e.get("im", 0.0), f"{what} perturbation[{n}].im")
        entries[(i, j)] = entries.get((i, j), 0j) + complex(real, imag)
    try:
        return ShiftClassOperator.from_entries(coeffs, entries)
    except ValueError as exc:
        raise ParseError(f"{what}: {exc}") from exc


def element_to_json(x: AlgebraElement) -> dict:
    blocks = []
    for b, payload in zip(x.shape, x.blocks):
        if isinstance(b, ShiftFactor):
            blocks.append(shift_to_json(payload))
        else:
            blocks.append(matrix_to_json(payload))
    return {"shape": shape_to_json(x.shape), "blocks": blocks}


def parse_element(obj: Any) -> AlgebraElement:
    if not isinstance(obj, dict):
        raise ParseError("element: expected a JSON object")
    if "shape" not in obj or "blocks" not in obj:
        raise ParseError("element: needs 'shape' and 'blocks'")
    shape = parse_shape(obj["shape"])
    blocks = obj["blocks"]
    if not isinstance(blocks, list) or len(blocks) != len(shape):
        raise ParseError(f"element: expected {len(shape)} blocks")
    payloads = []
    for k, (b, data) in enumerate(zip(shape, blocks)):
        if isinstance(b, ShiftFactor):
            payloads.append(parse_shift(data, f"blocks[{k}]"))
        else:
            payloads.append(parse_matrix(data, b.dim, b.dim, f"blocks[{k}]"))
    try:
        return AlgebraElement(shape, payloads)
    except CStarError as exc:
        raise ParseError(str(exc)) from exc


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default, allow_nan=False) + "\n"


def dump_element(x: AlgebraElement) -> str:
    return dumps(element_to_json(x))


def loads_element(text: str) -> AlgebraElement:
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError, RecursionError) as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    return parse_element(obj)


def read_json(path: str | Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except (json.JSONDecodeError, RecursionError) as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}") from exc


def read_element(path: str | Path) -> AlgebraElement:
    return parse_element(read_json(path))

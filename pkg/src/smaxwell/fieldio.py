"""Field dump format.

One JSON header line::

    {"n": 4, "m": 8, "L": 4.0, "kind": "oneform", "components": 4}

followed by ``components * m**n`` little-endian float64 values, component
major, row-major (C order) within each component.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fields import GridSpec, OneForm, ScalarField


class FieldFormatError(ValueError):
    pass


def write_field(path: str | Path, field: ScalarField | OneForm) -> None:
    g = field.grid
    if isinstance(field, OneForm):
        kind, data = "oneform", field.components
    else:
        kind, data = "scalar", field.values[None]
    header = {"n": g.n, "m": g.m, "L": g.L, "kind": kind, "components": int(data.shape[0])}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def read_field(path: str | Path) -> ScalarField | OneForm:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FieldFormatError("missing header line")
    try:
        header = json.loads(raw[:nl])
        n, m, L = int(header["n"]), int(header["m"]), float(header["L"])
        kind, k = header["kind"], int(header["components"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FieldFormatError(f"bad header: {exc}") from exc
    if kind not in ("scalar", "oneform"):
        raise FieldFormatError(f"unknown kind {kind!r}")
    try:
        grid = GridSpec(n, m, L)
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from exc
    body = raw[nl + 1 :]
    want = 8 * k * m**n
    if len(body) != want:
        raise FieldFormatError(f"expected {want} payload bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f8").astype(float).reshape((k,) + grid.shape)
    if not np.all(np.isfinite(data)):
        raise FieldFormatError("non-finite values in payload")
    if kind == "scalar":
        if k != 1:
            raise FieldFormatError("scalar dump must have exactly one component")
        return ScalarField(data[0].copy(), grid)
    if k != n:
        raise FieldFormatError(f"one-form dump needs {n} components, has {k}")
    return OneForm(data.copy(), grid)

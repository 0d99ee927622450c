"""Reading and writing the plain-text ``TNS v1`` tensor format.

Layout: the first non-comment line holds the order ``m``, the second the
``m`` dims, and the remaining tokens the entries in row-major order. Lines
starting with ``#`` are skipped. Headerless CSV files are read as matrices.
"""

from __future__ import annotations

import os

import numpy as np

from .tensor import DenseTensor, as_tensor


class TNSFormatError(ValueError):
    pass


def _tokens(text):
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield stripped


def parse_tns(text: str) -> DenseTensor:
    lines = list(_tokens(text))
    if len(lines) < 2:
        raise TNSFormatError("missing order/dims header")
    try:
        order = int(lines[0])
        dims = [int(t) for t in lines[1].split()]
    except ValueError as exc:
        raise TNSFormatError(f"bad header: {exc}") from None
    if order < 1 or len(dims) != order:
        raise TNSFormatError(f"order {order} does not match dims {dims}")
    if any(d < 1 for d in dims):
        raise TNSFormatError(f"dims must be positive, got {dims}")
    try:
        values = [float(t) for line in lines[2:] for t in line.split()]
    except ValueError as exc:
        raise TNSFormatError(f"bad value: {exc}") from None
    expected = int(np.prod(dims))
    if len(values) != expected:
        raise TNSFormatError(f"expected {expected} values, found {len(values)}")
    try:
        return DenseTensor(values, shape=dims)
    except ValueError as exc:
        raise TNSFormatError(str(exc)) from None


def parse_csv(text: str) -> DenseTensor:
    rows = []
    for line in _tokens(text):
        try:
            rows.append([float(t) for t in line.split(",")])
        except ValueError as exc:
            raise TNSFormatError(f"bad CSV value: {exc}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise TNSFormatError("CSV rows must be nonempty and of equal length")
    try:
        return DenseTensor(rows)
    except ValueError as exc:
        raise TNSFormatError(str(exc)) from None


def format_tns(a) -> str:
    a = as_tensor(a)
    out = ["# TNS v1", str(a.order), " ".join(str(d) for d in a.shape)]
    rows = a.data.reshape(-1, a.shape[-1])
    out.extend(" ".join(repr(float(v)) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def read_tensor(path) -> DenseTensor:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if os.fspath(path).lower().endswith(".csv"):
        return parse_csv(text)
    return parse_tns(text)


def write_tensor(path, a) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_tns(a))

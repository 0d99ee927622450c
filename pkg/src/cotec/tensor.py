"""Dense order-m tensors and the multilinear operations used by the clusterers."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import DimensionError


class DenseTensor:
    """Immutable dense tensor of 64-bit floats stored in row-major order.

    Parameters
    ----------
    data:
        Nested sequence, ndarray, or flat sequence of values.
    shape:
        Optional dims. When given, ``data`` is read as a flat row-major
        sequence and must hold exactly ``prod(shape)`` values.
    """

    __slots__ = ("_data",)

    def __init__(self, data, shape: Sequence[int] | None = None):
        arr = np.array(data, dtype=np.float64, order="C")
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            if arr.size != int(np.prod(shape, dtype=np.int64)):
                raise DimensionError(
                    f"{arr.size} values cannot fill shape {shape}"
                )
            arr = arr.reshape(shape)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if any(s < 1 for s in arr.shape):
            raise DimensionError(f"every dim must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
            raise ValueError(f"non-finite entry at index {bad}")
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        """Read-only ndarray view of the entries."""
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def order(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def flat(self) -> np.ndarray:
        return self._data.reshape(-1)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __repr__(self):
        return f"DenseTensor(shape={self.shape})"

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    __hash__ = None

    def __add__(self, other):
        other = as_tensor(other)
        _check_same_shape(self, other)
        return DenseTensor(self._data + other._data)

    def __sub__(self, other):
        other = as_tensor(other)
        _check_same_shape(self, other)
        return DenseTensor(self._data - other._data)

    def __mul__(self, scalar):
        return DenseTensor(self._data * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return DenseTensor(-self._data)


def as_tensor(a) -> DenseTensor:
    return a if isinstance(a, DenseTensor) else DenseTensor(a)


def _check_same_shape(a: DenseTensor, b: DenseTensor):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def mode_product(a, mat, mode: int) -> np.ndarray:
    """Multiply ``mat`` (p x n_mode) into one mode of ndarray ``a``."""
    mat = np.asarray(mat, dtype=np.float64)
    out = np.tensordot(mat, a, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def multilinear_multiply(mats, a) -> DenseTensor:
    """Apply one matrix per mode: ``(P_1, ..., P_m) . A``.

    Entry ``(i_1, ..., i_m)`` of the result is
    ``sum_j P_1[i_1, j_1] ... P_m[i_m, j_m] A[j_1, ..., j_m]``. The product is
    evaluated one mode at a time. A ``None`` entry in ``mats`` stands for the
    identity on that mode.
    """
    a = as_tensor(a)
    if len(mats) != a.order:
        raise DimensionError(
            f"need {a.order} matrices for an order-{a.order} tensor, got {len(mats)}"
        )
    out = a.data
    for mode, mat in enumerate(mats):
        if mat is None:
            continue
        mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
        if mat.ndim != 2 or mat.shape[1] != a.shape[mode]:
            raise DimensionError(
                f"mode {mode}: matrix has shape {mat.shape}, "
                f"needs {a.shape[mode]} columns"
            )
        out = mode_product(out, mat, mode)
    return DenseTensor(out)


def inner_product(a, b) -> float:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b)
    return float(np.dot(a.flat, b.flat))


def lp_norm(a, p: float = 2.0) -> float:
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    a = as_tensor(a)
    if p == 2:
        return float(np.sqrt(np.dot(a.flat, a.flat)))
    return float(np.sum(np.abs(a.flat) ** p) ** (1.0 / p))


def frobenius_norm(a) -> float:
    return lp_norm(a, 2.0)


def fibers_along(a, dim: int) -> np.ndarray:
    """Slices of ``a`` with index ``i`` fixed on ``dim``, flattened row-major.

    Returns an array of shape ``(n_dim, size // n_dim)``; row ``i`` is the
    slice ``A[..., i, ...]``.
    """
    a = as_tensor(a)
    if not 0 <= dim < a.order:
        raise DimensionError(f"dim {dim} out of range for order {a.order}")
    return np.moveaxis(a.data, dim, 0).reshape(a.shape[dim], -1)


def from_fibers(fibers, dim: int, shape: Sequence[int]) -> DenseTensor:
    """Inverse of :func:`fibers_along`."""
    shape = tuple(shape)
    rest = shape[:dim] + shape[dim + 1:]
    arr = np.asarray(fibers, dtype=np.float64).reshape((shape[dim],) + rest)
    return DenseTensor(np.moveaxis(arr, 0, dim))

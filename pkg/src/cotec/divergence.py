"""Separable divergences, their optimal representatives, and curvature bounds.

A divergence acts on scalars; tensors and vectors are compared by summing the
scalar divergence over all entries. Bregman divergences take the data point
as their first argument, so the arithmetic mean is the exact minimizer of the
within-cluster cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import DimensionError, DomainError
from .tensor import as_tensor

SQEUCLIDEAN = "sqeuclidean"
KL = "kl"
L1 = "l1"
BREGMAN = "bregman"
KERNEL = "kernel"

DEFAULT_KL_EPS = 1e-6
_NEG_TOL = 1e-12


@dataclass(frozen=True)
class DivergenceSpec:
    """A scalar divergence family plus the data needed to evaluate it.

    Use the module constructors (:func:`squared_euclidean`,
    :func:`generalized_kl`, :func:`l1`, :func:`custom_bregman`,
    :func:`hilbertian`) or :func:`from_token` rather than building this
    directly.
    """

    kind: str
    name: str
    eps: float = DEFAULT_KL_EPS
    f: Optional[Callable] = field(default=None, compare=False)
    fprime: Optional[Callable] = field(default=None, compare=False)
    domain: tuple = (-np.inf, np.inf)
    kernel: Optional[Callable] = field(default=None, compare=False)

    @property
    def is_bregman(self) -> bool:
        return self.kind in (SQEUCLIDEAN, KL, BREGMAN)

    @property
    def is_metric(self) -> bool:
        return self.kind == L1 or self.name == "kernel:absdiff"

    def check_domain(self, x, what="value"):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == KL:
            bad = x < self.eps
            lo, hi = self.eps, np.inf
        elif self.kind == BREGMAN:
            lo, hi = self.domain
            bad = (x < lo) | (x > hi)
        else:
            return
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(np.atleast_1d(bad))[0])
            val = float(np.atleast_1d(x)[idx])
            raise DomainError(
                f"{what} {val!r} at index {idx} outside [{lo}, {hi}] for {self.name}",
                index=idx,
            )

    def elementwise(self, x, y) -> np.ndarray:
        """Broadcasting evaluation of ``d(x, y)``; no domain checks."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == SQEUCLIDEAN:
            diff = x - y
            return diff * diff
        if self.kind == L1:
            return np.abs(x - y)
        if self.kind == KL:
            out = x * np.log(x / y) - x + y
        elif self.kind == BREGMAN:
            out = self.f(x) - self.f(y) - self.fprime(y) * (x - y)
        elif self.kind == KERNEL:
            c = self.kernel
            out = -c(x, y) + 0.5 * (c(x, x) + c(y, y))
        else:
            raise ValueError(f"unknown divergence kind {self.kind!r}")
        return np.maximum(out, 0.0)


@dataclass(frozen=True)
class CurvatureBounds:
    """Constants with ``sigma_L B(x, y) <= (x - y)^2 <= sigma_U B(x, y)``."""

    sigma_L: float
    sigma_U: float

    def __post_init__(self):
        if not self.sigma_L > 0:
            raise ValueError(f"sigma_L must be positive, got {self.sigma_L}")
        if self.sigma_U < self.sigma_L:
            raise ValueError("sigma_U must be >= sigma_L")

    @property
    def ratio(self) -> float:
        return self.sigma_U / self.sigma_L


def squared_euclidean() -> DivergenceSpec:
    return DivergenceSpec(SQEUCLIDEAN, "sqeuclidean")


def generalized_kl(eps: float = DEFAULT_KL_EPS) -> DivergenceSpec:
    if not eps > 0:
        raise ValueError("KL positivity floor must be > 0")
    return DivergenceSpec(KL, "kl", eps=float(eps))


def l1() -> DivergenceSpec:
    return DivergenceSpec(L1, "l1")


def _spot_check_convex(fprime, domain, samples=64):
    lo, hi = domain
    lo_f = lo if np.isfinite(lo) else -10.0
    hi_f = hi if np.isfinite(hi) else max(lo_f + 20.0, 10.0)
    span = hi_f - lo_f
    xs = np.linspace(lo_f + 0.01 * span, hi_f - 0.01 * span, samples)
    h = 1e-4 * span
    second = (fprime(xs + h) - fprime(xs - h)) / (2 * h)
    if not np.all(second > 0):
        bad = float(xs[np.argmax(~(second > 0))])
        raise ValueError(f"f is not strictly convex near x={bad}")


def custom_bregman(f, fprime, domain=(-np.inf, np.inf), name="bregman") -> DivergenceSpec:
    """Bregman divergence ``f(x) - f(y) - f'(y)(x - y)`` from scalar handles."""
    vf = np.vectorize(f, otypes=[np.float64])
    vfp = np.vectorize(fprime, otypes=[np.float64])
    domain = (float(domain[0]), float(domain[1]))
    _spot_check_convex(vfp, domain)
    return DivergenceSpec(BREGMAN, name, f=vf, fprime=vfp, domain=domain)


def absdiff_kernel(x, y):
    return -np.abs(np.subtract(x, y))


def sqdiff_kernel(x, y):
    d = np.subtract(x, y)
    return -d * d


_KERNELS = {"absdiff": absdiff_kernel, "sqdiff": sqdiff_kernel}


def hilbertian(kernel, name="kernel:custom") -> DivergenceSpec:
    """Metric ``d_C(x,y) = -C(x,y) + (C(x,x) + C(y,y)) / 2`` of a CPD kernel ``C``."""
    return DivergenceSpec(KERNEL, name, kernel=kernel)


def from_token(token: str, eps: float = DEFAULT_KL_EPS) -> DivergenceSpec:
    """Parse ``sqeuclidean | kl | l1 | kernel:absdiff | kernel:sqdiff``."""
    if token == "sqeuclidean":
        return squared_euclidean()
    if token == "kl":
        return generalized_kl(eps)
    if token == "l1":
        return l1()
    if token.startswith("kernel:") and token[7:] in _KERNELS:
        return hilbertian(_KERNELS[token[7:]], name=token)
    raise ValueError(f"unknown divergence token {token!r}")


def scalar_div(spec: DivergenceSpec, x: float, y: float) -> float:
    spec.check_domain(np.array([x, y]))
    return float(spec.elementwise(x, y))


def tensor_div(spec: DivergenceSpec, a, b) -> float:
    """Sum of the scalar divergence over all entries of two same-shape tensors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    spec.check_domain(a.data, "entry of first tensor")
    spec.check_domain(b.data, "entry of second tensor")
    return float(np.sum(spec.elementwise(a.data, b.data)))


def weighted_lower_median(values, weights=None) -> float:
    """Smallest value whose cumulative weight reaches half the total."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if weights is None:
        return float(np.sort(values)[(values.size - 1) // 2])
    weights = np.asarray(weights, dtype=np.float64).ravel()
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    # relative slack keeps exact half-way ties on the lower side
    idx = int(np.searchsorted(cum, 0.5 * cum[-1] * (1 - 1e-12)))
    return float(values[order[idx]])


def representative(spec: DivergenceSpec, values, weights=None) -> float:
    """Scalar minimizing the (weighted) summed divergence from ``values``.

    Bregman kinds and kernels use the mean; L1 uses the weighted lower median.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("representative of an empty list")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.shape != values.shape:
            raise DimensionError("weights and values differ in length")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
    spec.check_domain(values)
    if spec.kind == L1:
        return weighted_lower_median(values, weights)
    return float(np.average(values, weights=weights))


def kl_curvature_bounds(data_min: float, data_max: float) -> CurvatureBounds:
    """Curvature bounds of generalized KL on ``[data_min, data_max]``.

    With ``f = x log x`` the divergence equals ``(x - y)^2 / (2 xi)`` for some
    ``xi`` between x and y, so the constants are twice the interval ends.
    """
    if not data_min > 0:
        raise ValueError(f"data_min must be positive, got {data_min}")
    if data_max < data_min:
        raise ValueError("data_max must be >= data_min")
    return CurvatureBounds(2.0 * data_min, 2.0 * data_max)


def curvature_bounds_for(spec: DivergenceSpec, data) -> CurvatureBounds:
    """Bounds over the value range of ``data`` for the divergences that have them."""
    if spec.kind == SQEUCLIDEAN:
        return CurvatureBounds(1.0, 1.0)
    if spec.kind == KL:
        arr = np.asarray(data, dtype=np.float64)
        return kl_curvature_bounds(float(arr.min()), float(arr.max()))
    raise ValueError(f"no curvature bounds for {spec.name}")

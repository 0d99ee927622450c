"""Clustering a set of vectors: seeding, Lloyd refinement and kernel k-means.

Points are rows of a 2-D array. The divergence between a point and a center
is the sum of the scalar divergence over coordinates, with the point as the
first argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .divergence import KERNEL, L1, DivergenceSpec, hilbertian

SEEDINGS = ("uniform", "dsq")
REFINEMENTS = ("none", "lloyd")


@dataclass(frozen=True)
class Assignment:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.size

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def indicator(self) -> np.ndarray:
        """0/1 matrix of shape ``(n, k)``."""
        out = np.zeros((self.n, self.k))
        out[np.arange(self.n), self.labels] = 1.0
        return out

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    __hash__ = None


@dataclass(frozen=True)
class ClusterConfig:
    k: int
    seeding: str = "dsq"
    refine: str = "none"
    restarts: int = 1
    max_iters: int = 100
    tol: float = 1e-9
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.seeding not in SEEDINGS:
            raise ValueError(f"seeding must be one of {SEEDINGS}")
        if self.refine not in REFINEMENTS:
            raise ValueError(f"refine must be one of {REFINEMENTS}")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be a nonnegative integer")


@dataclass
class ClusterResult:
    assignment: Assignment
    centers: Optional[np.ndarray]
    objective: float
    iters: int = 0
    trace: list = field(default_factory=list)
    restart: int = 0


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty 2-D array (n, d)")
    return pts


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Generator keyed by ``(seed, *keys)``; independent of call order."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])


def cost_matrix(points, centers, spec: DivergenceSpec) -> np.ndarray:
    """``out[i, c]`` = summed divergence from point ``i`` to center ``c``."""
    return spec.elementwise(points[:, None, :], centers[None, :, :]).sum(axis=-1)


def _check_k(n, k):
    if k > n:
        raise ValueError(f"cannot pick k={k} centers from {n} points")
    if k < 1:
        raise ValueError("k must be >= 1")


def _sample_proportional(weights, rng) -> int:
    cum = np.cumsum(weights)
    u = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, u, side="right"), len(weights) - 1))


def seed_uniform_indices(n: int, k: int, rng) -> np.ndarray:
    _check_k(n, k)
    return rng.choice(n, size=k, replace=False)


def seed_dsq_indices(points, k: int, spec: DivergenceSpec, rng) -> np.ndarray:
    """D^2-style seeding: each new center drawn proportional to the divergence
    from a point to its nearest chosen center."""
    points = as_points(points)
    n = points.shape[0]
    _check_k(n, k)
    chosen = [int(rng.integers(n))]
    nearest = cost_matrix(points, points[chosen], spec)[:, 0]
    for _ in range(1, k):
        mass = nearest.copy()
        mass[chosen] = 0.0
        if not mass.sum() > 0:
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(free[rng.integers(free.size)])
        else:
            idx = _sample_proportional(mass, rng)
        chosen.append(idx)
        nearest = np.minimum(nearest, cost_matrix(points, points[[idx]], spec)[:, 0])
    return np.asarray(chosen, dtype=np.int64)


def seed_uniform(points, k: int, rng) -> np.ndarray:
    points = as_points(points)
    return points[seed_uniform_indices(points.shape[0], k, rng)].copy()


def seed_dsq(points, k: int, spec: DivergenceSpec, rng) -> np.ndarray:
    points = as_points(points)
    return points[seed_dsq_indices(points, k, spec, rng)].copy()


def assign(points, centers, spec: DivergenceSpec):
    """Nearest-center labels (lowest index wins ties) and the cost matrix."""
    costs = cost_matrix(points, centers, spec)
    return np.argmin(costs, axis=1), costs


def repair_empty(labels: np.ndarray, k: int, point_costs: np.ndarray) -> np.ndarray:
    """Move the worst-fitting point of a multi-point cluster into each empty one."""
    labels = labels.copy()
    point_costs = np.asarray(point_costs, dtype=np.float64).copy()
    sizes = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(sizes == 0):
        movable = sizes[labels] > 1
        cand = np.where(movable, point_costs, -np.inf)
        i = int(np.argmax(cand))
        sizes[labels[i]] -= 1
        sizes[c] += 1
        labels[i] = c
        point_costs[i] = 0.0
    return labels


def update_centers(points, labels, k, spec: DivergenceSpec, previous) -> np.ndarray:
    """Coordinatewise representatives per cluster; empty clusters keep ``previous``."""
    centers = np.array(previous, dtype=np.float64, copy=True)
    if spec.kind == L1:
        for c in range(k):
            members = points[labels == c]
            if members.shape[0]:
                centers[c] = np.sort(members, axis=0)[(members.shape[0] - 1) // 2]
        return centers
    onehot = np.zeros((points.shape[0], k))
    onehot[np.arange(points.shape[0]), labels] = 1.0
    counts = onehot.sum(axis=0)
    nonempty = counts > 0
    centers[nonempty] = (onehot.T @ points)[nonempty] / counts[nonempty, None]
    # residual pass keeps clusters of identical points exactly on their value
    resid = onehot.T @ (points - centers[labels])
    centers[nonempty] += resid[nonempty] / counts[nonempty, None]
    return centers


def lloyd_refine(points, init_centers, spec: DivergenceSpec, max_iters=100, tol=1e-9) -> ClusterResult:
    """Alternate nearest-center assignment and representative updates.

    ``trace[0]`` is the cost of assigning to ``init_centers``; each later
    entry is the objective of the current partition with its optimal
    representatives. Stops when labels repeat, when the relative decrease
    drops to ``tol`` or below, or after ``max_iters`` iterations.
    """
    points = as_points(points)
    centers = np.array(init_centers, dtype=np.float64, ndmin=2)
    k = centers.shape[0]
    spec.check_domain(centers, "center value")
    labels, costs = assign(points, centers, spec)
    j_prev = float(costs[np.arange(len(labels)), labels].sum())
    trace = [j_prev]
    iters = 0
    for iters in range(1, max_iters + 1):
        centers = update_centers(points, labels, k, spec, centers)
        new_labels, costs = assign(points, centers, spec)
        new_labels = repair_empty(new_labels, k, costs[np.arange(len(new_labels)), new_labels])
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        centers = update_centers(points, labels, k, spec, centers)
        j = float(cost_matrix(points, centers, spec)[np.arange(len(labels)), labels].sum())
        trace.append(j)
        if stable or j_prev - j <= tol * j_prev:
            break
        j_prev = j
    return ClusterResult(Assignment(labels, k), centers, trace[-1], iters, trace)


def _as_kernel_spec(kernel) -> DivergenceSpec:
    if isinstance(kernel, DivergenceSpec):
        if kernel.kind != KERNEL:
            raise ValueError(f"{kernel.name} is not a kernel divergence")
        return kernel
    return hilbertian(kernel)


def kernel_gram(points, kernel, anchor=0.0, chunk=1 << 21) -> np.ndarray:
    """Gram matrix of ``K(x,y) = (C(x,y) - C(x,a) - C(y,a) + C(a,a)) / 2``,
    summed over coordinates."""
    points = as_points(points)
    c = _as_kernel_spec(kernel).kernel
    n, d = points.shape
    gram = np.zeros((n, n))
    step = max(1, chunk // max(1, n * n))
    for lo in range(0, d, step):
        x = points[:, lo:lo + step]
        cxa = c(x, anchor)
        gram += 0.5 * (
            c(x[:, None, :], x[None, :, :])
            - cxa[:, None, :]
            - cxa[None, :, :]
            + c(anchor, anchor)
        ).sum(axis=-1)
    return gram


def _feature_distances(gram, weights):
    """Squared feature-space distance from every point to each weighted centroid."""
    kw = gram @ weights
    return np.diag(gram)[:, None] - 2.0 * kw + np.einsum("ic,ic->c", weights, kw)[None, :]


def _mean_weights(labels, k, previous):
    weights = previous.copy()
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts):
        weights[:, c] = (labels == c) / counts[c]
    return weights


def kernel_kmeans(points, k, kernel, max_iters=100, tol=1e-9, rng=None, init=None) -> ClusterResult:
    """Kernel k-means for a CPD kernel, seeded by D^2 sampling under ``d_C``.

    Centroids live in feature space and are tracked as weight vectors over
    the points. ``init`` may supply seed indices; otherwise they are drawn
    from ``rng``. Mirrors :func:`lloyd_refine` step for step.
    """
    points = as_points(points)
    spec = _as_kernel_spec(kernel)
    n = points.shape[0]
    _check_k(n, k)
    if init is None:
        if rng is None:
            raise ValueError("kernel_kmeans needs rng or init")
        init = seed_dsq_indices(points, k, spec, rng)
    gram = kernel_gram(points, spec)
    weights = np.zeros((n, k))
    weights[np.asarray(init), np.arange(k)] = 1.0
    rows = np.arange(n)
    dist = _feature_distances(gram, weights)
    labels = np.argmin(dist, axis=1)
    j_prev = float(dist[rows, labels].sum())
    trace = [j_prev]
    iters = 0
    for iters in range(1, max_iters + 1):
        weights = _mean_weights(labels, k, weights)
        dist = _feature_distances(gram, weights)
        new_labels = np.argmin(dist, axis=1)
        new_labels = repair_empty(new_labels, k, dist[rows, new_labels])
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        weights = _mean_weights(labels, k, weights)
        j = float(np.maximum(_feature_distances(gram, weights)[rows, labels], 0.0).sum())
        trace.append(j)
        if stable or j_prev - j <= tol * j_prev:
            break
        j_prev = j
    return ClusterResult(Assignment(labels, k), None, trace[-1], iters, trace)


def _single_run(points, cfg: ClusterConfig, spec: DivergenceSpec, rng) -> ClusterResult:
    n = points.shape[0]
    if cfg.seeding == "uniform":
        idx = seed_uniform_indices(n, cfg.k, rng)
    else:
        idx = seed_dsq_indices(points, cfg.k, spec, rng)
    if cfg.refine == "lloyd":
        if spec.kind == KERNEL:
            return kernel_kmeans(points, cfg.k, spec, cfg.max_iters, cfg.tol, init=idx)
        return lloyd_refine(points, points[idx], spec, cfg.max_iters, cfg.tol)
    centers = points[idx].copy()
    labels, costs = assign(points, centers, spec)
    obj = float(costs[np.arange(n), labels].sum())
    return ClusterResult(Assignment(labels, cfg.k), centers, obj, 0, [obj])


def cluster_1d(points, cfg: ClusterConfig, spec: DivergenceSpec, stream: Sequence[int] = ()) -> ClusterResult:
    """Best of ``cfg.restarts`` seeded runs (earliest restart wins ties).

    Restart ``r`` draws from the generator keyed by
    ``(cfg.rng_seed, *stream, r)``.
    """
    points = as_points(points)
    _check_k(points.shape[0], cfg.k)
    spec.check_domain(points, "point coordinate")
    best = None
    for r in range(cfg.restarts):
        res = _single_run(points, cfg, spec, substream(cfg.rng_seed, *stream, r))
        res.restart = r
        if best is None or res.objective < best.objective:
            best = res
    return best

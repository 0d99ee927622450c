"""Exact oracles and numerical checkers for the approximation guarantees."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .cluster1d import Assignment, as_points, update_centers
from .divergence import (
    KERNEL,
    L1,
    SQEUCLIDEAN,
    CurvatureBounds,
    DivergenceSpec,
    curvature_bounds_for,
    squared_euclidean,
)
from .exceptions import BudgetExceeded, DimensionError
from .tenclus import CoClustering, _block_reps, block_index, make_coclustering
from .tensor import DenseTensor, as_tensor, fibers_along, frobenius_norm, multilinear_multiply

DEFAULT_BUDGET = 10**7


# -- partition enumeration ---------------------------------------------------

@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind by the usual recurrence."""
    if n == k:
        return 1
    if n == 0 or k == 0:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def partition_count(n: int, k: int) -> int:
    """Number of partitions of ``n`` items into at most ``k`` blocks."""
    return sum(stirling2(n, j) for j in range(1, min(n, k) + 1))


def restricted_growth_strings(n: int, k: int):
    """Yield every partition of ``range(n)`` into at most ``k`` blocks once,
    as a label array, in lexicographic order."""
    labels = [0] * n

    def rec(i, top):
        if i == n:
            yield np.array(labels, dtype=np.int64)
            return
        for c in range(min(top + 2, k)):
            labels[i] = c
            yield from rec(i + 1, max(top, c))

    if n == 0:
        yield np.zeros(0, dtype=np.int64)
        return
    yield from rec(1, 0)


# -- exact oracles -----------------------------------------------------------

def oracle_optimal(a, k: Sequence[int], spec: DivergenceSpec, budget: int = DEFAULT_BUDGET):
    """Exhaustive minimum of the block-average objective.

    Every combination of per-dimension partitions into at most ``k_j`` blocks
    is scored with its optimal block representatives. Ties go to the
    lexicographically smallest label string. Raises :class:`BudgetExceeded`
    when the number of combinations is above ``budget``.
    """
    a = as_tensor(a)
    if len(k) != a.order:
        raise DimensionError(f"need {a.order} cluster counts, got {len(k)}")
    count = math.prod(partition_count(n, kj) for n, kj in zip(a.shape, k))
    if count > budget:
        raise BudgetExceeded(count, budget)
    spec.check_domain(a.data, "tensor entry")
    per_dim = [list(restricted_growth_strings(n, kj)) for n, kj in zip(a.shape, k)]
    values = a.flat
    nblocks = math.prod(k)
    best_j, best = np.inf, None
    for combo in itertools.product(*per_dim):
        asg = [Assignment(lab, kj) for lab, kj in zip(combo, k)]
        blocks = np.broadcast_to(block_index(asg), a.shape).reshape(-1)
        reps, _ = _block_reps(values, blocks, nblocks, spec)
        j = float(np.sum(spec.elementwise(values, reps[blocks])))
        if j < best_j:
            best_j, best = j, asg
    result = make_coclustering(a, best, spec)
    return result, result.objective


def _partition_cost(points, labels, k, spec):
    centers = update_centers(points, labels, k, spec, np.zeros((k, points.shape[1])))
    return float(spec.elementwise(points, centers[labels]).sum())


def _segment_costs(x: np.ndarray, spec: DivergenceSpec) -> np.ndarray:
    """``cost[i, j]`` for the sorted slice ``x[i:j]`` (j > i)."""
    n = x.size
    cost = np.full((n + 1, n + 1), np.inf)
    for i in range(n):
        seg = x[i:] - x[i]
        cnt = np.arange(1, seg.size + 1)
        if spec.kind == SQEUCLIDEAN:
            s1 = np.cumsum(seg)
            s2 = np.cumsum(seg * seg)
            cost[i, i + 1:] = np.maximum(s2 - s1 * s1 / cnt, 0.0)
        else:
            pre = np.concatenate(([0.0], np.cumsum(seg)))
            mid = (cnt - 1) // 2
            med = seg[mid]
            below = med * mid - pre[mid]
            above = (pre[cnt] - pre[mid + 1]) - med * (cnt - mid - 1)
            cost[i, i + 1:] = below + above
    return cost


def dp_1d(values, k: int, spec: DivergenceSpec):
    """Exact 1D clustering of scalars under squared Euclidean or L1.

    Optimal clusters are contiguous in sorted order; dynamic programming over
    split points. Cluster ids increase with value.
    """
    if spec.kind not in (SQEUCLIDEAN, L1):
        raise ValueError("dp_1d supports sqeuclidean and l1 only")
    x = np.asarray(values, dtype=np.float64).ravel()
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    kk = min(k, n)
    seg = _segment_costs(xs, spec)
    best = np.full((kk + 1, n + 1), np.inf)
    arg = np.zeros((kk + 1, n + 1), dtype=np.int64)
    best[0, 0] = 0.0
    for c in range(1, kk + 1):
        for j in range(c, n + 1):
            cand = best[c - 1, c - 1:j] + seg[c - 1:j, j]
            i = int(np.argmin(cand))
            best[c, j] = cand[i]
            arg[c, j] = i + c - 1
    sorted_labels = np.zeros(n, dtype=np.int64)
    j = n
    for c in range(kk, 0, -1):
        i = arg[c, j]
        sorted_labels[i:j] = c - 1
        j = i
    labels = np.empty(n, dtype=np.int64)
    labels[order] = sorted_labels
    return Assignment(labels, k), float(best[kk, n])


def oracle_1d_exact(points, k: int, spec: DivergenceSpec, budget: int = DEFAULT_BUDGET, method: str = "auto"):
    """Exact optimum of clustering ``points`` into at most ``k`` clusters.

    ``method`` is ``"dp"`` (scalar data, squared Euclidean or L1),
    ``"enumerate"``, or ``"auto"`` to prefer the DP when it applies.
    """
    points = as_points(points)
    n = points.shape[0]
    use_dp = points.shape[1] == 1 and spec.kind in (SQEUCLIDEAN, L1)
    if method == "dp" or (method == "auto" and use_dp):
        if not use_dp:
            raise ValueError("the DP path needs scalar points and sqeuclidean/l1")
        return dp_1d(points[:, 0], k, spec)
    count = partition_count(n, k)
    if count > budget:
        raise BudgetExceeded(count, budget)
    spec.check_domain(points, "point coordinate")
    best_j, best = np.inf, None
    for labels in restricted_growth_strings(n, k):
        j = _partition_cost(points, labels, k, spec)
        if j < best_j:
            best_j, best = j, labels
    return Assignment(best, k), best_j


def exact_cotec(a, k: Sequence[int], spec: DivergenceSpec, budget: int = DEFAULT_BUDGET) -> CoClustering:
    """CoTeC with every per-dimension clustering solved exactly."""
    a = as_tensor(a)
    asg = [oracle_1d_exact(fibers_along(a, j), kj, spec, budget)[0] for j, kj in enumerate(k)]
    return make_coclustering(a, asg, spec)


# -- projections -------------------------------------------------------------

def projection_matrix(assignment: Assignment) -> np.ndarray:
    """``C C^T`` with the indicator columns normalized; empty clusters dropped."""
    ind = assignment.indicator()
    sizes = ind.sum(axis=0)
    cbar = ind[:, sizes > 0] / np.sqrt(sizes[sizes > 0])
    return cbar @ cbar.T


class ProjectionSet:
    """One projection per mode; ``None`` marks an unclustered (identity) mode."""

    def __init__(self, mats):
        self.mats = [None if p is None else np.asarray(p, dtype=np.float64) for p in mats]

    @classmethod
    def from_assignments(cls, assignments):
        return cls([None if asg is None else projection_matrix(asg) for asg in assignments])

    def __len__(self):
        return len(self.mats)

    def dense(self, shape) -> list:
        return [np.eye(n) if p is None else p for p, n in zip(self.mats, shape)]

    def complement(self, shape) -> list:
        return [np.eye(n) - p for p, n in zip(self.dense(shape), shape)]

    def is_valid(self, atol=1e-9) -> bool:
        for p in self.mats:
            if p is None:
                continue
            if not np.allclose(p, p.T, atol=atol):
                return False
            if np.linalg.norm(p @ p - p) > atol:
                return False
        return True


def random_assignment(n: int, k: int, rng) -> Assignment:
    return Assignment(rng.integers(0, k, size=n), k)


def projection_objective(a, assignments) -> float:
    """``||A - (P_1, ..., P_m) . A||_F^2`` with ``P_j`` built from the labels."""
    a = as_tensor(a)
    proj = ProjectionSet.from_assignments(assignments)
    return frobenius_norm(a - multilinear_multiply(proj.mats, a)) ** 2


def check_pythagorean(a, proj: ProjectionSet, rng, trials: int = 1) -> float:
    """Worst relative residual of the split ``||X + Y||^2 = ||X||^2 + ||Y||^2``.

    ``X = (P, S) . A`` and ``Y = (I - P, R) . B``, where ``P`` is the first
    ``t`` projections of ``proj``, ``S`` the rest, ``R`` projections from
    random clusterings and ``B`` a random tensor. ``t`` is drawn per trial.
    """
    a = as_tensor(a)
    shape = a.shape
    m = a.order
    if len(proj) != m:
        raise DimensionError(f"need {m} projections, got {len(proj)}")
    full = proj.dense(shape)
    comp = proj.complement(shape)
    worst = 0.0
    for _ in range(trials):
        t = int(rng.integers(1, m + 1))
        b = DenseTensor(rng.standard_normal(shape))
        r = [projection_matrix(random_assignment(n, int(rng.integers(1, n + 1)), rng)) for n in shape[t:]]
        x = multilinear_multiply(full, a)
        y = multilinear_multiply(comp[:t] + r, b)
        lhs = frobenius_norm(x + y) ** 2
        rhs = frobenius_norm(x) ** 2 + frobenius_norm(y) ** 2
        worst = max(worst, abs(lhs - rhs) / max(rhs, np.finfo(float).tiny))
    return worst


@dataclass
class ResidualBoundResult:
    passed: bool
    lhs: float
    rhs: float
    factor: int


def padded_factor(m: int, t: int = 1) -> int:
    """``2^ceil(log2(m/t))``: the power-of-two padding of the dimension count."""
    ratio = m / t
    return 1 if ratio <= 1 else 2 ** math.ceil(math.log2(ratio) - 1e-12)


def check_lemma34(a, assignments, rtol: float = 1e-12) -> ResidualBoundResult:
    """Combined-clustering residual versus the worst single-dimension residual.

    Tests ``||A - Q.A||^2 <= 2^ceil(log2 m) * max_j ||A - Q_j.A||^2`` where
    ``Q_j`` applies only dimension ``j``'s projection. Unclustered padding
    dimensions contribute zero residual and are left out of the max.
    """
    a = as_tensor(a)
    m = a.order
    if len(assignments) != m:
        raise DimensionError(f"need {m} assignments, got {len(assignments)}")
    lhs = projection_objective(a, assignments)
    singles = []
    for j in range(m):
        only = [None] * m
        only[j] = assignments[j]
        singles.append(projection_objective(a, only))
    factor = padded_factor(m)
    rhs = factor * max(singles)
    return ResidualBoundResult(bool(lhs <= rhs * (1 + rtol) + 1e-12), lhs, rhs, factor)


# -- bounds and empirical factors -------------------------------------------

SQEUCLIDEAN_CASE = "sqeuclidean"
METRIC_CASE = "metric"
BREGMAN_CASE = "bregman"
HILBERTIAN_CASE = "hilbertian"


def kmeanspp_factor(k: int) -> float:
    """Expected-cost factor ``8 (ln k + 2)`` of D^2 seeding."""
    return 8.0 * (math.log(k) + 2.0)


def theoretical_bound(m: int, t: int = 1, case: str = SQEUCLIDEAN_CASE, alpha_t: float = 1.0,
                      sigma: Optional[CurvatureBounds] = None) -> float:
    """Approximation factor of the combined clustering of an order-``m`` tensor.

    ``sqeuclidean``: ``2^ceil(log2 m/t) alpha_t``; ``metric``: ``2 (m/t) alpha_t``;
    ``bregman``: ``(sigma_U/sigma_L) 2^ceil(log2 m/t) alpha_t``; ``hilbertian``:
    ``m alpha_t``, which is ``8 m (ln K + 2)`` for ``alpha_t = kmeanspp_factor(K)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if t != 1:
        raise ValueError("only t = 1 base clusterings are supported")
    if case == SQEUCLIDEAN_CASE:
        return padded_factor(m, t) * alpha_t
    if case == METRIC_CASE:
        return 2.0 * (m / t) * alpha_t
    if case == BREGMAN_CASE:
        if sigma is None:
            raise ValueError("the Bregman bound needs curvature bounds")
        return sigma.ratio * padded_factor(m, t) * alpha_t
    if case == HILBERTIAN_CASE:
        return m * alpha_t
    raise ValueError(f"unknown bound case {case!r}")


def bound_case(spec: DivergenceSpec) -> str:
    if spec.kind == SQEUCLIDEAN:
        return SQEUCLIDEAN_CASE
    if spec.kind == L1:
        return METRIC_CASE
    if spec.kind == KERNEL:
        return HILBERTIAN_CASE
    return BREGMAN_CASE


def bound_for(a, spec: DivergenceSpec, alpha_t: float = 1.0) -> float:
    """Theoretical factor for tensor ``a`` under ``spec``; curvature from its value range."""
    a = as_tensor(a)
    case = bound_case(spec)
    sigma = curvature_bounds_for(spec, a.data) if case == BREGMAN_CASE else None
    return theoretical_bound(a.order, 1, case, alpha_t, sigma)


@dataclass
class FactorReport:
    J_achieved: float
    J_reference: float
    alpha_hat: float
    theoretical_bound: float
    defined: bool = True

    @property
    def within_bound(self) -> bool:
        return self.defined and self.alpha_hat <= self.theoretical_bound


def empirical_factor(a, achieved, reference_J: float, alpha_t: float = 1.0) -> FactorReport:
    """Achieved objective over a reference objective, with the matching bound.

    ``achieved`` is a :class:`CoClustering` or a bare objective value (then
    the divergence is taken as squared Euclidean). A nonpositive reference
    gives an undefined (infinite) factor.
    """
    a = as_tensor(a)
    if isinstance(achieved, CoClustering):
        j, spec = achieved.objective, achieved.divergence
    else:
        j, spec = float(achieved), squared_euclidean()
    bound = bound_for(a, spec, alpha_t)
    if not reference_J > 0:
        return FactorReport(j, reference_J, math.inf, bound, defined=False)
    return FactorReport(j, reference_J, j / reference_J, bound)

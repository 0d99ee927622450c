"""Block-average tensor clustering: objective, CoTeC combination and SiTeC refinement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cluster1d import Assignment, ClusterConfig, cluster_1d, repair_empty
from .divergence import L1, DivergenceSpec
from .exceptions import DimensionError
from .tensor import DenseTensor, as_tensor, fibers_along

VARIANTS = ("r", "s", "rk", "sk", "rc", "sc", "rkc", "skc")


@dataclass
class CoClustering:
    """Per-dimension assignments, the block representatives and the objective."""

    assignments: list
    means: DenseTensor
    objective: float
    divergence: DivergenceSpec
    empty_blocks: int = 0
    trace: list = field(default_factory=list)
    dim_objectives: list = field(default_factory=list)

    @property
    def k(self) -> tuple:
        return tuple(asg.k for asg in self.assignments)

    @property
    def labels(self) -> list:
        return [asg.labels for asg in self.assignments]


def _as_assignments(assignments) -> list:
    out = []
    for asg in assignments:
        if isinstance(asg, Assignment):
            out.append(asg)
        else:
            labels = np.asarray(asg, dtype=np.int64)
            out.append(Assignment(labels, int(labels.max()) + 1))
    return out


def _check_conform(a: DenseTensor, assignments):
    if len(assignments) != a.order:
        raise DimensionError(f"need {a.order} assignments, got {len(assignments)}")
    for j, asg in enumerate(assignments):
        if asg.n != a.shape[j]:
            raise DimensionError(
                f"mode {j}: assignment has {asg.n} labels, tensor has {a.shape[j]} indices"
            )


def block_index(assignments) -> np.ndarray:
    """Flat block id of every tensor entry (row-major over the cluster grid)."""
    kshape = tuple(asg.k for asg in assignments)
    strides = np.cumprod((kshape[1:] + (1,))[::-1])[::-1]
    out = np.zeros((), dtype=np.int64)
    for j, asg in enumerate(assignments):
        shape = [1] * len(assignments)
        shape[j] = asg.n
        out = out + (asg.labels * strides[j]).reshape(shape)
    return out


def _block_reps(values: np.ndarray, blocks: np.ndarray, nblocks: int, spec: DivergenceSpec):
    counts = np.bincount(blocks, minlength=nblocks)
    if spec.kind == L1:
        order = np.lexsort((values, blocks))
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        pick = starts + np.maximum(counts - 1, 0) // 2
        sorted_vals = values[order]
        reps = np.where(counts > 0, sorted_vals[np.minimum(pick, values.size - 1)], 0.0)
        fill = float(np.sort(values)[(values.size - 1) // 2])
    else:
        sums = np.bincount(blocks, weights=values, minlength=nblocks)
        with np.errstate(invalid="ignore", divide="ignore"):
            reps = sums / counts
            # one residual pass makes constant blocks reproduce their value exactly
            reps[counts > 0] += (
                np.bincount(blocks, weights=values - np.nan_to_num(reps)[blocks], minlength=nblocks)
                / counts
            )[counts > 0]
        fill = float(values.mean())
    empty = counts == 0
    reps[empty] = fill
    return reps, empty


def block_representatives(a, assignments, spec: DivergenceSpec, return_empty=False):
    """Representative of every co-cluster block: mean (Bregman, kernels) or lower median (L1).

    Blocks containing no entry receive the global representative. With
    ``return_empty`` the boolean mask of such blocks is returned too.
    """
    a = as_tensor(a)
    assignments = _as_assignments(assignments)
    _check_conform(a, assignments)
    kshape = tuple(asg.k for asg in assignments)
    blocks = np.broadcast_to(block_index(assignments), a.shape).reshape(-1)
    reps, empty = _block_reps(a.flat, blocks, int(np.prod(kshape)), spec)
    means = DenseTensor(reps.reshape(kshape))
    if return_empty:
        return means, empty.reshape(kshape)
    return means


def reconstruct(assignments, means) -> np.ndarray:
    """``(C_1, ..., C_m) . M`` evaluated by indexing."""
    means = as_tensor(means)
    return means.data[np.ix_(*[asg.labels for asg in assignments])]


def evaluate_objective(a, assignments, means, spec: DivergenceSpec) -> float:
    a = as_tensor(a)
    assignments = _as_assignments(assignments)
    _check_conform(a, assignments)
    means = as_tensor(means)
    if means.shape != tuple(asg.k for asg in assignments):
        raise DimensionError(f"means shape {means.shape} does not match cluster counts")
    spec.check_domain(a.data, "tensor entry")
    return float(np.sum(spec.elementwise(a.data, reconstruct(assignments, means))))


def make_coclustering(a, assignments, spec: DivergenceSpec, **extra) -> CoClustering:
    """Fill in optimal block representatives and the objective for given labels."""
    assignments = _as_assignments(assignments)
    means, empty = block_representatives(a, assignments, spec, return_empty=True)
    obj = evaluate_objective(a, assignments, means, spec)
    return CoClustering(list(assignments), means, obj, spec, int(empty.sum()), **extra)


def cotec(a, per_dim_cfg: Sequence[ClusterConfig], spec: DivergenceSpec, order=None) -> CoClustering:
    """Cluster each dimension's slices independently, then combine.

    Dimension ``j`` draws its randomness from the substream keyed by ``j``, so
    the visiting ``order`` has no effect on the result.
    """
    a = as_tensor(a)
    if len(per_dim_cfg) != a.order:
        raise DimensionError(f"need {a.order} configs, got {len(per_dim_cfg)}")
    spec.check_domain(a.data, "tensor entry")
    order = range(a.order) if order is None else order
    results = {}
    for j in order:
        results[j] = cluster_1d(fibers_along(a, j), per_dim_cfg[j], spec, stream=(j,))
    assignments = [results[j].assignment for j in range(a.order)]
    return make_coclustering(
        a, assignments, spec, dim_objectives=[results[j].objective for j in range(a.order)]
    )


def _reassign_costs(a: np.ndarray, labels, means: np.ndarray, j: int, spec: DivergenceSpec):
    """``cost[i, c]``: divergence of slice ``i`` of mode ``j`` from cluster row ``c``."""
    others = [lab for d, lab in enumerate(labels) if d != j]
    mj = np.moveaxis(means, j, 0)
    expanded = mj[(slice(None),) + np.ix_(*others)] if others else mj
    kj = mj.shape[0]
    fib = np.moveaxis(a, j, 0).reshape(a.shape[j], 1, -1)
    return spec.elementwise(fib, expanded.reshape(1, kj, -1)).sum(axis=-1)


def sitec(a, init: CoClustering, spec: DivergenceSpec, max_iters=100, tol=1e-9):
    """Alternate representative updates and per-dimension reassignment.

    Each sweep visits dimensions ``0..m-1``; for each it recomputes the block
    representatives, then moves every index of that dimension to the cluster
    with the least divergence given the other labels. The objective after
    every half-step is appended to the returned clustering's ``trace``.
    Returns ``(clustering, sweeps)``; the terminating sweep is counted.
    """
    a = as_tensor(a)
    spec.check_domain(a.data, "tensor entry")
    labels = [np.array(asg.labels) for asg in init.assignments]
    ks = [asg.k for asg in init.assignments]
    _check_conform(a, init.assignments)

    def assignments():
        return [Assignment(lab, k) for lab, k in zip(labels, ks)]

    means = block_representatives(a, assignments(), spec).data
    j_prev = evaluate_objective(a, assignments(), means, spec)
    trace = [j_prev]
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        changed = False
        for j in range(a.order):
            means = block_representatives(a, assignments(), spec).data
            trace.append(evaluate_objective(a, assignments(), means, spec))
            costs = _reassign_costs(a.data, labels, means, j, spec)
            new = np.argmin(costs, axis=1)
            rows = np.arange(new.size)
            # keep the current label on exact ties so the objective cannot rise
            keep = costs[rows, labels[j]] <= costs[rows, new]
            new = np.where(keep, labels[j], new)
            repaired = repair_empty(new, ks[j], costs[rows, new])
            changed |= not np.array_equal(repaired, labels[j])
            labels[j] = repaired
            if np.array_equal(repaired, new):
                trace.append(float(costs[rows, new].sum()))
            else:
                means = block_representatives(a, assignments(), spec).data
                trace.append(evaluate_objective(a, assignments(), means, spec))
        j_now = trace[-1]
        if not changed or j_prev - j_now <= tol * j_prev:
            break
        j_prev = j_now
    out = make_coclustering(a, assignments(), spec, dim_objectives=list(init.dim_objectives))
    trace.append(out.objective)
    out.trace = trace
    return out, sweeps


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every dimension in a variant run."""

    k: tuple
    rng_seed: int = 0
    restarts: int = 1
    max_iters: int = 100
    tol: float = 1e-9
    sitec_max_iters: int = 100

    def per_dim(self, seeding: str, refine: str) -> list:
        return [
            ClusterConfig(
                k=int(kj),
                seeding=seeding,
                refine=refine,
                restarts=self.restarts,
                max_iters=self.max_iters,
                tol=self.tol,
                rng_seed=self.rng_seed,
            )
            for kj in self.k
        ]


@dataclass
class VariantResult:
    variant: str
    clustering: CoClustering
    sweeps: Optional[int] = None


def parse_variant(token: str):
    """``(seeding, refine, use_sitec)`` for a variant token."""
    if token not in VARIANTS:
        raise ValueError(f"unknown variant {token!r}; expected one of {', '.join(VARIANTS)}")
    seeding = "uniform" if token[0] == "r" else "dsq"
    refine = "lloyd" if "k" in token else "none"
    return seeding, refine, token.endswith("c")


def run_variants(a, variants: Sequence[str], cfg: RunConfig, spec: DivergenceSpec) -> dict:
    """Run several variants, sharing the CoTeC stage a SiTeC variant starts from."""
    a = as_tensor(a)
    if len(cfg.k) != a.order:
        raise DimensionError(f"need {a.order} cluster counts, got {len(cfg.k)}")
    for j, kj in enumerate(cfg.k):
        if not 1 <= kj <= a.shape[j]:
            raise ValueError(f"mode {j}: k={kj} must lie in [1, {a.shape[j]}]")
    bases = {}
    out = {}
    for token in variants:
        seeding, refine, use_sitec = parse_variant(token)
        key = token.rstrip("c")
        if key not in bases:
            bases[key] = cotec(a, cfg.per_dim(seeding, refine), spec)
        if use_sitec:
            refined, sweeps = sitec(a, bases[key], spec, cfg.sitec_max_iters, cfg.tol)
            out[token] = VariantResult(token, refined, sweeps)
        else:
            out[token] = VariantResult(token, bases[key])
    return out


def variant_pipeline(a, variant: str, cfg: RunConfig, spec: DivergenceSpec) -> VariantResult:
    """CoTeC with uniform (r) or divergence-aware (s) seeding, optional 1D
    Lloyd refinement (k) and optional SiTeC refinement (c)."""
    return run_variants(a, [variant], cfg, spec)[variant]

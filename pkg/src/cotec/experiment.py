"""Synthetic sweeps over noise levels and the reports they produce."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .datagen import PlantedSpec, generate
from .tenclus import VARIANTS, RunConfig, run_variants
from .verify import bound_for, kmeanspp_factor

NOISE_MODEL_NOTE = {
    "gaussian": "additive N(0, sigma^2) noise around block means",
    "poisson": "scaled Poisson surrogate around block means (substitute noise model)",
}


def derived_seed(*keys: int) -> int:
    """Deterministic 63-bit seed from integer keys."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


@dataclass
class RunRecord:
    noise: float
    tensor: int
    trial: int
    variant: str
    J: float
    J_true: float
    alpha_hat: float
    bound: float
    sweeps: int | None
    trace_monotone: bool | None


@dataclass
class VariantRow:
    noise: float
    variant: str
    n_runs: int
    mean_J: float
    std_J: float
    improvement_pct: float | None
    sweeps_mean: float | None
    sweeps_std: float | None
    alpha_hat_mean: float
    alpha_hat_std: float
    alpha_hat_max: float
    theoretical_bound: float


@dataclass
class ExperimentReport:
    metadata: dict
    rows: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    def to_dict(self, include_runs: bool = False) -> dict:
        out = {"metadata": self.metadata, "rows": [asdict(r) for r in self.rows]}
        if include_runs:
            out["runs"] = [asdict(r) for r in self.runs]
        return out


def trace_is_monotone(trace, rtol: float = 1e-9) -> bool:
    return all(b <= a + rtol * abs(a) for a, b in zip(trace, trace[1:]))


def _std(values):
    return float(np.std(values)) if len(values) else 0.0


def run_experiment(shape, k, noises, tensors=3, trials=20, variants=VARIANTS, mode="gaussian",
                   seed=0, restarts=1, max_iters=100, tol=1e-9, means_range=(1.0, 10.0),
                   poisson_scale=1.0) -> ExperimentReport:
    """Run every variant on ``tensors`` planted tensors per noise level.

    All variants of one trial share the trial's seed, so the comparison is
    paired. Empirical factors divide each run's objective by the objective
    of the planted clustering of the same tensor.
    """
    variants = list(variants)
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}")
    if tensors < 1 or trials < 1:
        raise ValueError("tensors and trials must be positive")
    alpha_t = kmeanspp_factor(max(k))
    runs = []
    for ni, noise in enumerate(noises):
        for ti in range(tensors):
            spec = PlantedSpec(shape, k, noise, mode, tuple(means_range), derived_seed(seed, 0, ni, ti),
                               poisson_scale)
            a, truth = generate(spec)
            div = spec.divergence()
            bound = bound_for(a, div, alpha_t)
            for trial in range(trials):
                cfg = RunConfig(tuple(k), derived_seed(seed, 1, ni, ti, trial), restarts, max_iters, tol, max_iters)
                out = run_variants(a, variants, cfg, div)
                for v in variants:
                    res = out[v]
                    j = res.clustering.objective
                    ratio = j / truth.objective if truth.objective > 0 else math.inf
                    runs.append(RunRecord(
                        float(noise), ti, trial, v, j, truth.objective, ratio, bound, res.sweeps,
                        trace_is_monotone(res.clustering.trace) if res.sweeps is not None else None,
                    ))
    metadata = {
        "shape": list(shape),
        "k": list(k),
        "divergence": "sqeuclidean" if mode == "gaussian" else "kl",
        "noise_model": NOISE_MODEL_NOTE[mode],
        "noise": [float(x) for x in noises],
        "tensors": tensors,
        "trials": trials,
        "seed": seed,
        "restarts": restarts,
        "alpha_t": alpha_t,
        "variants": variants,
        "sweep_count_note": "SiTeC sweeps include the final non-improving sweep",
        "curvature_range_note": "KL curvature bounds use [min entry, max entry] of each tensor",
    }
    return ExperimentReport(metadata, aggregate(runs, variants), runs)


def aggregate(runs, variants) -> list:
    """One row per (noise, variant), in noise order then variant order."""
    rows = []
    noises = sorted({r.noise for r in runs})
    for noise in noises:
        at_noise = [r for r in runs if r.noise == noise]
        base = [r.J for r in at_noise if r.variant == "r"]
        base_mean = float(np.mean(base)) if base else None
        for v in variants:
            sel = [r for r in at_noise if r.variant == v]
            js = [r.J for r in sel]
            alphas = [r.alpha_hat for r in sel]
            sweeps = [r.sweeps for r in sel if r.sweeps is not None]
            mean_j = float(np.mean(js))
            improvement = None
            if base_mean:
                improvement = 0.0 if v == "r" else 100.0 * (base_mean - mean_j) / base_mean
            rows.append(VariantRow(
                noise, v, len(sel), mean_j, _std(js), improvement,
                float(np.mean(sweeps)) if sweeps else None,
                _std(sweeps) if sweeps else None,
                float(np.mean(alphas)), _std(alphas), float(np.max(alphas)),
                float(min(r.bound for r in sel)),
            ))
    return rows


# -- CSV emission -------------------------------------------------------------

TABLE_COLUMNS = [f.name for f in VariantRow.__dataclass_fields__.values()]
FACTOR_COLUMNS = ["noise", "variant", "alpha_hat_mean", "alpha_hat_std", "alpha_hat_max", "theoretical_bound"]
RUN_COLUMNS = [f.name for f in RunRecord.__dataclass_fields__.values()]


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(records, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        d = rec if isinstance(rec, dict) else asdict(rec)
        writer.writerow([_cell(d[c]) for c in columns])
    return buf.getvalue()


def table_csv(report: ExperimentReport) -> str:
    return to_csv(report.rows, TABLE_COLUMNS)


def factor_csv(report: ExperimentReport) -> str:
    return to_csv(report.rows, FACTOR_COLUMNS)


def runs_csv(report: ExperimentReport) -> str:
    return to_csv(report.runs, RUN_COLUMNS)


_TYPES = {
    "noise": float, "variant": str, "n_runs": int, "mean_J": float, "std_J": float,
    "improvement_pct": float, "sweeps_mean": float, "sweeps_std": float,
    "alpha_hat_mean": float, "alpha_hat_std": float, "alpha_hat_max": float,
    "theoretical_bound": float, "tensor": int, "trial": int, "J": float, "J_true": float,
    "alpha_hat": float, "bound": float, "sweeps": int,
}


def parse_csv_rows(text: str) -> list:
    """Inverse of :func:`to_csv` for the report column sets."""
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for key, val in raw.items():
            if val == "":
                row[key] = None
            elif key == "trace_monotone":
                row[key] = val == "True"
            else:
                row[key] = _TYPES.get(key, str)(val)
        rows.append(row)
    return rows

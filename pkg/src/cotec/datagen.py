"""Synthetic tensors with a planted co-clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster1d import Assignment
from .divergence import DEFAULT_KL_EPS, generalized_kl, squared_euclidean
from .tenclus import CoClustering, make_coclustering
from .tensor import DenseTensor

MODES = ("gaussian", "poisson")


@dataclass(frozen=True)
class PlantedSpec:
    """Parameters of a planted tensor.

    ``noise`` is the Gaussian standard deviation in ``gaussian`` mode. In
    ``poisson`` mode each entry is ``s * Poisson(mean / s)`` with
    ``s = noise * poisson_scale``, so the variance of an entry is ``s * mean``.
    """

    shape: tuple
    k: tuple
    noise: float = 1.0
    mode: str = "gaussian"
    means_range: tuple = (1.0, 10.0)
    rng_seed: int = 0
    poisson_scale: float = 1.0
    eps: float = DEFAULT_KL_EPS

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "k", tuple(int(s) for s in self.k))
        if len(self.shape) != len(self.k):
            raise ValueError(f"shape {self.shape} and k {self.k} differ in order")
        for j, (n, kj) in enumerate(zip(self.shape, self.k)):
            if n < 1 or kj < 1:
                raise ValueError("dims and cluster counts must be positive")
            if kj > n:
                raise ValueError(f"mode {j}: cannot plant {kj} nonempty clusters in {n} indices")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        lo, hi = self.means_range
        if hi < lo:
            raise ValueError("means_range must be increasing")
        if self.mode == "poisson" and lo < 10 * self.eps:
            raise ValueError("poisson means must stay at least 10*eps away from zero")

    def divergence(self):
        return squared_euclidean() if self.mode == "gaussian" else generalized_kl(self.eps)


def planted_labels(n: int, k: int, rng) -> np.ndarray:
    """Uniform labels, with a random set of ``k`` indices forced onto distinct clusters."""
    perm = rng.permutation(n)
    labels = np.empty(n, dtype=np.int64)
    labels[perm[:k]] = np.arange(k)
    labels[perm[k:]] = rng.integers(0, k, size=n - k)
    return labels


def generate(spec: PlantedSpec) -> tuple[DenseTensor, CoClustering]:
    """Draw a tensor and return it with its planted clustering.

    The planted clustering carries optimal block representatives for the
    drawn data and its objective under the mode's divergence.
    """
    rng = np.random.default_rng(spec.rng_seed)
    lo, hi = spec.means_range
    means = rng.uniform(lo, hi, size=spec.k)
    labels = [planted_labels(n, kj, rng) for n, kj in zip(spec.shape, spec.k)]
    base = means[np.ix_(*labels)]
    if spec.mode == "gaussian":
        data = base + rng.normal(0.0, spec.noise, size=spec.shape) if spec.noise > 0 else base
    else:
        scale = spec.noise * spec.poisson_scale
        data = rng.poisson(base / scale) * scale if scale > 0 else base.copy()
        data = np.maximum(data, spec.eps)
    tensor = DenseTensor(data)
    truth = make_coclustering(
        tensor, [Assignment(lab, kj) for lab, kj in zip(labels, spec.k)], spec.divergence()
    )
    return tensor, truth


def format_truth(truth: CoClustering) -> str:
    lines = [
        "# planted clustering",
        "order " + str(len(truth.assignments)),
        "k " + " ".join(str(k) for k in truth.k),
        "J " + repr(float(truth.objective)),
    ]
    lines += [" ".join(str(int(x)) for x in lab) for lab in truth.labels]
    return "\n".join(lines) + "\n"


def parse_truth(text: str):
    """Return ``(labels, k, J)`` from a truth sidecar."""
    fields = {}
    label_lines = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        if key in ("order", "k", "J"):
            fields[key] = rest
        else:
            label_lines.append(line)
    try:
        order = int(fields["order"])
        k = tuple(int(x) for x in fields["k"].split())
        j = float(fields["J"])
        labels = [np.array([int(x) for x in line.split()], dtype=np.int64) for line in label_lines]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed truth file: {exc}") from None
    if len(labels) != order or len(k) != order:
        raise ValueError("truth file order does not match its label lines")
    return labels, k, j


def write_truth(path, truth: CoClustering) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_truth(truth))


def read_truth(path):
    with open(path, encoding="utf-8") as fh:
        return parse_truth(fh.read())

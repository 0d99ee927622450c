import itertools
import math

import numpy as np
import pytest

from cotec.cluster1d import (
    Assignment,
    ClusterConfig,
    assign,
    cluster_1d,
    cost_matrix,
    kernel_kmeans,
    lloyd_refine,
    seed_dsq,
    seed_dsq_indices,
    seed_uniform,
    substream,
)
from cotec.divergence import from_token, l1, squared_euclidean

SE = squared_euclidean()


def best_two_partition(points, spec):
    """Brute force over every labelling into two clusters."""
    points = np.asarray(points, dtype=float).reshape(len(points), -1)
    best = (math.inf, None)
    for labels in itertools.product([0, 1], repeat=len(points)):
        labels = np.array(labels)
        if labels[0] != 0:
            continue
        total = 0.0
        for c in range(2):
            members = points[labels == c]
            if len(members):
                if spec.kind == "l1":
                    center = np.sort(members, axis=0)[(len(members) - 1) // 2]
                else:
                    center = members.mean(axis=0)
                total += float(spec.elementwise(members, center).sum())
        if total < best[0]:
            best = (total, labels)
    return best


def test_assignment_validation():
    with pytest.raises(ValueError):
        Assignment([0, 2], 2)
    with pytest.raises(ValueError):
        Assignment([0], 0)
    a = Assignment([0, 1, 1], 3)
    assert a.sizes().tolist() == [1, 2, 0]
    assert a.indicator().sum() == 3
    with pytest.raises(ValueError):
        a.labels[0] = 1


def test_config_validation():
    with pytest.raises(ValueError):
        ClusterConfig(0)
    with pytest.raises(ValueError):
        ClusterConfig(2, tol=-1)
    with pytest.raises(ValueError):
        ClusterConfig(2, seeding="random")


def test_seed_uniform_examples():
    pts = np.array([[1.0], [2.0], [3.0]])
    centers = seed_uniform(pts, 3, substream(0))
    assert sorted(centers.ravel().tolist()) == [1.0, 2.0, 3.0]
    assert seed_uniform(pts, 1, substream(0)).shape == (1, 1)
    a = seed_uniform(pts, 2, substream(42))
    b = seed_uniform(pts, 2, substream(42))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        seed_uniform(pts, 4, substream(0))


def test_seed_dsq_zero_mass_points_never_chosen():
    pts = np.array([0.0, 0.0, 10.0])
    for s in range(200):
        idx = seed_dsq_indices(pts, 2, SE, substream(s))
        if idx[0] in (0, 1):
            assert idx[1] == 2


def test_seed_dsq_all_points_when_k_equals_n():
    pts = np.array([0.0, 3.0, 7.0, 8.0])
    assert sorted(seed_dsq(pts, 4, SE, substream(5)).ravel().tolist()) == [0.0, 3.0, 7.0, 8.0]


def test_seed_dsq_duplicates_fall_back_to_uniform():
    pts = np.zeros(4)
    idx = seed_dsq_indices(pts, 3, SE, substream(1))
    assert len(set(idx.tolist())) == 3


def test_seed_dsq_sampling_law():
    # points 0, 1, 3: given first center 0, mass of 1 and 3 is 1 and 9
    pts = np.array([0.0, 1.0, 3.0])
    draws, hits = 0, 0
    for s in range(30000):
        idx = seed_dsq_indices(pts, 2, SE, substream(s))
        if idx[0] == 0:
            draws += 1
            hits += idx[1] == 2
    p = 0.9
    se = math.sqrt(p * (1 - p) / draws)
    assert draws >= 9000
    assert abs(hits / draws - p) <= 3 * se


def test_seed_dsq_kernel_uses_kernel_distance():
    spec = from_token("kernel:absdiff")
    pts = np.array([0.0, 1.0, 3.0])
    draws, hits = 0, 0
    for s in range(20000):
        idx = seed_dsq_indices(pts, 2, spec, substream(s))
        if idx[0] == 0:
            draws += 1
            hits += idx[1] == 2
    p = 0.75
    assert abs(hits / draws - p) <= 3 * math.sqrt(p * (1 - p) / draws)


def test_lloyd_fixed_point():
    pts = np.array([0.0, 1.0, 10.0, 11.0])
    res = lloyd_refine(pts, [[0.5], [10.5]], SE)
    assert res.iters == 1
    assert res.assignment.labels.tolist() == [0, 0, 1, 1]
    assert res.objective == 1.0


@pytest.mark.parametrize("init", [[[0.0], [1.0]], [[1.0], [10.0]], [[11.0], [0.0]], [[10.0], [11.0]]])
def test_lloyd_recovers_two_blobs(init):
    pts = np.array([0.0, 1.0, 10.0, 11.0])
    j_opt, labels = best_two_partition(pts, SE)
    assert j_opt == 1.0
    res = lloyd_refine(pts, init, SE)
    assert res.objective == pytest.approx(1.0)
    lab = res.assignment.labels
    assert lab[0] == lab[1] != lab[2] == lab[3]


def test_lloyd_l1_median():
    res = lloyd_refine([0.0, 0.0, 0.0, 9.0], [[4.0]], l1())
    assert res.centers.ravel().tolist() == [0.0]
    assert res.objective == 9.0


def test_lloyd_empty_cluster_repair():
    pts = np.array([0.0, 1.0, 2.0, 20.0])
    res = lloyd_refine(pts, [[0.0], [100.0], [200.0]], SE)
    assert sorted(res.assignment.sizes().tolist()) == [1, 1, 2]


@pytest.mark.parametrize("token", ["sqeuclidean", "kl", "l1"])
def test_lloyd_monotone_and_locally_optimal(token):
    spec = from_token(token)
    rng = np.random.default_rng(3)
    for _ in range(30):
        pts = rng.uniform(0.5, 5.0, (12, 3))
        init = pts[rng.choice(12, 3, replace=False)]
        res = lloyd_refine(pts, init, spec, max_iters=200, tol=0.0)
        for a, b in zip(res.trace, res.trace[1:]):
            assert b <= a + 1e-9 * abs(a)
        # no single point improves by switching with centers fixed
        costs = cost_matrix(pts, res.centers, spec)
        own = costs[np.arange(12), res.assignment.labels]
        assert np.all(own <= costs.min(axis=1) + 1e-9)


def test_kernel_sqdiff_matches_lloyd():
    spec_k = from_token("kernel:sqdiff")
    rng = np.random.default_rng(8)
    for trial in range(25):
        pts = rng.standard_normal((15, 2)) + rng.integers(0, 3, (15, 1)) * 4.0
        idx = seed_dsq_indices(pts, 3, SE, substream(trial))
        idx_k = seed_dsq_indices(pts, 3, spec_k, substream(trial))
        assert np.array_equal(idx, idx_k)
        ref = lloyd_refine(pts, pts[idx], SE, tol=0.0)
        got = kernel_kmeans(pts, 3, spec_k, tol=0.0, init=idx)
        assert got.assignment == ref.assignment
        assert got.objective == pytest.approx(ref.objective, rel=1e-8, abs=1e-9)


def test_kernel_k_equals_n():
    pts = np.array([0.0, 2.0, 5.0])
    res = kernel_kmeans(pts, 3, from_token("kernel:absdiff"), rng=substream(0))
    assert sorted(res.assignment.labels.tolist()) == [0, 1, 2]
    assert res.objective == pytest.approx(0.0, abs=1e-12)


def test_kernel_absdiff_two_blobs():
    rng = np.random.default_rng(2)
    pts = np.concatenate([rng.normal(0, 0.3, 6), rng.normal(20, 0.3, 5)])
    spec = from_token("kernel:absdiff")
    res = kernel_kmeans(pts, 2, spec, rng=substream(4))
    lab = res.assignment.labels
    assert len(set(lab[:6])) == 1 and len(set(lab[6:])) == 1 and lab[0] != lab[6]
    # same partition as the brute-force optimum under the kernel's feature-space cost
    from cotec.cluster1d import _feature_distances, _mean_weights, kernel_gram
    gram = kernel_gram(pts, spec)
    best = math.inf
    for labels in itertools.product([0, 1], repeat=len(pts)):
        labels = np.array(labels)
        if len(set(labels)) < 2:
            continue
        w = _mean_weights(labels, 2, np.zeros((len(pts), 2)))
        best = min(best, float(_feature_distances(gram, w)[np.arange(len(pts)), labels].sum()))
    assert res.objective == pytest.approx(best, rel=1e-9)


def test_cluster_1d_restarts_and_determinism():
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((40, 4))
    one = cluster_1d(pts, ClusterConfig(4, rng_seed=9, restarts=1), SE)
    single = cluster_1d(pts, ClusterConfig(4, rng_seed=9, restarts=1), SE)
    many = cluster_1d(pts, ClusterConfig(4, rng_seed=9, restarts=20), SE)
    assert one.assignment == single.assignment and one.objective == single.objective
    assert many.objective <= one.objective


def test_cluster_1d_single_run_matches_seeding():
    pts = np.array([0.0, 1.0, 5.0, 6.0, 12.0])
    cfg = ClusterConfig(2, seeding="uniform", rng_seed=3)
    res = cluster_1d(pts, cfg, SE, stream=(1,))
    idx = substream(3, 1, 0).choice(5, size=2, replace=False)
    labels, _ = assign(pts[:, None], pts[idx][:, None], SE)
    assert res.assignment.labels.tolist() == labels.tolist()


def test_cluster_1d_kl_domain():
    from cotec.exceptions import DomainError
    with pytest.raises(DomainError):
        cluster_1d([1.0, 0.0, 2.0], ClusterConfig(2), from_token("kl"))

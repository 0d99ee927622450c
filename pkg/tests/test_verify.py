import itertools
import math

import numpy as np
import pytest

from cotec.cluster1d import Assignment
from cotec.divergence import CurvatureBounds, from_token, kl_curvature_bounds, squared_euclidean
from cotec.exceptions import BudgetExceeded
from cotec.tenclus import RunConfig, make_coclustering, run_variants
from cotec.verify import (
    ProjectionSet,
    check_lemma34,
    check_pythagorean,
    dp_1d,
    empirical_factor,
    exact_cotec,
    kmeanspp_factor,
    oracle_1d_exact,
    oracle_optimal,
    padded_factor,
    partition_count,
    projection_matrix,
    random_assignment,
    restricted_growth_strings,
    stirling2,
    theoretical_bound,
)

SE = squared_euclidean()

# Bell numbers and Stirling rows typed in from standard tables
BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140]
STIRLING_ROW_6 = [0, 1, 31, 90, 65, 15, 1]


def canonical(labels):
    seen = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def test_stirling_table():
    assert [stirling2(6, k) for k in range(7)] == STIRLING_ROW_6
    for n in range(1, 9):
        assert partition_count(n, n) == BELL[n]


@pytest.mark.parametrize("n", range(1, 9))
def test_restricted_growth_strings_enumerate_each_partition_once(n):
    for k in range(1, n + 1):
        strings = [tuple(s) for s in restricted_growth_strings(n, k)]
        assert len(strings) == partition_count(n, k)
        assert len(set(strings)) == len(strings)
        assert all(canonical(s) == s for s in strings)
        assert all(max(s) < k for s in strings)
        assert strings == sorted(strings)


def test_brute_force_against_product_enumeration():
    # independent enumeration: all k^n labellings reduced to canonical form
    for n, k in [(5, 2), (5, 3), (6, 3)]:
        brute = {canonical(lab) for lab in itertools.product(range(k), repeat=n)}
        assert set(tuple(s) for s in restricted_growth_strings(n, k)) == brute


def test_oracle_scalar_example():
    pts = np.array([[0.0], [1.0], [10.0]])
    cc, j = oracle_optimal(pts, (2, 1), SE)
    assert j == 0.5
    assert cc.labels[0].tolist() == [0, 0, 1]
    asg, j1 = oracle_1d_exact([0.0, 1.0, 10.0], 2, SE, method="enumerate")
    assert j1 == 0.5


def test_oracle_1d_examples():
    asg, j = oracle_1d_exact([0.0, 1.0, 10.0, 11.0], 2, SE)
    assert j == 1.0
    asg, j = oracle_1d_exact([1.0, 2.0, 6.0], 1, SE)
    assert j == pytest.approx(14.0)  # mean 3: 4 + 1 + 9
    asg, j = oracle_1d_exact([1.0, 2.0, 6.0], 1, from_token("l1"))
    assert j == 5.0


@pytest.mark.parametrize("token", ["sqeuclidean", "l1"])
def test_dp_equals_enumeration(token):
    spec = from_token(token)
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, 5))
        x = np.round(rng.normal(0, 5, n), 1)
        _, jd = oracle_1d_exact(x, k, spec, method="dp")
        _, je = oracle_1d_exact(x, k, spec, method="enumerate")
        assert jd == pytest.approx(je, rel=1e-9, abs=1e-9)


def test_dp_handles_large_inputs():
    x = np.random.default_rng(1).standard_normal(500)
    asg, j = dp_1d(x, 4, SE)
    assert asg.n == 500 and j > 0


def test_oracle_noiseless_planted():
    a = np.array([[1.0, 1.0, 5.0], [1.0, 1.0, 5.0], [7.0, 7.0, 2.0]])
    cc, j = oracle_optimal(a, (2, 2), SE)
    assert j == 0.0
    assert cc.labels[0].tolist() == [0, 0, 1]
    assert cc.labels[1].tolist() == [0, 0, 1]


def test_oracle_budget_refusal():
    with pytest.raises(BudgetExceeded) as info:
        oracle_optimal(np.zeros((12, 12)), (4, 4), SE)
    assert info.value.count == partition_count(12, 4) ** 2
    with pytest.raises(BudgetExceeded):
        oracle_1d_exact(np.zeros((20, 2)), 3, SE)


def test_oracle_4x4_count():
    assert partition_count(4, 2) == 8
    assert partition_count(4, 2) ** 2 <= 225


def test_oracle_lower_bounds_heuristics():
    rng = np.random.default_rng(2)
    for trial in range(10):
        a = rng.standard_normal((5, 4))
        _, j_opt = oracle_optimal(a, (2, 2), SE)
        out = run_variants(a, ["r", "s", "rk", "skc"], RunConfig((2, 2), rng_seed=trial), SE)
        for res in out.values():
            assert j_opt <= res.clustering.objective + 1e-12


def test_projection_set_properties():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        asg = random_assignment(n, int(rng.integers(1, n + 1)), rng)
        p = projection_matrix(asg)
        assert np.allclose(p, p.T)
        assert np.linalg.norm(p @ p - p) <= 1e-9
        assert np.trace(p) == pytest.approx(np.count_nonzero(asg.sizes()))
    assert ProjectionSet([None, projection_matrix(Assignment([0, 1, 1], 2))]).is_valid()
    assert not ProjectionSet([np.array([[1.0, 1.0], [0.0, 1.0]])]).is_valid()


def test_pythagorean_identity_projections():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 4))
    assert check_pythagorean(a, ProjectionSet([None, None]), rng, trials=20) <= 1e-12


def test_pythagorean_random():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a = rng.standard_normal((4, 4, 4))
        proj = ProjectionSet.from_assignments([random_assignment(4, 2, rng) for _ in range(3)])
        assert check_pythagorean(a, proj, rng) <= 1e-9


def test_combined_residual_bound_cases():
    rng = np.random.default_rng(6)
    a = rng.standard_normal(5)
    res = check_lemma34(a, [random_assignment(5, 2, rng)])
    assert res.factor == 1 and res.passed and res.lhs == pytest.approx(res.rhs)
    b = rng.standard_normal((3, 3, 3))
    res = check_lemma34(b, [random_assignment(3, 2, rng) for _ in range(3)])
    assert res.factor == 4 and res.passed
    for _ in range(200):
        c = rng.standard_normal((4, 4))
        assert check_lemma34(c, [random_assignment(4, 2, rng) for _ in range(2)]).passed


def test_padded_factor():
    assert [padded_factor(m) for m in range(1, 9)] == [1, 2, 4, 4, 8, 8, 8, 8]


def test_theoretical_bound_examples():
    assert theoretical_bound(2, 1, "sqeuclidean", 1.0) == 2.0
    assert theoretical_bound(3, 1, "metric", 1.0) == 6.0
    assert theoretical_bound(2, 1, "bregman", 1.0, kl_curvature_bounds(0.5, 2.0)) == 8.0
    assert theoretical_bound(3, 1, "sqeuclidean", 1.0) == 4.0
    alpha = kmeanspp_factor(5)
    assert alpha == pytest.approx(8 * (math.log(5) + 2))
    assert theoretical_bound(3, 1, "hilbertian", alpha) == pytest.approx(24 * (math.log(5) + 2))
    with pytest.raises(ValueError):
        theoretical_bound(2, 1, "bregman", 1.0)
    with pytest.raises(ValueError):
        theoretical_bound(2, 2)
    assert theoretical_bound(2, 1, "bregman", 1.0, CurvatureBounds(1, 1)) == 2.0


def test_empirical_factor_examples():
    a = np.random.default_rng(7).standard_normal((3, 3))
    cc = make_coclustering(a, [Assignment([0, 0, 1], 2), Assignment([0, 1, 1], 2)], SE)
    rep = empirical_factor(a, cc, cc.objective)
    assert rep.alpha_hat == 1.0
    assert rep.theoretical_bound == 2.0 and rep.within_bound
    rep = empirical_factor(a, 2.0, 1.0)
    assert rep.alpha_hat == 2.0
    rep = empirical_factor(a, 2.0, 0.0)
    assert not rep.defined and math.isinf(rep.alpha_hat) and not rep.within_bound


def test_oracle_sandwich_with_exact_cotec():
    rng = np.random.default_rng(8)
    for _ in range(20):
        a = rng.standard_normal((4, 4))
        _, j_opt = oracle_optimal(a, (2, 2), SE)
        j = exact_cotec(a, (2, 2), SE).objective
        assert j_opt <= j + 1e-12
        assert j <= 2 * j_opt * (1 + 1e-9)

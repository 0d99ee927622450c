import numpy as np
import pytest

from cotec.datagen import PlantedSpec, generate, parse_truth, read_truth, write_truth


def test_noiseless_gaussian_is_exact():
    a, truth = generate(PlantedSpec((6, 5, 4), (2, 3, 2), noise=0.0, rng_seed=1))
    assert truth.objective == 0.0
    recon = truth.means.data[np.ix_(*truth.labels)]
    assert np.array_equal(a.data, recon)


def test_every_planted_cluster_nonempty():
    for seed in range(30):
        _, truth = generate(PlantedSpec((5, 4, 3), (5, 2, 3), rng_seed=seed))
        for asg in truth.assignments:
            assert np.all(asg.sizes() > 0)


def test_gaussian_objective_equals_noise_around_block_means():
    spec = PlantedSpec((8, 7, 6), (3, 2, 2), noise=1.5, rng_seed=4)
    a, truth = generate(spec)
    total = 0.0
    labels = truth.labels
    for b0 in range(3):
        for b1 in range(2):
            for b2 in range(2):
                block = a.data[np.ix_(labels[0] == b0, labels[1] == b1, labels[2] == b2)]
                if block.size:
                    total += float(((block - block.mean()) ** 2).sum())
    assert truth.objective == pytest.approx(total, rel=1e-9)


def test_planted_objective_concentrates_near_chi_square_mean():
    n = 30 * 30 * 20
    ratios = []
    for seed in range(20):
        _, truth = generate(PlantedSpec((30, 30, 20), (5, 5, 5), noise=1.0, rng_seed=seed))
        ratios.append(truth.objective / n)
    # block means absorb about 125 degrees of freedom out of 18000
    assert all(abs(r - 1.0) <= 0.05 for r in ratios)


def test_poisson_entries_stay_in_kl_domain():
    spec = PlantedSpec((10, 10, 5), (3, 3, 2), noise=3.0, mode="poisson", rng_seed=2)
    a, truth = generate(spec)
    assert a.data.min() >= spec.eps
    assert truth.divergence.kind == "kl"
    assert truth.objective > 0


def test_poisson_noise_grows_with_scale():
    js = []
    for noise in [0.1, 0.5, 2.0]:
        vals = [generate(PlantedSpec((10, 10), (2, 2), noise=noise, mode="poisson", rng_seed=s))[1].objective
                for s in range(5)]
        js.append(np.mean(vals))
    assert js[0] < js[1] < js[2]


def test_determinism():
    spec = PlantedSpec((7, 6), (2, 3), noise=0.7, rng_seed=123)
    a1, t1 = generate(spec)
    a2, t2 = generate(spec)
    assert a1.data.tobytes() == a2.data.tobytes()
    assert t1.objective == t2.objective


@pytest.mark.parametrize("kwargs", [
    dict(shape=(3, 3), k=(5, 5)),
    dict(shape=(3, 3), k=(2,)),
    dict(shape=(3, 3), k=(2, 2), noise=-1),
    dict(shape=(3, 3), k=(2, 2), mode="uniform"),
    dict(shape=(3, 3), k=(2, 2), mode="poisson", means_range=(0.0, 1.0)),
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        PlantedSpec(**kwargs)


def test_truth_round_trip(tmp_path):
    _, truth = generate(PlantedSpec((5, 4), (2, 2), noise=0.3, rng_seed=9))
    path = tmp_path / "x.truth"
    write_truth(path, truth)
    labels, k, j = read_truth(path)
    assert k == truth.k
    assert j == truth.objective
    assert all(np.array_equal(x, y) for x, y in zip(labels, truth.labels))
    with pytest.raises(ValueError):
        parse_truth("order 2\nk 2 2\n0 1\n")

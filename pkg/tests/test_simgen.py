import math

import numpy as np
import pytest
from scipy import stats

from ded.simgen import (
    Gaussian,
    MixtureSpec,
    ProductBeta,
    SimulationError,
    beta_mixture_spec,
    preset,
    sample_mixture,
    table1_spec,
)


def test_same_seed_same_bytes():
    spec = table1_spec(3)
    a = sample_mixture(spec, 2500, seed=42)
    b = sample_mixture(spec, 2500, seed=42)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != sample_mixture(spec, 2500, seed=43).tobytes()


def test_beta_one_one_is_uniform():
    n = 20_000
    X = sample_mixture(MixtureSpec((1.0,), (ProductBeta(((1.0, 1.0),) * 3),)), n, seed=1)
    assert np.all(np.abs(X.mean(axis=0) - 0.5) <= 3 / math.sqrt(12 * n))
    for j in range(3):
        assert stats.kstest(X[:, j], "uniform").pvalue > 1e-4


def test_single_gaussian_weight_gives_that_component():
    spec = MixtureSpec((1.0,), (Gaussian((0.2, 0.2), np.eye(2) * 0.001),))
    X, lab = sample_mixture(spec, 3000, seed=0, return_labels=True)
    assert np.all(lab == 0) and np.all(X < 0.5)
    with pytest.raises(SimulationError):
        MixtureSpec((1.0, 0.0), (spec.components[0], spec.components[0]))


@pytest.mark.parametrize("name", ["table1-d2", "table1-d4", "beta-mixture-d1", "beta-mixture-d5",
                                  "fig2-gauss", "fig2-gauss2", "fig2-beta3"])
def test_points_stay_in_cube(name):
    X = sample_mixture(preset(name), 5000, seed=3)
    assert X.shape == (5000, preset(name).d)
    assert np.all((X >= 0) & (X <= 1))


def test_table1_quadrant_counts():
    n = 1000
    X, lab = sample_mixture(table1_spec(2), n, seed=5, return_labels=True)
    tol = 4 * math.sqrt(n * 3 / 16)
    for c in range(4):
        assert abs(np.sum(lab == c) - n / 4) <= tol
    quadrant = (X[:, 0] >= 0.5).astype(int) * 2 + (X[:, 1] >= 0.5)
    assert np.all(np.abs(np.bincount(quadrant, minlength=4) - n / 4) <= tol)


def test_component_frequencies_match_weights():
    n = 20_000
    spec = MixtureSpec((0.2, 0.5, 0.3), tuple(ProductBeta(((a, 2.0),)) for a in (1.0, 2.0, 3.0)))
    _, lab = sample_mixture(spec, n, seed=11, return_labels=True)
    for c, w in enumerate(spec.weights):
        assert abs(np.mean(lab == c) - w) <= 4 * math.sqrt(w * (1 - w) / n)


def test_table1_spec_values():
    s2 = table1_spec(2)
    assert sorted(tuple(g.mean) for g in s2.components) == [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
    assert s2.weights == (0.25, 0.25, 0.25, 0.25)
    np.testing.assert_array_equal(s2.components[0].cov, 0.01 * np.eye(2))
    s3 = table1_spec(3)
    assert all(g.mean[2] == 0.5 for g in s3.components)
    with pytest.raises(SimulationError):
        table1_spec(1)


def test_beta_mixture_spec_values():
    s1 = beta_mixture_spec(1)
    shapes = s1.components[0].shapes[0]
    assert shapes[0] / sum(shapes) == 0.75
    assert abs(sample_mixture(s1, 40_000, seed=2).mean() - 0.5) < 0.01
    s5 = beta_mixture_spec(5)
    assert len(s5.components) == 2 and all(len(c.shapes) == 5 for c in s5.components)
    assert {tuple(c.shapes[0]) for c in s5.components} == {(15.0, 5.0), (5.0, 15.0)}


def test_beta_marginal_matches_cdf():
    X = sample_mixture(beta_mixture_spec(2), 5000, seed=8)
    cdf = lambda x: 0.5 * (stats.beta.cdf(x, 15, 5) + stats.beta.cdf(x, 5, 15))  # noqa: E731
    assert stats.kstest(X[:, 1], cdf).pvalue > 1e-4


def test_seeds_give_same_distribution():
    a = sample_mixture(table1_spec(2), 4000, seed=0)
    b = sample_mixture(table1_spec(2), 4000, seed=1)
    for j in range(2):
        assert stats.ks_2samp(a[:, j], b[:, j]).statistic < 1.63 * math.sqrt(2 / 4000) * 1.5


def test_gaussian_truncation_has_right_shape():
    # mean far outside the cube: accepted points pile up near the corner
    spec = MixtureSpec((1.0,), (Gaussian((-0.1, -0.1), np.eye(2) * 0.01),))
    X = sample_mixture(spec, 2000, seed=0)
    assert np.all((X >= 0) & (X <= 1)) and np.median(X) < 0.2


def test_pathological_spec_raises():
    spec = MixtureSpec((1.0,), (Gaussian((5.0, 5.0), np.eye(2) * 0.01),))
    with pytest.raises(SimulationError):
        sample_mixture(spec, 10, seed=0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: MixtureSpec((0.5, 0.6), (ProductBeta(((1, 1),)), ProductBeta(((1, 1),)))),
        lambda: Gaussian((0.5, 0.5), ((0.01, 0.02), (0.0, 0.01))),
        lambda: Gaussian((0.5, 0.5), ((0.01, 0.0), (0.0, -0.01))),
        lambda: ProductBeta(((0.0, 1.0),)),
        lambda: preset("nope"),
        lambda: sample_mixture(table1_spec(2), -1),
    ],
)
def test_invalid_specs(make):
    with pytest.raises(SimulationError):
        make()


def test_empty_sample():
    assert sample_mixture(table1_spec(2), 0).shape == (0, 2)

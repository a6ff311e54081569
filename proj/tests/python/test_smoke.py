import math

import numpy as np
import pytest

import lsainfer


def test_version():
    assert lsainfer.__version__ == "0.1.0"


def test_schedule_validation():
    s = lsainfer.StepSchedule(0.5, 2 / 3, 8)
    assert s(0) == pytest.approx(0.125)
    with pytest.raises(lsainfer.ConfigError, match=r"gamma must lie in \(1/2, 1\)"):
        lsainfer.StepSchedule(16.0, 0.5, 0)


def test_run_and_average():
    inst = lsainfer.Instance.random_hurwitz(2, seed=3)
    s = lsainfer.StepSchedule(0.3, 0.7)
    t = lsainfer.run(inst, s, 500, seed=1)
    assert t.iterates.shape == (500, 2)
    np.testing.assert_allclose(t.average, t.iterates.mean(axis=0), rtol=1e-12)
    assert t.reconstruction_residual(2) < 1e-10
    again = lsainfer.run(inst, s, 500, seed=1)
    assert np.array_equal(t.iterates, again.iterates)


def test_one_step_example():
    inst = lsainfer.Instance.from_atoms([(np.eye(2), np.ones(2))], [1.0])
    t = lsainfer.run(inst, lsainfer.StepSchedule(0.1, 0.7), 2)
    np.testing.assert_allclose(t.iterates[1], [0.1, 0.1], rtol=1e-15)


def test_covariances():
    inst = lsainfer.Instance.random_hurwitz(3, seed=2)
    s = lsainfer.StepSchedule(0.5, 0.7)
    si = lsainfer.sigma_inf(inst.Abar, inst.Sigma_eps)
    np.testing.assert_allclose(inst.Abar @ si @ inst.Abar.T, inst.Sigma_eps, atol=1e-10)
    gap = lsainfer.covariance_gap(inst.Abar, inst.Sigma_eps, s, [256, 1024, 4096])
    assert gap["distance"][0] > gap["distance"][-1]
    c = lsainfer.stability_constants(np.diag([1.0, 2.0]), 1.0)
    assert c["a"] == pytest.approx(1.0)


def test_bootstrap_collapse_and_sets():
    inst = lsainfer.Instance.random_hurwitz(2, seed=1)
    t = lsainfer.run(inst, lsainfer.StepSchedule(0.3, 0.7), 256, seed=4)
    unit = lsainfer.bootstrap(t, 10, weights="unit")
    np.testing.assert_allclose(unit["replicates"], np.tile(t.average, (10, 1)), atol=1e-14)

    ens = lsainfer.bootstrap(t, 200, weights="two_point", seed=7)
    r90 = lsainfer.confidence_sets(ens["base"], ens["replicates"], 0.9)
    r95 = lsainfer.confidence_sets(ens["base"], ens["replicates"], 0.95)
    assert np.all(r95["hi"] >= r90["hi"])
    assert not r90["degenerate"]


def test_lower_bound_distance():
    s = lsainfer.StepSchedule(1.0, 0.8)
    ns = [2**e for e in range(8, 17)]
    d = [lsainfer.kolmogorov_normal_vs_normal_1d(lsainfer.lower_bound_sigma_n_1d(s, n)) for n in ns]
    fit = lsainfer.rate_fit(ns, d)
    assert abs(fit["slope"] + 0.2) < 0.08
    assert lsainfer.kolmogorov_normal_vs_normal_1d(1.0) == 0.0
    assert lsainfer.kolmogorov_normal_vs_normal_1d(2.0) == pytest.approx(
        lsainfer.kolmogorov_normal_vs_normal_1d(0.5), rel=1e-12
    )


def test_halfspace_distance_of_gaussian_sample():
    rng = np.random.default_rng(0)
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    x = rng.multivariate_normal(np.zeros(2), cov, size=5000)
    d = lsainfer.halfspace_distance(x, cov, K=8)
    assert d < math.sqrt(math.log(2 / (0.05 / 8)) / (2 * 5000))


def test_divergence_is_reported():
    inst = lsainfer.Instance.from_atoms([(np.eye(1), np.ones(1))], [1.0])
    with pytest.raises(lsainfer.DivergenceError):
        lsainfer.run(inst, lsainfer.StepSchedule(50.0, 0.6), 200)

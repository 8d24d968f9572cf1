import numpy as np
import pytest

from conftest import make_table
from kportfolio.errors import ConfigError, FormatError, UsageError
from kportfolio.features import (ELA_FEATURE_NAMES, FeatureVector, Standardizer, _r2,
                                 ela_from_sample, extract_ela, extract_latent_perf,
                                 fit_standardizer)
from kportfolio.suite import GeneratedFunction, SuiteSpec, generate_suite


def normal_equations_r2(design, y):
    beta = np.linalg.solve(design.T @ design, design.T @ y)
    resid = y - design @ beta
    return 1 - resid @ resid / np.sum((y - y.mean()) ** 2)


def test_regression_against_normal_equations(rng):
    x = rng.uniform(-5, 5, size=(100, 3))
    y = x[:, 0] ** 2 + 0.3 * x[:, 1] + rng.normal(size=100)
    design = np.column_stack([np.ones(100), x, x**2])
    assert _r2(design, y)[0] == pytest.approx(normal_equations_r2(design, y), abs=1e-10)


@pytest.mark.parametrize("x_opt", [[0.0, 0.0], [3.0, -2.0], [-4.0, 4.0]])
def test_sphere_is_quadratic(x_opt):
    f = GeneratedFunction.single("sphere", 2, x_opt)
    vals = dict(zip(ELA_FEATURE_NAMES, extract_ela(f, seed=4).values))
    assert vals["ela_meta.quad_w_interact.adj_r2"] > 0.99


def test_degenerate_sample():
    x = np.random.default_rng(0).uniform(-5, 5, size=(40, 2))
    v = dict(zip(ELA_FEATURE_NAMES, ela_from_sample(x, np.full(40, 3.0))))
    assert v["ela_distr.skewness"] == 0.0 and v["ela_distr.kurtosis"] == 0.0
    assert v["ela_meta.lin_simple.adj_r2"] == 0.0 and v["ela_meta.quad_w_interact.adj_r2"] == 0.0


def test_determinism_and_shape():
    suite = generate_suite(SuiteSpec(dimension=5, n_functions=6, master_seed=2))
    for f in suite.functions:
        a, b = extract_ela(f, seed=9), extract_ela(f, seed=9)
        assert a.values.tobytes() == b.values.tobytes()
        assert a.values.shape == (len(ELA_FEATURE_NAMES),)
        assert np.all(np.isfinite(a.values))


def test_sample_size_floor():
    f = GeneratedFunction.single("sphere", 5, np.zeros(5))
    with pytest.raises(ConfigError):
        extract_ela(f, n_samples=49)


def test_latent_perf():
    E = [1.0, 0.1, 0.01, 0.001]
    z = [0.0] * 4
    table = make_table({
        (0, 0): [z, [1.0, 1.0, 1.0, 1.0]],
        (0, 1): [z, [0.0, 0.0, 0.0, 0.0]],
        (0, 2): [z, [1.0, 0.5, 0.0, 0.0]],
    }, [5, 10], E)
    v = extract_latent_perf(0, table, 10, [0, 1, 2])
    assert v.kind == "latent_perf"
    np.testing.assert_allclose(v.values, [1.0, 0.0, 0.375], atol=1e-15)


class TestStandardizer:
    def test_hand_case(self):
        s = fit_standardizer([[0.0], [1.0], [2.0]])
        assert s.mean[0] == 1.0
        assert s.std[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-12)
        assert s.transform(np.array([2.0]))[0] == pytest.approx(1.2247448713915890, abs=1e-12)

    def test_mean_maps_to_zero_and_outliers_stay_finite(self, rng):
        train = rng.normal(size=(30, 4))
        s = fit_standardizer(train)
        np.testing.assert_allclose(s.transform(train.mean(axis=0)), 0.0, atol=1e-12)
        out = s.transform(np.array([1e8, -1e8, 0.0, 3.0]))
        assert np.all(np.isfinite(out)) and abs(out[0]) > 1e6

    def test_train_moments_and_degenerate(self, rng):
        train = rng.normal(loc=5, scale=3, size=(50, 5))
        train[:, 2] = 7.0
        s = fit_standardizer([FeatureVector(i, r) for i, r in enumerate(train)])
        z = s.transform(train)
        keep = [0, 1, 3, 4]
        assert np.all(np.abs(z[:, keep].mean(axis=0)) < 1e-9)
        assert np.all(np.abs(z[:, keep].var(axis=0) - 1) < 1e-6)
        assert np.all(z[:, 2] == 0.0)

    def test_errors_and_roundtrip(self):
        with pytest.raises(UsageError):
            fit_standardizer([[1.0, 2.0]])
        s = fit_standardizer([[1.0, 2.0], [3.0, 5.0]])
        with pytest.raises(UsageError):
            s.transform(np.zeros(3))
        again = Standardizer.from_json(s.to_json())
        assert again.mean.tobytes() == s.mean.tobytes() and again.std.tobytes() == s.std.tobytes()
        with pytest.raises(FormatError):
            Standardizer.from_json('{"mean": [1]}')

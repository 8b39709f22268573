from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drglm import Dataset, fit_propensity, make_weights, weight_diagnostics
from drglm.errors import ConvergenceError, DataError, PositivityError

from conftest import sim


def with_phat(pf, phat):
    return replace(pf, phat=np.asarray(phat, dtype=float))


@pytest.fixture
def pf():
    ds = Dataset.from_dict({"x": [1.0, 0.0, 1.0, 0.0], "z": [0.1, 0.5, -0.3, 1.0]})
    return fit_propensity(ds, "x ~ 1")


class TestFitPropensity:
    def test_intercept_only_gives_sample_mean(self):
        ds = Dataset.from_dict({"x": [1.0, 0, 0, 1, 1, 0, 1, 1]})
        pf = fit_propensity(ds, "x ~ 1")
        np.testing.assert_allclose(pf.phat, 5 / 8, rtol=1e-12)
        assert pf.exposure_name == "x"

    def test_recovers_generating_coefficients(self):
        ds = sim("gaussian", 20_000, seed=99)
        pf = fit_propensity(ds, "x ~ z1 + I(z1^2) + z2")
        se = np.sqrt(np.diag(pf.glm.vcov))
        truth = np.array([-0.4, 0.4, 0.28, 0.4])
        assert np.all(np.abs(pf.glm.coefficients - truth) < 4 * se)

    def test_misspecified_formula_fits(self):
        pf = fit_propensity(sim("gaussian", 500), "x ~ z1")
        assert pf.glm.converged
        assert np.all((pf.phat > 0) & (pf.phat < 1))

    def test_non_binary_exposure(self):
        ds = Dataset.from_dict({"x": [0.0, 1, 2, 1], "z": [1.0, 2, 3, 4]})
        with pytest.raises(DataError):
            fit_propensity(ds, "x ~ z")

    def test_perfect_separation_surfaces_as_fit_error(self):
        ds = Dataset.from_dict({"x": [0.0, 0, 0, 1, 1, 1], "z": [1.0, 2, 3, 4, 5, 6]})
        with pytest.raises(ConvergenceError):
            fit_propensity(ds, "x ~ z")


class TestMakeWeights:
    @pytest.mark.parametrize("x,p,expected", [(1.0, 0.5, 2.0), (0.0, 0.25, 4 / 3), (1.0, 0.2, 5.0)])
    def test_examples(self, x, p, expected):
        ds = Dataset.from_dict({"x": [x, 1 - x]})
        pf = with_phat(fit_propensity(ds, "x ~ 1"), [p, p])
        assert make_weights(pf).w[0] == pytest.approx(expected, rel=1e-15)

    def test_definition_exactly(self):
        ds = sim("bernoulli", 300, seed=3)
        pf = fit_propensity(ds, "x ~ z1 + z2")
        x, p = pf.exposure, pf.phat
        np.testing.assert_array_equal(make_weights(pf).w, x / p + (1 - x) / (1 - p))

    def test_weights_at_least_one(self):
        w = make_weights(fit_propensity(sim("poisson", 300, seed=1), "x ~ z1 + I(z1^2) + z2")).w
        assert np.all(w >= 1.0)

    def test_positivity_error_names_rows(self, pf):
        bad = with_phat(pf, [0.5, 0.0, 1.0, 0.4])
        with pytest.raises(PositivityError) as err:
            make_weights(bad)
        assert err.value.rows == [1, 2]

    def test_clamp(self, pf):
        bad = with_phat(pf, [1.0, 0.0, 0.5, 0.5])
        w = make_weights(bad, clamp=0.01)
        np.testing.assert_allclose(w.phat, [0.99, 0.01, 0.5, 0.5])
        np.testing.assert_allclose(w.w, [1 / 0.99, 1 / 0.99, 2.0, 2.0])

    @pytest.mark.parametrize("clamp", [0.0, 0.5, -0.1])
    def test_bad_clamp(self, pf, clamp):
        with pytest.raises(ValueError):
            make_weights(pf, clamp=clamp)

    def test_saturated_model_weighted_arm_sizes_equal_n(self):
        # with phat equal to the within-cell exposure rate, sum x/p = n exactly
        r = np.random.default_rng(5)
        g = r.choice(["a", "b", "c"], 3000)
        x = (r.random(3000) < np.where(g == "a", 0.3, 0.6)).astype(float)
        pf = fit_propensity(Dataset.from_dict({"x": x, "g": g}), "x ~ g")
        p, n = pf.phat, len(x)
        assert abs(np.sum(x / p) - n) < 1e-6 * n
        assert abs(np.sum((1 - x) / (1 - p)) - n) < 1e-6 * n

    @pytest.mark.parametrize("formula", ["x ~ z1", "x ~ z1 + I(z1^2) + z2"])
    def test_intercept_score_balances_exposure(self, formula):
        # the intercept's score equation gives sum(x - phat) = 0; sum x/phat = n only on average
        ds = sim("gaussian", 3000, seed=5)
        pf = fit_propensity(ds, formula)
        x, p = pf.exposure, pf.phat
        assert abs(np.sum(x - p)) < 1e-8 * len(x)
        assert abs(np.sum(x / p) / len(x) - 1) < 0.05

    def test_deterministic(self):
        ds = sim("bernoulli", 400, seed=2)
        a = make_weights(fit_propensity(ds, "x ~ z1 + z2")).w
        b = make_weights(fit_propensity(ds, "x ~ z1 + z2")).w
        assert a.tobytes() == b.tobytes()


class TestDiagnostics:
    def test_constant_half(self, pf):
        d = weight_diagnostics(make_weights(with_phat(pf, [0.5] * 4)))
        assert d["mean_0"] == d["mean_1"] == 2.0
        assert d["ess_0"] == d["n_0"] == 2
        assert d["ess_1"] == d["n_1"] == 2

    def test_extreme_unit_dominates_max(self, pf):
        d = weight_diagnostics(make_weights(with_phat(pf, [0.001, 0.5, 0.5, 0.5])))
        assert d["max"] == pytest.approx(1000.0)
        assert d["min"] == pytest.approx(2.0)

    @given(st.lists(st.floats(0.01, 0.99), min_size=4, max_size=4))
    def test_ess_at_most_arm_size(self, probs):
        ds = Dataset.from_dict({"x": [1.0, 0.0, 1.0, 0.0]})
        d = weight_diagnostics(make_weights(with_phat(fit_propensity(ds, "x ~ 1"), probs)))
        assert d["ess_0"] <= d["n_0"] + 1e-12
        assert d["ess_1"] <= d["n_1"] + 1e-12

import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drglm import (
    Dataset,
    aipw_ate,
    aipw_from_weighted_fit,
    fit_formula,
    fit_propensity,
    iptw_glm_ate,
    make_family,
    rebuild,
    standardize,
    unweighted_glm_ate,
)
from drglm.errors import DataError, DrglmError
from drglm.tabular import override_exposure

from conftest import sim

PS = "x ~ z1 + I(z1^2) + z2"


def binary_table(counts):
    """Expand {(x, z, y): count} into a dataset."""
    rows = [(x, z, y) for (x, z, y), k in counts.items() for _ in range(k)]
    x, z, y = (np.array(c, dtype=float) for c in zip(*rows))
    return Dataset.from_dict({"x": x, "z": z, "y": y})


COUNTS = {
    (0, 0, 0): 9, (0, 0, 1): 3, (0, 1, 0): 4, (0, 1, 1): 4,
    (1, 0, 0): 2, (1, 0, 1): 6, (1, 1, 0): 5, (1, 1, 1): 15,
}


class TestStandardize:
    def test_collapsibility(self):
        ds = sim("gaussian", 500, seed=1)
        est, bundle = iptw_glm_ate(ds, "y ~ x + z1 + z2", "x ~ z1 + z2", make_family("gaussian"))
        assert est.ate == pytest.approx(bundle.outcome_fit.coef("x"), abs=1e-12)
        assert est.exposure_coef == bundle.outcome_fit.coef("x")

    def test_constant_outcome(self):
        ds = Dataset.from_dict({"y": [2.5] * 6, "x": [0.0, 1, 0, 1, 1, 0]})
        g = fit_formula("y ~ x", ds, make_family("gaussian"))
        psi1, psi0 = standardize(g, ds, "x")
        assert psi1 == pytest.approx(2.5, abs=1e-12)
        assert psi0 == pytest.approx(2.5, abs=1e-12)

    def test_saturated_logistic_by_hand(self):
        ds = binary_table(COUNTS)
        n = sum(COUNTS.values())
        # hand enumeration of the 8 cells
        pz = {z: sum(k for (x, zz, y), k in COUNTS.items() if zz == z) / n for z in (0, 1)}

        def rate(x, z):
            ones = COUNTS[(x, z, 1)]
            return ones / (ones + COUNTS[(x, z, 0)])

        psi = {x: sum(pz[z] * rate(x, z) for z in (0, 1)) for x in (0, 1)}
        est, _ = iptw_glm_ate(ds, "y ~ x * z", "x ~ z", make_family("binomial"))
        assert est.psi1 == pytest.approx(psi[1], abs=1e-9)
        assert est.psi0 == pytest.approx(psi[0], abs=1e-9)
        g = unweighted_glm_ate(ds, "y ~ x * z", "x", make_family("binomial"))
        assert g.ate == pytest.approx(psi[1] - psi[0], abs=1e-9)

    def test_prior_weights_do_not_enter_average(self):
        ds = sim("poisson", 300, seed=2)
        g = fit_formula("y ~ x * z1 + z2", ds, make_family("poisson"), np.linspace(0.5, 3, 300))
        psi1, psi0 = standardize(g, ds, "x")
        for arm, psi in ((1, psi1), (0, psi0)):
            X = rebuild(g.design, override_exposure(ds, "x", arm))
            assert psi == pytest.approx(np.mean(np.exp(X @ g.coefficients)), rel=1e-13)

    def test_exposure_missing_from_outcome(self):
        ds = sim("gaussian", 100)
        with pytest.raises(DataError):
            iptw_glm_ate(ds, "y ~ z1", "x ~ z1", make_family("gaussian"))
        g = fit_formula("y ~ z1", ds, make_family("gaussian"))
        with pytest.raises(DataError):
            standardize(g, ds, "x")


class TestIptwGlm:
    def test_method_and_no_inference(self):
        est, bundle = iptw_glm_ate(sim("gaussian", 200), "y ~ x + z1", PS, make_family("gaussian"))
        assert est.method == "iptw_glm_standardized"
        assert est.se is None and est.ci is None
        assert bundle.exposure_name == "x" and bundle.outcome_name == "y"
        np.testing.assert_array_equal(bundle.outcome_fit.prior_weights, bundle.weights.w)

    def test_ate_is_difference(self):
        est, _ = iptw_glm_ate(sim("poisson", 200), "y ~ x + z1", PS, make_family("poisson"))
        assert est.ate == est.psi1 - est.psi0

    @given(st.integers(0, 5000))
    def test_binomial_in_parameter_space(self, seed):
        est, _ = iptw_glm_ate(sim("bernoulli", 120, seed=seed), "y ~ x * z1 + z2", "x ~ z1",
                              make_family("binomial"))
        assert 0 <= est.psi0 <= 1 and 0 <= est.psi1 <= 1
        assert -1 <= est.ate <= 1

    @pytest.mark.parametrize("dgp,family", [("gaussian", "gaussian"), ("bernoulli", "binomial"),
                                            ("poisson", "poisson")])
    def test_relabel_negates(self, dgp, family):
        ds = sim(dgp, 300, seed=4)
        flipped = ds.with_column("x", type(ds["x"]).numeric(1 - ds.values("x")))
        fam = make_family(family)
        a, _ = iptw_glm_ate(ds, "y ~ x * z1 + z2", PS, fam)
        b, _ = iptw_glm_ate(flipped, "y ~ x * z1 + z2", PS, fam)
        assert b.ate == pytest.approx(-a.ate, abs=1e-9)

    def test_clamp_changes_nothing_without_extremes(self):
        ds = sim("gaussian", 300, seed=5)
        a, _ = iptw_glm_ate(ds, "y ~ x + z1", PS, make_family("gaussian"))
        b, _ = iptw_glm_ate(ds, "y ~ x + z1", PS, make_family("gaussian"), clamp=1e-6)
        assert a.ate == b.ate


class TestAipw:
    def test_constant_propensity_saturated_model(self):
        # brute force: per-arm cell means averaged over the z margin
        r = np.random.default_rng(20)
        x = np.array([0, 1] * 10, dtype=float)
        z = r.integers(0, 2, 20).astype(float)
        y = r.normal(size=20)
        z[:4] = [0, 0, 1, 1]
        ds = Dataset.from_dict({"x": x, "z": z, "y": y})
        cell = {(a, b): y[(x == a) & (z == b)].mean() for a in (0, 1) for b in (0, 1)}
        psi = {a: np.mean([cell[(a, zi)] for zi in z]) for a in (0, 1)}
        est = aipw_ate(ds, "y ~ z", "x ~ 1", make_family("gaussian"), "stratified")
        assert est.psi1 == pytest.approx(psi[1], abs=1e-9)
        assert est.psi0 == pytest.approx(psi[0], abs=1e-9)
        assert est.method == "aipw_stratified"

    def test_formula_by_hand(self):
        ds = sim("gaussian", 300, seed=6)
        est = aipw_ate(ds, "y ~ x + z1 + z2", PS, make_family("gaussian"), "shared")
        p = fit_propensity(ds, PS).phat
        g = fit_formula("y ~ x + z1 + z2", ds, make_family("gaussian"))
        b = g.coefficients
        z1, z2, x, y = (ds.values(c) for c in ("z1", "z2", "x", "y"))
        yh1 = b[0] + b[1] + b[2] * z1 + b[3] * z2
        yh0 = b[0] + b[2] * z1 + b[3] * z2
        terms = y * x / p - yh1 * (x - p) / p - y * (1 - x) / (1 - p) - yh0 * (x - p) / (1 - p)
        assert est.ate == pytest.approx(np.mean(terms), abs=1e-10)
        assert est.method == "aipw_shared"

    def test_stratified_rejects_exposure_in_formula(self):
        with pytest.raises(DataError):
            aipw_ate(sim("gaussian", 100), "y ~ x + z1", PS, make_family("gaussian"), "stratified")

    def test_shared_requires_exposure(self):
        with pytest.raises(DataError):
            aipw_ate(sim("gaussian", 100), "y ~ z1", PS, make_family("gaussian"), "shared")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            aipw_ate(sim("gaussian", 100), "y ~ z1", PS, make_family("gaussian"), "pooled")

    def test_empty_arm(self):
        ds = Dataset.from_dict({"x": [0.0] * 6, "z": [1.0, 2, 3, 4, 5, 6], "y": [1.0, 2, 3, 1, 2, 3]})
        with pytest.raises(DrglmError):
            aipw_ate(ds, "y ~ z", "x ~ 1", make_family("gaussian"))

    @pytest.mark.parametrize("dgp,family", [("gaussian", "gaussian"), ("bernoulli", "binomial")])
    def test_doubly_robust_with_correct_outcome(self, dgp, family):
        # with the correct outcome model both estimators agree closely, even with a poor PS
        ds = sim(dgp, 4000, seed=7)
        fam = make_family(family)
        a = aipw_ate(ds, "y ~ z1 + I(z1^2) + z2", "x ~ z1", fam)
        b, _ = iptw_glm_ate(ds, "y ~ x * (z1 + I(z1^2) + z2)", "x ~ z1", fam)
        assert a.ate == pytest.approx(b.ate, abs=0.05 * max(1.0, abs(b.ate)))


class TestAipwIdentity:
    @pytest.mark.parametrize("dgp,family,n", [("gaussian", "gaussian", 400), ("bernoulli", "binomial", 200),
                                              ("poisson", "poisson", 400)])
    def test_canonical_identity(self, dgp, family, n):
        ds = sim(dgp, n, seed=8)
        est, bundle = iptw_glm_ate(ds, "y ~ x * z1 + z2", "x ~ z1 + z2", make_family(family))
        other = aipw_from_weighted_fit(bundle)
        assert abs(other.ate - est.ate) < 1e-9
        assert abs(other.psi1 - est.psi1) < 1e-9

    def test_fails_for_log_binomial(self):
        r = np.random.default_rng(9)
        n = 1000
        z = r.uniform(-1, 1, n)
        x = (r.random(n) < 1 / (1 + np.exp(-z))).astype(float)
        y = (r.random(n) < np.exp(-1.5 + 0.4 * x + 0.5 * z)).astype(float)
        ds = Dataset.from_dict({"x": x, "z": z, "y": y})
        est, bundle = iptw_glm_ate(ds, "y ~ x + z", "x ~ z", make_family("binomial", "log"))
        assert bundle.outcome_fit.converged
        assert abs(aipw_from_weighted_fit(bundle).ate - est.ate) > 1e-6

    def test_precondition_weights(self):
        _, bundle = iptw_glm_ate(sim("gaussian", 100), "y ~ x + z1", PS, make_family("gaussian"))
        bad = replace(bundle, weights=replace(bundle.weights, w=bundle.weights.w * 2))
        with pytest.raises(DrglmError):
            aipw_from_weighted_fit(bad)


class TestSerialization:
    def test_record_and_json(self):
        est, _ = iptw_glm_ate(sim("gaussian", 100), "y ~ x + z1", PS, make_family("gaussian"))
        est = est.with_inference(0.1, (1.8, 2.2), "bootstrap", seed=3, B=50)
        rec = json.loads(est.to_json())
        assert rec["method"] == "iptw_glm_standardized"
        assert rec["ate"] == pytest.approx(rec["psi1"] - rec["psi0"])
        assert rec["ci"] == [1.8, 2.2]
        assert rec["seed"] == 3 and rec["B"] == 50
        assert rec["inference"] == "bootstrap"

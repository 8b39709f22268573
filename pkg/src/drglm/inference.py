"""Confidence intervals for standardised ATE estimates.

Two routes are provided:

* a whole-procedure nonparametric bootstrap, which refits the propensity
  and outcome models on every resample and reports percentile intervals;
* an influence-function standard error that adds to the efficient
  influence function the first-order effect of estimating the propensity
  parameters (``K`` terms) and the outcome parameters (``L`` terms).
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DrglmError, InferenceError, UnsupportedFeatureError
from .estimators import AteEstimate, FitBundle, _standardize_prepared
from .glm import GlmFit, fit

log = logging.getLogger(__name__)

DEFAULT_B = 1000
MAX_FAIL_FRACTION = 0.05
THREADS_ENV = "DRGLM_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def resample_rng(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Independent stream for resample ``index``; reproducible in isolation."""
    return np.random.default_rng([seed, index, attempt])


@dataclass(frozen=True)
class BootstrapResult:
    estimates: np.ndarray
    ci: tuple
    B: int
    seed: int
    failures: int = 0

    @property
    def se(self) -> float:
        return float(np.std(self.estimates, ddof=1))


def _as_float(value):
    if isinstance(value, AteEstimate):
        return value.ate
    if isinstance(value, tuple):
        value = value[0]
        if isinstance(value, AteEstimate):
            return value.ate
    return float(value)


def bootstrap_indices(
    n: int,
    statistic: Callable[[np.ndarray], float],
    B: int = DEFAULT_B,
    seed: int = 0,
    *,
    threads: int | None = None,
    max_fail_fraction: float = MAX_FAIL_FRACTION,
) -> BootstrapResult:
    """Percentile bootstrap over row-index resamples of size ``n``.

    ``statistic`` receives an index array and returns the estimate. A resample
    whose statistic raises a :class:`DrglmError` is redrawn; more than
    ``max_fail_fraction * B`` failures in total abort with InferenceError.
    """
    if B < 2:
        raise ValueError("B must be at least 2")
    budget = int(np.floor(max_fail_fraction * B))
    threads = default_threads() if threads is None else threads

    def one(b):
        fails = 0
        while True:
            idx = resample_rng(seed, b, fails).integers(0, n, size=n)
            try:
                val = _as_float(statistic(idx))
                if np.isfinite(val):
                    return val, fails
            except DrglmError as exc:
                log.info("bootstrap resample %d attempt %d failed: %s", b, fails, exc)
            fails += 1
            if fails > budget:
                return None, fails

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(B)))
    else:
        results = [one(b) for b in range(B)]
    failures = sum(f for _, f in results)
    if failures > budget or any(v is None for v, _ in results):
        raise InferenceError(f"{failures} of {B} bootstrap resamples failed (limit {budget})")
    if failures:
        log.info("%d failed bootstrap resamples were redrawn", failures)
    est = np.array([v for v, _ in results])
    lo, hi = np.quantile(est, [0.025, 0.975])
    return BootstrapResult(est, (float(lo), float(hi)), B, seed, failures)


def bootstrap_ci(ds, pipeline: Callable, B: int = DEFAULT_B, seed: int = 0, **kwargs) -> BootstrapResult:
    """Whole-procedure bootstrap of ``pipeline`` (a map from Dataset to ATE).

    Each resample draws ``n`` rows with replacement and reruns the entire
    pipeline on them. The interval is the 2.5th and 97.5th percentiles
    (linear interpolation).
    """
    return bootstrap_indices(ds.n_rows, lambda idx: pipeline(ds.take(idx)), B, seed, **kwargs)


def _loglik_scores(g: GlmFit) -> np.ndarray:
    """Rows of the log-likelihood score (dispersion 1): w (y-mu) mu_eta / v(mu) x."""
    fam = g.family
    factor = fam.mu_eta(g.eta) / fam.variance_fn(g.fitted_mu)
    return (g.prior_weights * (g.y - g.fitted_mu) * factor)[:, None] * g.X


def parameter_influence(g: GlmFit) -> np.ndarray:
    """Per-observation influence of the coefficient estimates, scaled by 1/n.

    Row i is the inverse Fisher information (dispersion 1) applied to the
    i-th score contribution, so rows sum to zero at the MLE and the sum of
    outer products is the sandwich covariance.
    """
    if not g.converged:
        raise InferenceError("parameter influence needs a converged fit")
    unscaled = g.vcov / g.scale
    if not np.all(np.isfinite(unscaled)):
        raise InferenceError("covariance matrix is not finite")
    return _loglik_scores(g) @ unscaled.T


def _sandwich_estfun(g: GlmFit) -> np.ndarray:
    # score rows divided by sum(wres^2) / sum(working weights) for families
    # with a free dispersion, as in the reference R procedure
    scores = _loglik_scores(g)
    if g.family.name in ("binomial", "poisson"):
        return scores
    fam = g.family
    mu_eta = fam.mu_eta(g.eta)
    var = fam.variance_fn(g.fitted_mu)
    ww = g.prior_weights * mu_eta**2 / var
    wres = g.prior_weights * (g.y - g.fitted_mu) * mu_eta / var
    return scores / (np.sum(wres**2) / np.sum(ww))


@dataclass(frozen=True)
class InfluenceDecomposition:
    """Pieces of the influence-function standard error.

    All per-observation vectors carry the 1/n factor, so
    ``se = sqrt(sum((phi1 - phi0)**2))``.
    """

    eif_terms_1: np.ndarray
    eif_terms_0: np.ndarray
    K1: np.ndarray
    K0: np.ndarray
    L1: np.ndarray
    L0: np.ndarray
    param_influence_alpha: np.ndarray
    param_influence_theta: np.ndarray
    phi1: np.ndarray
    phi0: np.ndarray
    se: float
    eif_only_se: float
    ate: float
    mode: str

    def ci(self, z: float = 1.96):
        return self.ate - z * self.se, self.ate + z * self.se

    @property
    def correction_share(self) -> float:
        """Fraction of se^2 not explained by the efficient influence function alone."""
        return 1.0 - self.eif_only_se**2 / self.se**2


MODES = ("supplement_compatible", "weighted_consistent")


def influence_se(bundle: FitBundle, mode: str = "supplement_compatible") -> InfluenceDecomposition:
    """Influence-function standard error of the IPTW-GLM standardised ATE.

    ``supplement_compatible`` reproduces the published reference procedure:
    the outcome regression, its link derivative and its score rows come from
    an unweighted refit of the outcome formula; centring uses the weighted
    fit's standardised means; the outcome-parameter influence multiplies the
    weighted fit's covariance by the unweighted fit's score rows; only the
    exposure's own design column is set to 1 or 0 when forming the ``L``
    terms; and the arm-0 ``L`` term carries the reference sign.

    ``weighted_consistent`` takes every quantity from the weighted fit,
    rebuilds the counterfactual designs in full, and uses the analytically
    derived sign for the arm-0 ``L`` term.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    wfit = bundle.outcome_fit
    if not wfit.family.canonical:
        raise UnsupportedFeatureError("influence-function SE requires a canonical-link outcome model")
    prep = bundle.prepared
    ps = bundle.propensity.glm
    n = prep.n
    x, y = prep.x, prep.y
    p = bundle.phat
    est1f, est0f = _standardize_prepared(wfit, prep)
    fam = wfit.family

    if mode == "supplement_compatible":
        ofit = fit(wfit.design, y, fam)
        Xo = ofit.X
        j = ofit.column_names.index(prep.exposure)
        Xo1, Xo0 = Xo.copy(), Xo.copy()
        Xo1[:, j] = 1.0
        Xo0[:, j] = 0.0
        theta_infl = _sandwich_estfun(ofit) @ wfit.vcov.T
        l0_sign = -1.0
    else:
        ofit = wfit
        Xo1, Xo0 = prep.out_x1, prep.out_x0
        theta_infl = parameter_influence(wfit)
        l0_sign = 1.0

    eta1 = prep.out_x1 @ ofit.coefficients
    eta0 = prep.out_x0 @ ofit.coefficients
    est1, est0 = fam.inv_link(eta1), fam.inv_link(eta0)
    gdot1, gdot0 = fam.mu_eta(eta1), fam.mu_eta(eta0)

    alpha_infl = _loglik_scores(ps) @ ps.vcov.T
    hdot = ps.family.mu_eta(ps.eta)
    Xw = ps.X

    eif1 = (x / p * (y - est1) + (est1 - est1f)) / n
    eif0 = ((1 - x) / (1 - p) * (y - est0) + (est0 - est0f)) / n
    K1 = -((x * hdot / p**2) * (y - est1)) @ Xw / n
    K0 = (((1 - x) * hdot / (1 - p) ** 2) * (y - est0)) @ Xw / n
    L1 = (gdot1 * (1 - x / p)) @ Xo1 / n
    L0 = l0_sign * (gdot0 * (1 - (1 - x) / (1 - p))) @ Xo0 / n

    phi1 = eif1 + alpha_infl @ K1 + theta_infl @ L1
    phi0 = eif0 + alpha_infl @ K0 + theta_infl @ L0
    se = float(np.sqrt(np.sum((phi1 - phi0) ** 2)))
    eif_se = float(np.sqrt(np.sum((eif1 - eif0) ** 2)))
    return InfluenceDecomposition(
        eif1, eif0, K1, K0, L1, L0, alpha_infl, theta_infl, phi1, phi0,
        se, eif_se, est1f - est0f, mode,
    )


def attach_influence(est: AteEstimate, bundle: FitBundle, mode: str = "supplement_compatible") -> AteEstimate:
    dec = influence_se(bundle, mode)
    return est.with_inference(dec.se, dec.ci(), "influence_function", mode=mode)


def attach_bootstrap(est: AteEstimate, result: BootstrapResult) -> AteEstimate:
    return est.with_inference(result.se, result.ci, "bootstrap", B=result.B, seed=result.seed)

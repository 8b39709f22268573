"""Weighted GLM fitting by iteratively reweighted least squares.

The solver finds the root of the prior-weighted score equations. For a
canonical link these are ``X' diag(w) (y - mu) = 0``; for other links each
row carries the extra factor ``mu_eta(eta) / v(mu)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DataError, FitError, RankDeficientError
from .families import Family
from .formula import DesignMatrix, FormulaAst, build_design, parse, rebuild, response_vector
from .tabular import Dataset

log = logging.getLogger(__name__)

MAX_ITER = 100
TOL = 1e-8
MAX_HALVINGS = 20
RANK_TOL = 1e-10
_PROB_CLAMP = 1e-10


@dataclass(frozen=True)
class GlmFit:
    """A converged (or last-iterate) GLM fit.

    Attributes
    ----------
    coefficients : ndarray, shape (p,)
    vcov : ndarray, shape (p, p)
        Inverse weighted Fisher information times ``scale``.
    scale : float
        Pearson dispersion estimate for gaussian, gamma and inverse gaussian
        families; 1 for binomial and poisson. Score equations and score
        contributions always use a dispersion of 1.
    prior_weights, y, fitted_mu, eta : ndarray, shape (n,)
    design : DesignMatrix
    family : Family
    converged : bool
    iterations : int
    deviance : float
    """

    coefficients: np.ndarray
    vcov: np.ndarray
    scale: float
    prior_weights: np.ndarray
    y: np.ndarray
    fitted_mu: np.ndarray
    eta: np.ndarray
    design: DesignMatrix
    family: Family
    converged: bool
    iterations: int
    deviance: float

    dispersion = 1.0

    @property
    def X(self) -> np.ndarray:
        return self.design.matrix

    @property
    def column_names(self):
        return self.design.column_names

    @property
    def formula(self) -> FormulaAst:
        return self.design.builder.ast

    @property
    def n(self):
        return len(self.y)

    def coef(self, name):
        return float(self.coefficients[self.design.index(name)])

    def summary(self):
        se = np.sqrt(np.diag(self.vcov))
        lines = [f"{self.family.name}/{self.family.link_name} fit, n={self.n}, deviance={self.deviance:.6g}"]
        width = max(len(c) for c in self.column_names)
        for name, b, s in zip(self.column_names, self.coefficients, se):
            lines.append(f"  {name:<{width}}  {b: .6g}  ({s:.4g})")
        return "\n".join(lines)


def _wls(X, z, ww):
    """Solve the working weighted least squares problem by pivoted QR.

    Returns the coefficients and the unpivoted inverse of ``X' W X``.
    """
    sw = np.sqrt(ww)
    if not (np.all(np.isfinite(sw)) and np.all(np.isfinite(z))):
        raise FitError("non-finite working weights or working response")
    Q, R, piv = scipy.linalg.qr(X * sw[:, None], mode="economic", pivoting=True,
                                check_finite=False)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0 or np.any(d < RANK_TOL * d[0]):
        raise RankDeficientError(
            f"weighted design is rank deficient (rank < {X.shape[1]})"
        )
    beta_piv = scipy.linalg.solve_triangular(R, Q.T @ (z * sw), check_finite=False)
    beta = np.empty_like(beta_piv)
    beta[piv] = beta_piv
    Rinv = scipy.linalg.solve_triangular(R, np.eye(R.shape[0]), check_finite=False)
    cov_piv = Rinv @ Rinv.T
    cov = np.empty_like(cov_piv)
    cov[np.ix_(piv, piv)] = cov_piv
    return beta, cov


def _start_mu(family, y, w):
    if family.name == "binomial":
        return (w * y + 0.5) / (w + 1.0)
    if family.name == "poisson":
        return y + 0.1
    if family.name in ("gamma", "inverse_gaussian"):
        return np.maximum(y, 1e-8)
    return y.copy()


def _working_quantities(family, y, eta, mu, w):
    mu_eta = family.mu_eta(eta)
    mu_c = np.clip(mu, _PROB_CLAMP, 1 - _PROB_CLAMP) if family.name == "binomial" else mu
    var = family.variance_fn(mu_c)
    z = eta + (y - mu_c) / mu_eta
    ww = w * mu_eta**2 / var
    return z, ww


def _admissible(family, eta, mu):
    return bool(np.all(family.valid_eta(eta)) and np.all(family.valid_mu(mu)))


def fit(
    design: DesignMatrix,
    y,
    family: Family,
    prior_weights=None,
    *,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    raise_on_failure: bool = True,
) -> GlmFit:
    """Fit a GLM by IRLS with prior observation weights.

    Convergence requires both the relative deviance change and the largest
    relative coefficient change to fall below ``tol``. Steps that leave the
    admissible region of the family are halved up to 20 times.

    Raises
    ------
    RankDeficientError
        The working-weighted design is singular.
    ConvergenceError
        No convergence within ``max_iter`` iterations, or step-halving
        exhausted (only when ``raise_on_failure``).
    """
    X = np.asarray(design.matrix, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = np.ones(n) if prior_weights is None else np.asarray(prior_weights, dtype=float)
    if y.shape != (n,) or w.shape != (n,):
        raise DataError("y and prior_weights must have one entry per design row")
    if np.any(w < 0) or not np.any(w > 0) or not np.all(np.isfinite(w)):
        raise DataError("prior weights must be finite, nonnegative and not all zero")
    if not np.all(family.valid_y(y[w > 0])):
        raise DataError(f"response outside the support of the {family.name} family")
    if p > int(np.sum(w > 0)):
        raise RankDeficientError(f"{p} coefficients but only {int(np.sum(w > 0))} weighted rows")

    mu = _start_mu(family, y, w)
    eta = family.link(mu)
    dev_old = family.deviance(y, mu, w)
    coef_old = None
    coef = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z, ww = _working_quantities(family, y, eta, mu, w)
        coef, _ = _wls(X, z, ww)
        eta_new = X @ coef
        mu_new = family.inv_link(eta_new)
        dev = family.deviance(y, mu_new, w) if _admissible(family, eta_new, mu_new) else np.inf

        if not np.isfinite(dev):
            if coef_old is None:
                coef_old = _fallback_start(X, y, w, family)
            for _ in range(MAX_HALVINGS):
                coef = 0.5 * (coef + coef_old)
                eta_new = X @ coef
                mu_new = family.inv_link(eta_new)
                if _admissible(family, eta_new, mu_new):
                    dev = family.deviance(y, mu_new, w)
                    if np.isfinite(dev):
                        break
            else:
                msg = "step-halving exhausted: no admissible step for this family"
                if raise_on_failure:
                    raise ConvergenceError(msg, coef_old, it)
                log.warning(msg)
                coef = coef_old
                break
            log.debug("IRLS iteration %d: step halved into admissible region", it)

        eta, mu = eta_new, mu_new
        dev_change = abs(dev - dev_old) / (abs(dev) + 0.1)
        if coef_old is not None:
            coef_change = np.max(np.abs(coef - coef_old) / (np.abs(coef) + 0.1))
            if dev_change < tol and coef_change < tol:
                converged = True
                break
        dev_old = dev
        coef_old = coef

    if not converged:
        msg = f"IRLS did not converge in {max_iter} iterations"
        if raise_on_failure:
            raise ConvergenceError(msg, coef, it)
        log.warning(msg)

    eta = X @ coef
    mu = family.inv_link(eta)
    _, ww = _working_quantities(family, y, eta, mu, w)
    _, cov_unscaled = _wls(X, np.zeros(n), ww)
    scale = 1.0
    if family.estimate_dispersion:
        df = int(np.sum(w > 0)) - p
        resid = y - mu
        pearson = np.sum(w * resid**2 / family.variance_fn(mu))
        scale = float(pearson / df) if df > 0 else float("nan")
    return GlmFit(
        coefficients=coef,
        vcov=cov_unscaled * scale,
        scale=scale,
        prior_weights=w,
        y=y,
        fitted_mu=mu,
        eta=eta,
        design=design,
        family=family,
        converged=converged,
        iterations=it,
        deviance=family.deviance(y, mu, w),
    )


def _fallback_start(X, y, w, family):
    """Intercept-only coefficients at the weighted mean response."""
    ybar = np.sum(w * y) / np.sum(w)
    if family.name == "binomial":
        ybar = min(max(ybar, 1e-6), 1 - 1e-6)
    coef = np.zeros(X.shape[1])
    intercept = np.flatnonzero(np.all(X == 1.0, axis=0))
    if intercept.size == 0:
        raise ConvergenceError("no admissible starting point (design lacks an intercept)")
    coef[intercept[0]] = float(family.link(np.array([ybar]))[0])
    return coef


def fit_formula(formula, ds: Dataset, family: Family, prior_weights=None, **kwargs) -> GlmFit:
    """Parse ``formula`` (text or AST), build its design on ``ds`` and fit."""
    ast = parse(formula) if isinstance(formula, str) else formula
    design = build_design(ast, ds)
    return fit(design, response_vector(ast, ds), family, prior_weights, **kwargs)


def predict(fit: GlmFit, ds: Dataset | None = None, scale: str = "response") -> np.ndarray:
    """Predictions on ``ds`` (or the training data) on the response or link scale."""
    if scale not in ("response", "link"):
        raise ValueError("scale must be 'response' or 'link'")
    if ds is None:
        eta = fit.eta
    else:
        eta = rebuild(fit.design, ds) @ fit.coefficients
    return fit.family.inv_link(eta) if scale == "response" else eta


def score_contributions(fit: GlmFit) -> np.ndarray:
    """Per-observation weighted score rows (dispersion fixed at 1).

    Row i is ``w_i (y_i - mu_i) f_i x_i`` with ``f_i = 1`` for canonical links
    and ``mu_eta(eta_i) / v(mu_i)`` otherwise.
    """
    resid = fit.prior_weights * (fit.y - fit.fitted_mu)
    if not fit.family.canonical:
        resid = resid * fit.family.mu_eta(fit.eta) / fit.family.variance_fn(fit.fitted_mu)
    return resid[:, None] * fit.X


def mu_eta_check(family: Family, eta_grid, h: float = 1e-5) -> float:
    """Largest gap between ``mu_eta`` and a central difference of ``inv_link``."""
    eta = np.asarray(eta_grid, dtype=float)
    fd = (family.inv_link(eta + h) - family.inv_link(eta - h)) / (2 * h)
    return float(np.max(np.abs(family.mu_eta(eta) - fd)))

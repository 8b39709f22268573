"""Average treatment effect estimators.

* IPTW-GLM: outcome GLM fit with propensity weights, then standardised
  (averaged over the observed covariates with the exposure set to 1 and 0).
* AIPW: unweighted outcome model predictions combined with propensity
  weights in an augmented weighted average.
* Unweighted standardisation (plain g-formula) for reference.

All estimators run on a :class:`PreparedData`, which holds the design
matrices for one dataset. Row resamples are taken on the prepared matrices
directly, so bootstrap replicates never re-parse formulas.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, DrglmError
from .families import Family, binomial
from .formula import DesignMatrix, FormulaAst, build_design, parse, rebuild, response_vector
from .glm import GlmFit, fit, predict
from .propensity import IptWeights, PropensityFit, make_weights
from .tabular import Dataset, override_exposure

METHODS = ("iptw_glm_standardized", "aipw_shared", "aipw_stratified", "unweighted_standardized")


@dataclass(frozen=True)
class AteEstimate:
    """Point estimate of E[Y(1)] - E[Y(0)] with optional inference."""

    psi1: float
    psi0: float
    method: str
    se: float | None = None
    ci: tuple | None = None
    inference: str | None = None
    exposure_coef: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ate(self) -> float:
        return self.psi1 - self.psi0

    def with_inference(self, se, ci, kind, **extra) -> "AteEstimate":
        merged = dict(self.extra)
        merged.update(extra)
        return replace(self, se=se, ci=tuple(ci), inference=kind, extra=merged)

    def to_record(self) -> dict:
        rec = {
            "method": self.method,
            "psi1": self.psi1,
            "psi0": self.psi0,
            "ate": self.ate,
            "se": self.se,
            "ci": list(self.ci) if self.ci is not None else None,
            "inference": self.inference,
        }
        if self.exposure_coef is not None:
            rec["exposure_coef"] = self.exposure_coef
        rec.update(self.extra)
        return rec

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_record(), **kwargs)


def _ast(formula) -> FormulaAst:
    return parse(formula) if isinstance(formula, str) else formula


def _subset_design(design: DesignMatrix, idx) -> DesignMatrix:
    return DesignMatrix(design.matrix[idx], design.column_names, design.builder)


@dataclass(frozen=True)
class PreparedData:
    """Design matrices for one dataset, an outcome formula and a PS formula.

    ``out_x1`` and ``out_x0`` are the outcome design rebuilt on the data with
    the exposure set to 1 and 0. When the outcome formula omits the exposure
    (stratified AIPW) they equal the observed design.
    """

    data: Dataset
    exposure: str
    outcome: str
    ps_design: DesignMatrix
    out_design: DesignMatrix
    out_x1: np.ndarray
    out_x0: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def build(cls, ds: Dataset, outcome_formula, ps_formula) -> "PreparedData":
        out_ast, ps_ast = _ast(outcome_formula), _ast(ps_formula)
        exposure = ps_ast.response
        x = response_vector(ps_ast, ds)
        if not np.all(np.isin(x, (0.0, 1.0))):
            raise DataError(f"exposure {exposure!r} must be coded 0/1")
        ps_design = build_design(ps_ast, ds)
        out_design = build_design(out_ast, ds)
        if exposure in out_ast.variables():
            x1 = rebuild(out_design, override_exposure(ds, exposure, 1))
            x0 = rebuild(out_design, override_exposure(ds, exposure, 0))
        else:
            x1 = x0 = out_design.matrix
        return cls(ds, exposure, out_ast.response, ps_design, out_design, x1, x0, x,
                   response_vector(out_ast, ds))

    @property
    def n(self):
        return len(self.y)

    @property
    def outcome_has_exposure(self):
        return self.exposure in self.out_design.builder.ast.variables()

    def take(self, idx) -> "PreparedData":
        idx = np.asarray(idx)
        return PreparedData(
            self.data.take(idx),
            self.exposure,
            self.outcome,
            _subset_design(self.ps_design, idx),
            _subset_design(self.out_design, idx),
            self.out_x1[idx],
            self.out_x0[idx],
            self.x[idx],
            self.y[idx],
        )


@dataclass(frozen=True)
class FitBundle:
    """Everything the IPTW-GLM pipeline produced for one dataset."""

    outcome_fit: GlmFit
    propensity: PropensityFit
    weights: IptWeights
    prepared: PreparedData

    @property
    def exposure_name(self):
        return self.prepared.exposure

    @property
    def outcome_name(self):
        return self.prepared.outcome

    @property
    def data(self) -> Dataset:
        return self.prepared.data

    @property
    def phat(self):
        return self.weights.phat


def counterfactual_predictions(fit: GlmFit, ds: Dataset, exposure: str):
    """Response-scale predictions with the exposure set to 1 and to 0."""
    y1 = predict(fit, override_exposure(ds, exposure, 1))
    y0 = predict(fit, override_exposure(ds, exposure, 0))
    return y1, y0


def standardize(fit: GlmFit, ds: Dataset, exposure: str):
    """Return ``(psi1, psi0)``: unweighted means of counterfactual predictions.

    Prior weights of ``fit`` play no role in the average.
    """
    if exposure not in fit.formula.variables():
        raise DataError(f"exposure {exposure!r} is not in the outcome model")
    y1, y0 = counterfactual_predictions(fit, ds, exposure)
    return float(np.mean(y1)), float(np.mean(y0))


def _standardize_prepared(fit: GlmFit, prep: PreparedData):
    inv = fit.family.inv_link
    mu1 = inv(prep.out_x1 @ fit.coefficients)
    mu0 = inv(prep.out_x0 @ fit.coefficients)
    return float(np.mean(mu1)), float(np.mean(mu0))


def _exposure_coef(fit, exposure):
    try:
        return fit.coef(exposure)
    except ValueError:
        return None


def fit_propensity_prepared(prep: PreparedData) -> PropensityFit:
    g = fit(prep.ps_design, prep.x, binomial())
    return PropensityFit(g, g.fitted_mu, prep.exposure)


def iptw_glm_prepared(prep: PreparedData, family: Family, clamp: float | None = None):
    """IPTW-GLM on prepared designs; returns ``(AteEstimate, FitBundle)``."""
    if not prep.outcome_has_exposure:
        raise DataError(f"exposure {prep.exposure!r} must appear in the outcome formula")
    pf = fit_propensity_prepared(prep)
    weights = make_weights(pf, clamp)
    ofit = fit(prep.out_design, prep.y, family, weights.w)
    psi1, psi0 = _standardize_prepared(ofit, prep)
    est = AteEstimate(psi1, psi0, "iptw_glm_standardized",
                      exposure_coef=_exposure_coef(ofit, prep.exposure))
    return est, FitBundle(ofit, pf, weights, prep)


def iptw_glm_ate(ds: Dataset, outcome_formula, ps_formula, family: Family, *, clamp=None):
    """Doubly robust IPTW-GLM estimate of the ATE.

    Fits the logistic propensity model, forms inverse probability weights,
    fits the outcome GLM with those weights as prior weights, and
    standardises over the observed covariates. Double robustness holds for
    canonical links; other links are accepted but carry no such guarantee.

    Parameters
    ----------
    ds : Dataset
    outcome_formula, ps_formula : str or FormulaAst
        The propensity formula's response names the exposure, which must
        also appear in the outcome formula.
    family : Family
    clamp : float, optional
        Truncate propensities to ``[clamp, 1 - clamp]`` before weighting.

    Returns
    -------
    (AteEstimate, FitBundle)
    """
    return iptw_glm_prepared(PreparedData.build(ds, outcome_formula, ps_formula), family, clamp)


def unweighted_glm_ate(ds: Dataset, outcome_formula, exposure: str, family: Family) -> AteEstimate:
    """Plain g-formula: unweighted outcome GLM followed by standardisation."""
    ast = _ast(outcome_formula)
    ofit = fit(build_design(ast, ds), response_vector(ast, ds), family)
    psi1, psi0 = standardize(ofit, ds, exposure)
    return AteEstimate(psi1, psi0, "unweighted_standardized",
                       exposure_coef=_exposure_coef(ofit, exposure))


def _aipw_means(y, x, p, yhat1, yhat0):
    psi1 = np.mean(y * x / p - yhat1 * (x - p) / p)
    psi0 = np.mean(y * (1 - x) / (1 - p) + yhat0 * (x - p) / (1 - p))
    return float(psi1), float(psi0)


def aipw_prepared(prep: PreparedData, family: Family, mode: str = "stratified",
                  clamp: float | None = None) -> AteEstimate:
    pf = fit_propensity_prepared(prep)
    p = make_weights(pf, clamp).phat
    x, y = prep.x, prep.y
    if mode == "stratified":
        if prep.outcome_has_exposure:
            raise DataError("stratified AIPW needs an outcome formula without the exposure")
        coefs = {}
        for arm in (1, 0):
            rows = np.flatnonzero(x == arm)
            if rows.size == 0:
                raise DataError(f"exposure arm {arm} is empty")
            coefs[arm] = fit(_subset_design(prep.out_design, rows), y[rows], family).coefficients
        yhat1 = family.inv_link(prep.out_x1 @ coefs[1])
        yhat0 = family.inv_link(prep.out_x0 @ coefs[0])
    elif mode == "shared":
        if not prep.outcome_has_exposure:
            raise DataError("shared AIPW needs the exposure in the outcome formula")
        ofit = fit(prep.out_design, y, family)
        yhat1 = family.inv_link(prep.out_x1 @ ofit.coefficients)
        yhat0 = family.inv_link(prep.out_x0 @ ofit.coefficients)
    else:
        raise ValueError(f"unknown AIPW mode {mode!r}")
    psi1, psi0 = _aipw_means(y, x, p, yhat1, yhat0)
    return AteEstimate(psi1, psi0, f"aipw_{mode}")


def aipw_ate(ds: Dataset, outcome_formula, ps_formula, family: Family,
             mode: str = "stratified", *, clamp=None) -> AteEstimate:
    """Augmented IPW estimate with unweighted outcome model(s).

    ``mode="stratified"`` fits one outcome model per exposure arm (the
    outcome formula must then omit the exposure); ``mode="shared"`` fits a
    single model on all rows that includes the exposure.
    """
    return aipw_prepared(PreparedData.build(ds, outcome_formula, ps_formula), family, mode, clamp)


def aipw_from_weighted_fit(bundle: FitBundle) -> AteEstimate:
    """AIPW evaluated with the IPTW-weighted outcome fit's predictions.

    For canonical links the weighted score equations of the intercept and
    exposure columns make this coincide with standardisation up to solver
    precision; for other links it generally does not.
    """
    ofit = bundle.outcome_fit
    names = ofit.column_names
    if names[0] != "(Intercept)" or bundle.exposure_name not in names:
        raise DrglmError("outcome fit must contain intercept and exposure columns")
    if not np.array_equal(ofit.prior_weights, bundle.weights.w):
        raise DrglmError("outcome fit was not fit with the bundle's weights")
    yhat1, yhat0 = counterfactual_predictions(ofit, bundle.data, bundle.exposure_name)
    psi1, psi0 = _aipw_means(ofit.y, bundle.propensity.exposure, bundle.phat, yhat1, yhat0)
    return AteEstimate(psi1, psi0, "aipw_shared", extra={"outcome_weighted": True})

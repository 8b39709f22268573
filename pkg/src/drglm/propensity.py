"""Propensity score models and inverse-probability-of-treatment weights."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, PositivityError
from .families import binomial
from .formula import FormulaAst, parse
from .glm import GlmFit, fit_formula
from .tabular import Dataset


@dataclass(frozen=True)
class PropensityFit:
    """Logistic model for P(X=1 | Z) and its fitted probabilities."""

    glm: GlmFit
    phat: np.ndarray
    exposure_name: str

    @property
    def exposure(self) -> np.ndarray:
        return self.glm.y


@dataclass(frozen=True)
class IptWeights:
    """``w = X / phat + (1 - X) / (1 - phat)``; ``phat`` is after any clamping."""

    w: np.ndarray
    phat: np.ndarray
    source: PropensityFit


def _binary(values, name):
    if not np.all(np.isin(values, (0.0, 1.0))):
        raise DataError(f"exposure {name!r} must be coded 0/1")


def fit_propensity(ds: Dataset, formula) -> PropensityFit:
    """Unweighted logistic regression of the exposure on the formula's terms."""
    ast: FormulaAst = parse(formula) if isinstance(formula, str) else formula
    _binary(ds[ast.response].values, ast.response)
    g = fit_formula(ast, ds, binomial())
    return PropensityFit(g, g.fitted_mu, ast.response)


def make_weights(pf: PropensityFit, clamp: float | None = None) -> IptWeights:
    """Inverse probability of treatment weights.

    With ``clamp`` the fitted probabilities are first truncated to
    ``[clamp, 1 - clamp]``; without it, a probability of exactly 0 or 1 raises
    :class:`PositivityError`.
    """
    x = pf.exposure
    _binary(x, pf.exposure_name)
    p = np.asarray(pf.phat, dtype=float)
    if clamp is not None:
        if not 0 < clamp < 0.5:
            raise ValueError("clamp must lie in (0, 0.5)")
        p = np.clip(p, clamp, 1 - clamp)
    bad = np.flatnonzero((p <= 0) | (p >= 1))
    if bad.size:
        raise PositivityError(
            f"estimated propensity is 0 or 1 for {bad.size} rows (first: {bad[:10].tolist()})",
            bad.tolist(),
        )
    w = x / p + (1 - x) / (1 - p)
    return IptWeights(w, p, pf)


def weight_diagnostics(weights: IptWeights) -> dict:
    """Range, per-arm mean and Kish effective sample size of the weights."""
    x = weights.source.exposure
    out = {"min": float(weights.w.min()), "max": float(weights.w.max())}
    for arm in (0, 1):
        wa = weights.w[x == arm]
        out[f"n_{arm}"] = int(wa.size)
        out[f"mean_{arm}"] = float(wa.mean()) if wa.size else float("nan")
        out[f"ess_{arm}"] = float(wa.sum() ** 2 / np.sum(wa**2)) if wa.size else 0.0
    return out

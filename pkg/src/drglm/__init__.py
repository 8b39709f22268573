"""Doubly robust average treatment effects with weighted canonical-link GLMs.

Typical use::

    from drglm import read_csv, make_family, iptw_glm_ate, attach_influence

    ds = read_csv("births.csv")
    est, bundle = iptw_glm_ate(ds, "bwt ~ smoker * (race + age)", "smoker ~ race * age",
                               make_family("gaussian"))
    est = attach_influence(est, bundle)
"""
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DrglmError,
    FitError,
    FormulaSyntaxError,
    InferenceError,
    PositivityError,
    RankDeficientError,
    ScenarioError,
    SchemaError,
    UnsupportedFeatureError,
)
from .estimators import (
    AteEstimate,
    FitBundle,
    PreparedData,
    aipw_ate,
    aipw_from_weighted_fit,
    aipw_prepared,
    counterfactual_predictions,
    iptw_glm_ate,
    iptw_glm_prepared,
    standardize,
    unweighted_glm_ate,
)
from .families import Family, make_family
from .formula import DesignMatrix, build_design, parse, rebuild
from .glm import GlmFit, fit, fit_formula, predict, score_contributions
from .inference import (
    BootstrapResult,
    InfluenceDecomposition,
    attach_bootstrap,
    attach_influence,
    bootstrap_ci,
    bootstrap_indices,
    influence_se,
    parameter_influence,
)
from .propensity import IptWeights, PropensityFit, fit_propensity, make_weights, weight_diagnostics
from .tabular import Column, Dataset, read_csv, write_csv

__version__ = "0.1.0"

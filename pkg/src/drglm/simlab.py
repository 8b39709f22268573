"""Monte Carlo laboratory: data-generating processes, scenarios and metrics.

Four covariate-driven generating processes share the same confounders and
treatment model::

    Z1 ~ N(0, 1),  Z2 ~ N(1, 1)
    X  ~ Bernoulli(expit(-0.4 + 0.4 Z1 + 0.28 Z1^2 + 0.4 Z2))
    eta = g0 + b X + g1 Z1 + g2 Q + g3 Z2        (Q = Z1^2 by default)
    Y  ~ F(q^{-1}(eta))

with ``F`` gaussian (variance 1), inverse gaussian (shape 2), poisson or
bernoulli and ``q`` the family's canonical link. A fifth process shows that
residual confounding cannot be adjusted away: two confounders ``V`` and
``C``, a propensity model that only uses ``V`` and an outcome model that
only uses ``C``.

A scenario pairs a process with an analysis (family, link, propensity and
outcome specification, estimators, inference) and is run over independent
replicates. Replicate ``r`` of a scenario with seed ``s`` draws its data from
``default_rng([s, r])`` and its bootstrap resamples from a stream derived
from the same pair, so any replicate can be rerun in isolation.
"""
from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DrglmError, ScenarioError
from .estimators import PreparedData, aipw_prepared, iptw_glm_prepared
from .families import Family, make_family
from .inference import MODES, bootstrap_indices, default_threads, influence_se
from .tabular import Dataset

log = logging.getLogger(__name__)

DGPS = ("gaussian", "inverse_gaussian", "poisson", "bernoulli", "residual_confounding")

# (g0, b, g1, g2, g3)
COEFFICIENTS = {
    "gaussian": (-2.0, 2.0, 1.0, 0.4, 1.5),
    "inverse_gaussian": (50.0, 200.0, 4.0, 10.0, 5.0),
    "poisson": (0.0, 2.0, 0.1, 0.05, 0.4),
    "bernoulli": (-2.0, 2.0, 1.0, 1.0, 4.0),
}

# (family, link) used to analyse each process unless overridden
DEFAULT_ANALYSIS = {
    "gaussian": ("gaussian", "identity"),
    "inverse_gaussian": ("inverse_gaussian", "inverse_squared"),
    "poisson": ("poisson", "log"),
    "bernoulli": ("binomial", "logit"),
    "residual_confounding": ("gaussian", "identity"),
}

SPECS = ("correct", "misspecified")
ESTIMATORS = ("iptw_glm", "aipw")
INFERENCE = ("bootstrap", "influence")
QUADRATIC = ("z1", "z2")

# row labels keyed by (ps_spec, outcome_spec)
CELL_LABELS = {
    ("correct", "misspecified"): "wrong outcome right weights",
    ("misspecified", "correct"): "right outcome wrong weights",
    ("misspecified", "misspecified"): "both wrong",
    ("correct", "correct"): "right both",
}
CELLS = {label: key for key, label in CELL_LABELS.items()}

_GENERATION_LABELS = {
    "gaussian": "linear",
    "inverse_gaussian": "inverse gaussian",
    "poisson": "log poisson",
    "bernoulli": "logit binomial",
    "residual_confounding": "residual confounding",
}
_ANALYSIS_LABELS = {
    ("gaussian", "identity"): "ols",
    ("poisson", "log"): "poisson",
    ("binomial", "logit"): "logit binomial",
    ("binomial", "log"): "log binomial",
    ("inverse_gaussian", "inverse_squared"): "inverse gaussian",
}

_PS_EXPIT = (-0.4, 0.4, 0.28, 0.4)
_RESIDUAL = {"p_v": 0.35, "ps": (-0.4, 4.0, 0.28, 0.4), "outcome": (-2.0, 2.0, 1.0, 4.5)}
_IG_SHAPE = 2.0
_MAX_REDRAWS = 1000


def cell_label(ps_spec: str, outcome_spec: str) -> str:
    return CELL_LABELS[(ps_spec, outcome_spec)]


def section_label(dgp: str, family: str, link: str) -> str:
    analysis = _ANALYSIS_LABELS.get((family, link), f"{family} ({link})")
    return f"Generation: {_GENERATION_LABELS[dgp]}; analysis: {analysis} weighted standardized"


def _check_dgp(dgp):
    if dgp not in DGPS:
        raise ConfigError(f"unknown dgp {dgp!r}; choose from {DGPS}")


def _coefficients(dgp, coefficients):
    if coefficients is None:
        return COEFFICIENTS[dgp]
    coefficients = tuple(float(c) for c in coefficients)
    if len(coefficients) != 5:
        raise ConfigError("coefficients must be (g0, b, g1, g2, g3)")
    return coefficients


def _linear_predictor(coefs, x, z1, z2, quadratic):
    g0, b, g1, g2, g3 = coefs
    q = z1**2 if quadratic == "z1" else z2**2
    return g0 + b * x + g1 * z1 + g2 * q + g3 * z2


def _draw_covariates(rng, n):
    z1 = rng.standard_normal(n)
    z2 = rng.normal(1.0, 1.0, n)
    a0, a1, a2, a3 = _PS_EXPIT
    x = rng.binomial(1, expit(a0 + a1 * z1 + a2 * z1**2 + a3 * z2)).astype(float)
    return z1, z2, x


def _generate(dgp, n, rng, coefficients=None, quadratic="z1"):
    """Return ``(dataset, redrawn_rows)``."""
    _check_dgp(dgp)
    if dgp == "residual_confounding":
        v = rng.binomial(1, _RESIDUAL["p_v"], n).astype(float)
        c = rng.standard_normal(n)
        a0, a1, a2, a3 = _RESIDUAL["ps"]
        x = rng.binomial(1, expit(a0 + a1 * c + a2 * c**2 + a3 * v)).astype(float)
        b0, b1, b2, b3 = _RESIDUAL["outcome"]
        y = b0 + b1 * x + b2 * c + b3 * v
        return Dataset.from_dict({"v": v, "c": c, "x": x, "y": y}), 0

    coefs = _coefficients(dgp, coefficients)
    if quadratic not in QUADRATIC:
        raise ConfigError(f"quadratic must be one of {QUADRATIC}")
    z1, z2, x = _draw_covariates(rng, n)
    eta = _linear_predictor(coefs, x, z1, z2, quadratic)
    redrawn = 0
    if dgp == "inverse_gaussian":
        # the mean eta^(-1/2) needs eta > 0; offending draws are redrawn whole
        for _ in range(_MAX_REDRAWS):
            bad = np.flatnonzero(eta <= 0)
            if bad.size == 0:
                break
            redrawn += bad.size
            z1[bad], z2[bad], x[bad] = _draw_covariates(rng, bad.size)
            eta[bad] = _linear_predictor(coefs, x[bad], z1[bad], z2[bad], quadratic)
        else:
            raise DrglmError("inverse gaussian linear predictor stays non-positive")
        if redrawn:
            log.info("redrew %d inverse gaussian draws with non-positive eta", redrawn)
        y = rng.wald(eta**-0.5, _IG_SHAPE)
    elif dgp == "gaussian":
        y = eta + rng.standard_normal(n)
    elif dgp == "poisson":
        y = rng.poisson(np.exp(eta)).astype(float)
    else:
        y = rng.binomial(1, expit(eta)).astype(float)
    return Dataset.from_dict({"z1": z1, "z2": z2, "x": x, "y": y}), redrawn


def generate(dgp: str, n: int, rng: np.random.Generator, *, coefficients=None,
             quadratic: str = "z1") -> Dataset:
    """Draw ``n`` rows from a data-generating process.

    Parameters
    ----------
    dgp : {"gaussian", "inverse_gaussian", "poisson", "bernoulli", "residual_confounding"}
    n : int
    rng : numpy.random.Generator
    coefficients : tuple of 5 floats, optional
        ``(g0, b, g1, g2, g3)``; defaults to :data:`COEFFICIENTS`.
    quadratic : {"z1", "z2"}
        Which covariate's square carries ``g2``.

    Returns
    -------
    Dataset
        Columns ``z1, z2, x, y`` (or ``v, c, x, y`` for residual confounding).
    """
    return _generate(dgp, n, rng, coefficients, quadratic)[0]


# -- true effects -----------------------------------------------------------

@dataclass(frozen=True)
class DgpTruth:
    """True ATE of a process with its provenance.

    ``provenance`` is ``"analytic"`` (``mc_se`` is 0) or ``"monte_carlo"``.
    """

    dgp: str
    coefficients: tuple
    quadratic: str
    value: float
    provenance: str
    reps: int = 0
    mc_se: float = 0.0


def _normal_quad_mgf(a, b, m):
    # E exp(aZ + bZ^2) for Z ~ N(m, 1), b < 1/2
    return math.exp(a * m + b * m * m + (a + 2 * b * m) ** 2 / (2 * (1 - 2 * b))) / math.sqrt(1 - 2 * b)


def poisson_true_ate(coefficients=None, quadratic="z1") -> float:
    """Closed form of E[exp(eta | X=1)] - E[exp(eta | X=0)] for the poisson process."""
    g0, b, g1, g2, g3 = _coefficients("poisson", coefficients)
    if quadratic == "z1":
        base = _normal_quad_mgf(g1, g2, 0.0) * _normal_quad_mgf(g3, 0.0, 1.0)
    else:
        base = _normal_quad_mgf(g1, 0.0, 0.0) * _normal_quad_mgf(g3, g2, 1.0)
    return math.exp(g0) * base * (math.exp(b) - 1.0)


def _mc_contrast(dgp, coefs, quadratic, reps, seed, chunk=1_000_000):
    rng = np.random.default_rng(seed)
    total = total_sq = 0.0
    done = n_used = 0
    while done < reps:
        m = min(chunk, reps - done)
        z1 = rng.standard_normal(m)
        z2 = rng.normal(1.0, 1.0, m)
        eta1 = _linear_predictor(coefs, 1.0, z1, z2, quadratic)
        eta0 = _linear_predictor(coefs, 0.0, z1, z2, quadratic)
        if dgp == "inverse_gaussian":
            # covariates with a non-positive eta in either arm are redrawn by
            # the generator, so they are excluded here as well
            ok = (eta1 > 0) & (eta0 > 0)
            diff = eta1[ok] ** -0.5 - eta0[ok] ** -0.5
        elif dgp == "bernoulli":
            diff = expit(eta1) - expit(eta0)
        elif dgp == "poisson":
            diff = np.exp(eta1) - np.exp(eta0)
        else:
            diff = eta1 - eta0
        total += diff.sum()
        total_sq += np.sum(diff**2)
        done += m
        n_used += diff.size
    mean = total / n_used
    var = max(total_sq / n_used - mean**2, 0.0)
    return mean, math.sqrt(var / n_used)


def true_ate(dgp: str, reps: int = 2_000_000, *, seed: int = 20240601, coefficients=None,
             quadratic: str = "z1", analytic: bool = True):
    """True ATE of a process as ``(value, mc_se)``.

    The gaussian and residual-confounding processes are additive on the
    identity scale, so the ATE is the exposure coefficient exactly; the
    poisson ATE has a closed form. The others (and any process when
    ``analytic`` is false) average ``q^{-1}(eta | X=1) - q^{-1}(eta | X=0)``
    over ``reps`` covariate draws, reporting the Monte Carlo standard error.
    """
    _check_dgp(dgp)
    if dgp == "residual_confounding":
        return float(_RESIDUAL["outcome"][1]), 0.0
    coefs = _coefficients(dgp, coefficients)
    if analytic and dgp == "gaussian":
        return float(coefs[1]), 0.0
    if analytic and dgp == "poisson":
        return poisson_true_ate(coefs, quadratic), 0.0
    if reps < 1_000_000:
        raise ValueError("Monte Carlo truth needs at least 10^6 draws")
    mean, se = _mc_contrast(dgp, coefs, quadratic, reps, seed)
    return float(mean), float(se)


@functools.lru_cache(maxsize=64)
def dgp_truth(dgp: str, coefficients=None, quadratic: str = "z1", reps: int = 2_000_000) -> DgpTruth:
    """Cached :class:`DgpTruth` for a process."""
    value, se = true_ate(dgp, reps, coefficients=coefficients, quadratic=quadratic)
    analytic = dgp in ("gaussian", "poisson", "residual_confounding")
    coefs = tuple(_RESIDUAL["outcome"]) if dgp == "residual_confounding" else _coefficients(dgp, coefficients)
    return DgpTruth(dgp, coefs, quadratic, value, "analytic" if analytic else "monte_carlo",
                    0 if analytic else reps, se)


# -- formulas ---------------------------------------------------------------

def _covariate_terms(dgp, which, spec, quadratic):
    if dgp == "residual_confounding":
        if which == "ps":
            return ["c", "I(c^2)", "v"] if spec == "correct" else ["v"]
        return ["c", "v"] if spec == "correct" else ["c"]
    if spec == "misspecified":
        return ["z1"]
    if which == "ps":
        return ["z1", "I(z1^2)", "z2"]
    return ["z1", "I(z1^2)", "z2"] if quadratic == "z1" else ["z1", "z2", "I(z2^2)"]


def formulas(dgp: str, ps_spec: str, outcome_spec: str, *, quadratic: str = "z1",
             include_exposure: bool = True):
    """Return ``(outcome_formula, ps_formula)`` for one analysis cell.

    With ``include_exposure=False`` the outcome formula omits ``x`` (used for
    arm-specific outcome models).
    """
    out_terms = _covariate_terms(dgp, "outcome", outcome_spec, quadratic)
    if include_exposure:
        out_terms = ["x"] + out_terms
    ps_terms = _covariate_terms(dgp, "ps", ps_spec, quadratic)
    return "y ~ " + " + ".join(out_terms), "x ~ " + " + ".join(ps_terms)


# -- scenarios --------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of a simulation grid.

    ``family`` and ``link`` are names (see :func:`drglm.families.make_family`)
    so specs stay hashable and cheap to pass between workers; the resolved
    family is :attr:`analysis_family`. Inference applies to the IPTW-GLM
    estimator.
    """

    dgp: str
    n: int = 2000
    replicates: int = 500
    family: str | None = None
    link: str | None = None
    ps_spec: str = "correct"
    outcome_spec: str = "correct"
    estimators: tuple = ("iptw_glm",)
    inference: tuple = ()
    seed: int = 0
    B: int = 250
    if_mode: str = "supplement_compatible"
    aipw_mode: str = "stratified"
    quadratic: str = "z1"
    coefficients: tuple | None = None
    truth_reps: int = 2_000_000
    label: str | None = None

    def __post_init__(self):
        _check_dgp(self.dgp)
        fam, link = DEFAULT_ANALYSIS[self.dgp]
        if self.family is None:
            object.__setattr__(self, "family", fam)
            if self.link is None:
                object.__setattr__(self, "link", link)
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "inference", tuple(self.inference))
        if self.coefficients is not None:
            object.__setattr__(self, "coefficients", _coefficients(self.dgp, self.coefficients))
        if int(self.replicates) < 1:
            raise ConfigError("replicates must be at least 1")
        if int(self.n) < 10:
            raise ConfigError("n must be at least 10")
        for name, value in (("ps_spec", self.ps_spec), ("outcome_spec", self.outcome_spec)):
            if value not in SPECS:
                raise ConfigError(f"{name} must be one of {SPECS}, got {value!r}")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise ConfigError(f"estimators must be a nonempty subset of {ESTIMATORS}")
        bad = set(self.inference) - set(INFERENCE)
        if bad:
            raise ConfigError(f"unknown inference {sorted(bad)}; choose from {INFERENCE}")
        if self.inference and "iptw_glm" not in self.estimators:
            raise ConfigError("inference requires the iptw_glm estimator")
        if self.if_mode not in MODES:
            raise ConfigError(f"if_mode must be one of {MODES}")
        if self.aipw_mode not in ("stratified", "shared"):
            raise ConfigError("aipw_mode must be 'stratified' or 'shared'")
        if self.quadratic not in QUADRATIC:
            raise ConfigError(f"quadratic must be one of {QUADRATIC}")
        if "bootstrap" in self.inference and self.B < 2:
            raise ConfigError("B must be at least 2")
        try:
            self.analysis_family
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def analysis_family(self) -> Family:
        return make_family(self.family, self.link)

    @property
    def cell(self) -> str:
        return cell_label(self.ps_spec, self.outcome_spec)

    @property
    def section(self) -> str:
        return section_label(self.dgp, self.analysis_family.name, self.analysis_family.link_name)

    def formulas(self, include_exposure=True):
        return formulas(self.dgp, self.ps_spec, self.outcome_spec,
                        quadratic=self.quadratic, include_exposure=include_exposure)

    def truth(self) -> DgpTruth:
        return dgp_truth(self.dgp, self.coefficients, self.quadratic, self.truth_reps)


@dataclass(frozen=True)
class ReplicateResult:
    """Outcome of one replicate; ``error`` is set when it failed."""

    index: int
    estimates: dict = field(default_factory=dict)
    boot_ci: tuple | None = None
    boot_failures: int = 0
    if_se: float | None = None
    eif_se: float | None = None
    if_ci: tuple | None = None
    redrawn: int = 0
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


def _bootstrap_seed(seed, index):
    # independent of the data stream default_rng([seed, index])
    return int(np.random.SeedSequence([seed, index, 0xB0075]).generate_state(1, np.uint64)[0])


def run_replicate(spec: ScenarioSpec, index: int) -> ReplicateResult:
    """Run replicate ``index`` of ``spec``; a pure function of its arguments."""
    rng = np.random.default_rng([spec.seed, index])
    fam = spec.analysis_family
    try:
        ds, redrawn = _generate(spec.dgp, spec.n, rng, spec.coefficients, spec.quadratic)
        out_f, ps_f = spec.formulas()
        estimates = {}
        boot_ci = if_se = eif_se = if_ci = None
        boot_failures = 0
        if "iptw_glm" in spec.estimators:
            prep = PreparedData.build(ds, out_f, ps_f)
            est, bundle = iptw_glm_prepared(prep, fam)
            estimates["iptw_glm"] = est.ate
            if "influence" in spec.inference:
                dec = influence_se(bundle, spec.if_mode)
                if_se, eif_se, if_ci = dec.se, dec.eif_only_se, dec.ci()
            if "bootstrap" in spec.inference:
                res = bootstrap_indices(
                    prep.n, lambda idx: iptw_glm_prepared(prep.take(idx), fam)[0].ate,
                    spec.B, _bootstrap_seed(spec.seed, index), threads=1,
                )
                boot_ci, boot_failures = res.ci, res.failures
        if "aipw" in spec.estimators:
            include = spec.aipw_mode == "shared"
            a_out, _ = spec.formulas(include_exposure=include)
            prep_a = PreparedData.build(ds, a_out, ps_f)
            estimates["aipw"] = aipw_prepared(prep_a, fam, spec.aipw_mode).ate
    except DrglmError as exc:
        log.info("replicate %d failed: %s", index, exc)
        return ReplicateResult(index, error=f"{type(exc).__name__}: {exc}")
    return ReplicateResult(index, estimates, boot_ci, boot_failures, if_se, eif_se, if_ci, redrawn)


@dataclass(frozen=True)
class EstimatorSummary:
    """Replicate aggregates for one estimator.

    ``percent_bias`` is ``100 * (mean - true) / |true|``; ``mc_se_bias`` is
    the Monte Carlo standard error of ``bias`` (``sd / sqrt(R)``).
    Coverages are percentages of intervals containing the true value.
    """

    estimator: str
    n_ok: int
    mean: float
    bias: float
    percent_bias: float
    sd: float
    mc_se_bias: float
    coverage_boot: float | None = None
    coverage_if: float | None = None
    mean_if_se: float | None = None
    mean_eif_se: float | None = None

    @property
    def mc_se_percent_bias(self) -> float:
        return 100.0 * self.mc_se_bias


@dataclass(frozen=True)
class SimSummary:
    """Aggregated results of a scenario.

    The scalar properties (``percent_bias``, ``sd``, ...) refer to the first
    estimator in ``spec.estimators``.
    """

    spec: ScenarioSpec
    truth: DgpTruth
    estimators: dict
    failures: int
    redrawn: int
    results: tuple = ()

    @property
    def primary(self) -> EstimatorSummary:
        return self.estimators[self.spec.estimators[0]]

    @property
    def percent_bias(self):
        return self.primary.percent_bias

    @property
    def bias(self):
        return self.primary.bias

    @property
    def sd(self):
        return self.primary.sd

    @property
    def coverage_boot(self):
        return self.primary.coverage_boot

    @property
    def coverage_if(self):
        return self.primary.coverage_if

    @property
    def label(self):
        return self.spec.label or self.spec.cell

    def records(self) -> list:
        """Flat per-estimator rows for CSV output."""
        rows = []
        for name, s in self.estimators.items():
            rows.append({
                "section": self.spec.section,
                "type": self.label,
                "dgp": self.spec.dgp,
                "family": self.spec.analysis_family.name,
                "link": self.spec.analysis_family.link_name,
                "ps_spec": self.spec.ps_spec,
                "outcome_spec": self.spec.outcome_spec,
                "estimator": name,
                "n": self.spec.n,
                "replicates": self.spec.replicates,
                "failures": self.failures,
                "true_value": self.truth.value,
                "mean": s.mean,
                "bias": s.bias,
                "percent_bias": s.percent_bias,
                "sd": s.sd,
                "coverage_boot": s.coverage_boot,
                "coverage_if": s.coverage_if,
                "mean_if_se": s.mean_if_se,
                "mean_eif_se": s.mean_eif_se,
                "seed": self.spec.seed,
                "B": self.spec.B if "bootstrap" in self.spec.inference else None,
            })
        return rows


def _coverage(cis, truth):
    if not cis:
        return None
    hits = sum(lo <= truth <= hi for lo, hi in cis)
    return 100.0 * hits / len(cis)


def summarize(spec: ScenarioSpec, results, truth: DgpTruth | None = None) -> SimSummary:
    """Aggregate replicate results (order does not matter)."""
    truth = spec.truth() if truth is None else truth
    results = tuple(sorted(results, key=lambda r: r.index))
    ok = [r for r in results if r.ok]
    per = {}
    for name in spec.estimators:
        vals = np.array([r.estimates[name] for r in ok])
        if vals.size == 0:
            nan = float("nan")
            per[name] = EstimatorSummary(name, 0, nan, nan, nan, nan, nan)
            continue
        mean = float(vals.mean())
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        bias = mean - truth.value
        kw = {}
        if name == "iptw_glm":
            if "bootstrap" in spec.inference:
                kw["coverage_boot"] = _coverage([r.boot_ci for r in ok], truth.value)
            if "influence" in spec.inference:
                kw["coverage_if"] = _coverage([r.if_ci for r in ok], truth.value)
                kw["mean_if_se"] = float(np.mean([r.if_se for r in ok]))
                kw["mean_eif_se"] = float(np.mean([r.eif_se for r in ok]))
        per[name] = EstimatorSummary(
            name, int(vals.size), mean, bias, 100.0 * bias / abs(truth.value), sd,
            sd / math.sqrt(vals.size), **kw,
        )
    return SimSummary(spec, truth, per, len(results) - len(ok),
                      sum(r.redrawn for r in results), results)


MAX_FAILURE_FRACTION = 0.01


def run_scenario(spec: ScenarioSpec, *, threads: int | None = None, strict: bool = True) -> SimSummary:
    """Run every replicate of ``spec`` and aggregate.

    Failed replicates are counted in ``SimSummary.failures``. With ``strict``
    (the default) more than 1% failures raise :class:`ScenarioError`, whose
    ``summary`` attribute holds the aggregate over the successful replicates.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    truth = spec.truth()
    indices = range(spec.replicates)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda i: run_replicate(spec, i), indices))
    else:
        results = [run_replicate(spec, i) for i in indices]
    summary = summarize(spec, results, truth)
    if summary.redrawn:
        log.info("%s: %d draws redrawn for admissibility", spec.cell, summary.redrawn)
    if strict and summary.failures > MAX_FAILURE_FRACTION * spec.replicates:
        first = next(r.error for r in summary.results if not r.ok)
        err = ScenarioError(
            f"{summary.failures} of {spec.replicates} replicates failed "
            f"({spec.section}; {spec.cell}); first error: {first}"
        )
        err.summary = summary
        raise err
    return summary


def grid(dgp: str, cells=None, **kwargs) -> list:
    """Specs for the given cell labels (default: all four) of one process."""
    cells = list(CELLS) if cells is None else list(cells)
    specs = []
    for label in cells:
        if label not in CELLS:
            raise ConfigError(f"unknown cell {label!r}; choose from {list(CELLS)}")
        ps, out = CELLS[label]
        specs.append(ScenarioSpec(dgp, ps_spec=ps, outcome_spec=out, **kwargs))
    return specs


# -- grids ------------------------------------------------------------------

EFFICIENCY_CELLS = ("wrong outcome right weights", "right outcome wrong weights", "both wrong")


@dataclass(frozen=True)
class EfficiencyRow:
    dgp: str
    n: int
    cell: str
    sd_iptw_glm: float
    sd_aipw: float


def run_efficiency_grid(ns=(100, 500, 1000, 2000), dgps=("gaussian", "bernoulli"), *,
                        cells=EFFICIENCY_CELLS, replicates=500, seed=0, threads=None,
                        **kwargs) -> list:
    """Replicate SDs of IPTW-GLM and AIPW across sample sizes and cells."""
    rows = []
    for dgp in dgps:
        for n in ns:
            for spec in grid(dgp, cells, n=n, replicates=replicates, seed=seed,
                             estimators=("iptw_glm", "aipw"), **kwargs):
                s = run_scenario(spec, threads=threads)
                rows.append(EfficiencyRow(dgp, n, spec.cell, s.estimators["iptw_glm"].sd,
                                          s.estimators["aipw"].sd))
    return rows


@dataclass(frozen=True)
class SeComparisonRow:
    dgp: str
    cell: str
    empirical_sd: float
    mean_eif_se: float
    mean_if_se: float


def run_se_comparison(dgps=("gaussian", "poisson", "bernoulli", "inverse_gaussian"), *,
                      cells=None, n=2000, replicates=500, seed=0, threads=None, **kwargs) -> list:
    """Empirical SD of IPTW-GLM estimates against the mean EIF-only and
    influence-function standard errors."""
    rows = []
    for dgp in dgps:
        for spec in grid(dgp, cells, n=n, replicates=replicates, seed=seed,
                         inference=("influence",), **kwargs):
            s = run_scenario(spec, threads=threads).primary
            rows.append(SeComparisonRow(dgp, spec.cell, s.sd, s.mean_eif_se, s.mean_if_se))
    return rows


def with_overrides(spec: ScenarioSpec, **changes) -> ScenarioSpec:
    return replace(spec, **changes)

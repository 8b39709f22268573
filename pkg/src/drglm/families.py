"""Exponential families and link functions.

Each :class:`Family` bundles a distribution's variance function with a link.
The canonical pairs are::

    binomial          logit
    gaussian          identity
    gamma             inverse          (1/mu)
    inverse_gaussian  inverse_squared  (1/mu^2)
    poisson           log

Only canonical pairs give score equations of the form
``X' diag(w) (y - mu) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy
from scipy.special import expit, logit as _logit

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Link:
    name: str
    link: Callable          # mu -> eta
    inv_link: Callable      # eta -> mu
    mu_eta: Callable        # d mu / d eta
    valid_eta: Callable


def _identity():
    return Link(
        "identity",
        lambda mu: np.asarray(mu, dtype=float),
        lambda eta: np.asarray(eta, dtype=float),
        lambda eta: np.ones_like(np.asarray(eta, dtype=float)),
        lambda eta: np.isfinite(eta),
    )


def _logit_link():
    def mu_eta(eta):
        p = expit(eta)
        return np.maximum(p * (1.0 - p), _EPS)

    def inv(eta):
        # expit rounds to exactly 0 or 1 beyond |eta| ~ 37; keep mu interior
        return np.clip(expit(eta), _EPS, 1.0 - _EPS)

    return Link("logit", _logit, inv, mu_eta, lambda eta: np.isfinite(eta))


def _log():
    def inv(eta):
        return np.maximum(np.exp(eta), _EPS)

    return Link("log", np.log, inv, inv, lambda eta: np.isfinite(eta))


def _inverse():
    return Link(
        "inverse",
        lambda mu: 1.0 / np.asarray(mu, dtype=float),
        lambda eta: 1.0 / np.asarray(eta, dtype=float),
        lambda eta: -1.0 / np.asarray(eta, dtype=float) ** 2,
        lambda eta: np.isfinite(eta) & (eta != 0),
    )


def _inverse_squared():
    def inv(eta):
        # eta <= 0 gives nan, which the admissibility check rejects
        with np.errstate(invalid="ignore", divide="ignore"):
            return 1.0 / np.sqrt(eta)

    return Link(
        "inverse_squared",
        lambda mu: 1.0 / np.asarray(mu, dtype=float) ** 2,
        inv,
        lambda eta: -1.0 / (2.0 * np.asarray(eta, dtype=float) ** 1.5),
        lambda eta: np.isfinite(eta) & (eta > 0),
    )


LINKS = {
    "identity": _identity,
    "logit": _logit_link,
    "log": _log,
    "inverse": _inverse,
    "inverse_squared": _inverse_squared,
}


def _binomial_dev(y, mu, w):
    # xlogy(0, .) is 0, covering y in {0, 1}
    return 2.0 * w * (xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu)))


def _poisson_dev(y, mu, w):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(y > 0, y * np.log(y / mu), 0.0)
    return 2.0 * w * (r - (y - mu))


_DISTRIBUTIONS = {
    # name: (variance, unit deviance, valid mu, valid y, canonical link, dispersion estimated)
    "gaussian": (
        lambda mu: np.ones_like(mu),
        lambda y, mu, w: w * (y - mu) ** 2,
        lambda mu: np.isfinite(mu),
        lambda y: np.isfinite(y),
        "identity",
        True,
    ),
    "binomial": (
        lambda mu: mu * (1.0 - mu),
        _binomial_dev,
        lambda mu: np.isfinite(mu) & (mu > 0) & (mu < 1),
        lambda y: (y >= 0) & (y <= 1),
        "logit",
        False,
    ),
    "poisson": (
        lambda mu: mu,
        _poisson_dev,
        lambda mu: np.isfinite(mu) & (mu > 0),
        lambda y: (y >= 0),
        "log",
        False,
    ),
    "gamma": (
        lambda mu: mu**2,
        lambda y, mu, w: -2.0 * w * (np.log(y / mu) - (y - mu) / mu),
        lambda mu: np.isfinite(mu) & (mu > 0),
        lambda y: y > 0,
        "inverse",
        True,
    ),
    "inverse_gaussian": (
        lambda mu: mu**3,
        lambda y, mu, w: w * (y - mu) ** 2 / (y * mu**2),
        lambda mu: np.isfinite(mu) & (mu > 0),
        lambda y: y > 0,
        "inverse_squared",
        True,
    ),
}


@dataclass(frozen=True)
class Family:
    """A distribution together with a link function.

    Attributes
    ----------
    name, link_name : str
    canonical : bool
        True exactly for the canonical (family, link) pairings.
    estimate_dispersion : bool
        Whether model-based covariance is scaled by a Pearson dispersion
        estimate (gaussian, gamma, inverse gaussian) or fixed at 1.
    """

    name: str
    link_name: str
    _link: Link
    variance: Callable
    unit_deviance: Callable
    valid_mu: Callable
    valid_y: Callable
    estimate_dispersion: bool

    @property
    def canonical(self) -> bool:
        return _DISTRIBUTIONS[self.name][4] == self.link_name

    def link(self, mu):
        return self._link.link(mu)

    def inv_link(self, eta):
        return self._link.inv_link(np.asarray(eta, dtype=float))

    def mu_eta(self, eta):
        return self._link.mu_eta(np.asarray(eta, dtype=float))

    def valid_eta(self, eta):
        return self._link.valid_eta(np.asarray(eta, dtype=float))

    def variance_fn(self, mu):
        return self.variance(np.asarray(mu, dtype=float))

    def deviance(self, y, mu, w):
        return float(np.sum(self.unit_deviance(y, mu, w)))

    def __repr__(self):
        return f"Family({self.name}/{self.link_name})"


def make_family(name: str, link: str | None = None) -> Family:
    """Look up a family by name, defaulting to its canonical link."""
    key = name.lower().replace("-", "_").replace(" ", "_")
    aliases = {"normal": "gaussian", "bernoulli": "binomial", "inverse.gaussian": "inverse_gaussian"}
    key = aliases.get(key, key)
    if key not in _DISTRIBUTIONS:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(_DISTRIBUTIONS)}")
    var, dev, vmu, vy, canon, disp = _DISTRIBUTIONS[key]
    link = canon if link is None else link.lower().replace("-", "_")
    if link == "1/mu^2":
        link = "inverse_squared"
    if link not in LINKS:
        raise ValueError(f"unknown link {link!r}; choose from {sorted(LINKS)}")
    return Family(key, link, LINKS[link](), var, dev, vmu, vy, disp)


CANONICAL = {name: spec[4] for name, spec in _DISTRIBUTIONS.items()}


def gaussian(link="identity"):
    return make_family("gaussian", link)


def binomial(link="logit"):
    return make_family("binomial", link)


def poisson(link="log"):
    return make_family("poisson", link)


def gamma(link="inverse"):
    return make_family("gamma", link)


def inverse_gaussian(link="inverse_squared"):
    return make_family("inverse_gaussian", link)

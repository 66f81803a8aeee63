"""Estimator-style wrappers (``fit`` / ``transform``) over the functional API."""

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .complexity import covering_profile
from .exceptions import InputError
from .measures import DiscreteMeasure, MarginalVector, ProductMeasure, as_product
from .shadow import DEFAULT_SUPPORT_CAP, compose_shadow


def check_p(p, name="p"):
    """Validate a Wasserstein order: a float ``>= 1`` or ``inf``."""
    try:
        p = float(p)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be a number", field=name) from exc
    if math.isnan(p) or p < 1.0:
        raise InputError(f"{name} must be >= 1 or inf, got {p!r}", field=name)
    return p


def check_marginals(mu):
    if isinstance(mu, DiscreteMeasure):
        mu = [mu]
    mu = MarginalVector(mu)
    if not len(mu):
        raise InputError("need at least one marginal", field="marginals")
    for i, m in enumerate(mu):
        if not isinstance(m, DiscreteMeasure):
            raise InputError(f"marginal {i} is not a DiscreteMeasure", field="marginals")
    return mu


def check_product(rho, block_dims=None):
    if isinstance(rho, ProductMeasure):
        if block_dims is not None and tuple(rho.block_dims) != tuple(block_dims):
            raise InputError(
                f"rho has blocks {rho.block_dims}, expected {tuple(block_dims)}", field="rho"
            )
        return rho
    if isinstance(rho, DiscreteMeasure):
        if block_dims is None:
            return as_product(rho)
        return ProductMeasure(rho, block_dims)
    raise InputError("rho must be a DiscreteMeasure or ProductMeasure", field="rho")


def check_is_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class ShadowProjector(TransformerMixin, BaseEstimator):
    """Project joint measures onto the couplings of fixed marginals.

    ``fit(mu)`` stores the marginals; ``transform(rho)`` returns the
    canonical shadow of ``rho`` and keeps the full result in ``result_``.
    """

    def __init__(self, p=2.0, support_cap=DEFAULT_SUPPORT_CAP):
        self.p = p
        self.support_cap = support_cap

    def fit(self, mu, y=None):
        check_p(self.p)
        self.marginals_ = check_marginals(mu)
        self.block_dims_ = tuple(m.dim for m in self.marginals_)
        return self

    def transform(self, rho):
        check_is_fitted(self, "marginals_")
        rho = check_product(rho, self.block_dims_)
        self.result_ = compose_shadow(rho, self.marginals_, check_p(self.p), self.support_cap)
        self.value_ = self.result_.value
        return self.result_.shadow

    def fit_transform(self, mu, rho=None):
        if rho is None:
            raise InputError("fit_transform needs both marginals and rho", field="rho")
        return self.fit(mu).transform(rho)


class CoveringDimension(BaseEstimator):
    """Covering-number dimension estimate of a point cloud or measure."""

    def __init__(self, epsilons=None, tau=0.0, norm_p=math.inf):
        self.epsilons = epsilons
        self.tau = tau
        self.norm_p = norm_p

    def fit(self, X, y=None):
        if self.tau > 0 and not hasattr(X, "weights"):
            raise InputError("tau > 0 needs a weighted measure", field="tau")
        data = X if hasattr(X, "atoms") else np.asarray(X, dtype=float)
        self.profile_ = covering_profile(data, self.epsilons, self.tau, self.norm_p)
        self.dimension_ = self.profile_.dimension
        self.slope_ = self.profile_.fit.slope
        return self


__all__ = [
    "ShadowProjector",
    "CoveringDimension",
    "check_p",
    "check_marginals",
    "check_product",
    "check_is_fitted",
]

"""Stability of the shadow: exponents, bounds and Hoelder-slope experiments.

Only constant-free statements are asserted here. The lower bound
``W_p(mu, nu) <= W_p(S(rho; mu), S(xi; nu))`` holds for every choice of
shadows, so it is checked exactly. Upper bounds carry unknown constants and
are only reported, or probed through log-log slopes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._fit import ols
from .exceptions import BoundViolation, ExperimentError, InputError
from .measures import (
    DiscreteMeasure,
    MarginalVector,
    MetricSpec,
    ProductMeasure,
    marginal_vector_distance,
)
from .ot_exact import barycentric_map, solve, solve_ot
from .shadow import compose_shadow, project_measure_distance

LOWER_SLACK = 1e-9


@dataclass(frozen=True)
class ThetaSpec:
    p: float
    delta: float
    theta: float


def theta_of(p, delta=0.01):
    """Hoelder exponent for the shadow/map stability bounds.

    For ``1 < p < 2`` any exponent below ``(p-1)^2 / (p(p+1))`` is admissible;
    ``delta`` picks ``(1 - delta)`` times that endpoint. For ``p >= 2`` the
    exponent is ``1 / (6(p-1))``.

    >>> theta_of(2).theta == 1 / 6
    True
    """
    p = float(p)
    if not p > 1.0:
        raise InputError(f"theta is defined for p > 1, got {p!r}", field="p")
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta must lie in (0, 1), got {delta!r}", field="delta")
    if p >= 2.0:
        theta = 1.0 / (6.0 * (p - 1.0))
    else:
        theta = (1.0 - delta) * (p - 1.0) ** 2 / (p * (p + 1.0))
    return ThetaSpec(p, delta, theta)


@dataclass(frozen=True)
class StabilityReport:
    p: float
    q: float
    lower: float
    observed: float
    rho_xi_term: float
    marginal_terms: tuple
    theta: ThetaSpec = None

    @property
    def slack_lower(self):
        return self.observed - self.lower

    @property
    def marginal_terms_pow(self):
        """``W_q(mu_i, nu_i)^theta``; the upper bound multiplies their sum by C."""
        if self.theta is None:
            return ()
        return tuple(t**self.theta.theta for t in self.marginal_terms)


def shadow_distance(a, b, p):
    """``W_p`` between two shadows (or any product measures)."""
    return project_measure_distance(a, b, p)


def stability_report(rho, xi, mu, nu, p, q, delta=0.01, check=True, shadows=None):
    """Compare canonical shadows ``S(rho; mu)`` and ``S(xi; nu)``.

    Raises :class:`BoundViolation` if the constant-free lower bound fails by
    more than ``1e-9`` and ``check`` is set.
    """
    if rho.block_dims != xi.block_dims:
        raise InputError("rho and xi have different block structures")
    mu, nu = MarginalVector(mu), MarginalVector(nu)
    spec = MetricSpec(p, rho.block_dims)
    if shadows is None:
        s_rho = compose_shadow(rho, mu, p).shadow
        s_xi = compose_shadow(xi, nu, p).shadow
    else:
        s_rho, s_xi = shadows
    lower = marginal_vector_distance(mu, nu, spec)
    observed = shadow_distance(s_rho, s_xi, p)
    rho_xi = shadow_distance(rho, xi, p)
    terms = tuple(
        solve(m, n, MetricSpec(q, (m.dim,))).value for m, n in zip(mu, nu)
    )
    theta = theta_of(p, delta) if p > 1 and not math.isinf(p) else None
    report = StabilityReport(float(p), float(q), lower, observed, rho_xi, terms, theta)
    if check and report.slack_lower < -LOWER_SLACK:
        raise BoundViolation(
            f"lower bound violated: W_p(mu, nu)={lower!r} > shadow distance {observed!r}"
        )
    return report


# -- smoothing -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SmoothingSpec:
    """Common-offset stencil: every atom is spread over ``atom + offsets``."""

    sigma: float
    offsets: np.ndarray
    norm_p: float = 2.0
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.sigma > 0:
            raise InputError("sigma must be positive", field="sigma")
        off = np.atleast_2d(np.asarray(self.offsets, dtype=float))
        if off.size == 0:
            raise InputError("stencil needs at least one offset", field="offsets")
        norms = np.linalg.norm(off, ord=self.norm_p, axis=1)
        if np.any(norms > self.sigma * (1 + 1e-12)):
            raise InputError("offsets must lie in the sigma ball", field="offsets")
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "weights", np.full(off.shape[0], 1.0 / off.shape[0]))

    @classmethod
    def axis(cls, sigma, dim):
        """The ``2 dim + 1`` offsets ``{0, +-sigma e_k}``."""
        eye = np.eye(dim) * sigma
        return cls(sigma, np.vstack([np.zeros((1, dim)), eye, -eye]))


def smooth(m, spec):
    """Convolve ``m`` with the stencil's uniform offset distribution."""
    if spec.offsets.shape[1] != m.atoms.shape[1]:
        raise InputError("stencil dimension does not match measure", field="offsets")
    atoms = (m.atoms[:, None, :] + spec.offsets[None, :, :]).reshape(-1, m.atoms.shape[1])
    w = np.multiply.outer(m.weights, spec.weights).reshape(-1)
    base = DiscreteMeasure(atoms, w)
    if isinstance(m, ProductMeasure):
        return ProductMeasure(base, m.block_dims)
    return base


# -- diagnostics -------------------------------------------------------------


@dataclass(frozen=True)
class RatioReport:
    numerator: float
    denominator: float
    ratio: float
    exact_zero: bool


def nonexpansive_diagnostic(rho, xi, mu, p, eps=1e-12):
    """``W_p(S(rho; mu), S(xi; mu)) / W_p(rho, xi)`` for the canonical shadows.

    Reported, not asserted: only *some* shadows are guaranteed non-expansive.
    """
    num = shadow_distance(compose_shadow(rho, mu, p).shadow, compose_shadow(xi, mu, p).shadow, p)
    den = shadow_distance(rho, xi, p)
    if den < eps:
        if num < eps:
            return RatioReport(num, den, 0.0, True)
        return RatioReport(num, den, math.inf, False)
    return RatioReport(num, den, num / den, False)


@dataclass(frozen=True)
class HolderFit:
    scales: tuple
    x: tuple
    y: tuple
    slope: float
    intercept: float
    r2: float
    theta: float = None

    @property
    def log_pairs(self):
        return list(zip(np.log(self.x), np.log(self.y)))


def _fit_pairs(scales, xs, ys, theta):
    order = np.argsort(scales, kind="stable")
    scales = [scales[k] for k in order]
    xs = [xs[k] for k in order]
    ys = [ys[k] for k in order]
    keep = [k for k in range(len(xs)) if xs[k] > 0 and ys[k] > 0]
    if len(keep) < 2:
        raise ExperimentError("fewer than two scales with nonzero distances")
    lx = np.log([xs[k] for k in keep])
    ly = np.log([ys[k] for k in keep])
    fit = ols(lx, ly)
    return HolderFit(
        tuple(scales[k] for k in keep),
        tuple(xs[k] for k in keep),
        tuple(ys[k] for k in keep),
        fit.slope,
        fit.intercept,
        fit.r2,
        theta,
    )


def translation_family(mu):
    return lambda t: mu.translate(t)


def mass_swap_family(mu, src=0, dst=-1):
    """Move mass ``t`` from atom ``src`` to atom ``dst`` in every marginal."""

    def family(t):
        out = []
        for m in mu:
            w = m.weights.copy()
            w[src] -= t
            w[dst] += t
            if np.any(w <= 0):
                raise InputError(f"mass swap t={t} empties an atom", field="t")
            out.append(DiscreteMeasure(m.atoms, w))
        return MarginalVector(out)

    return family


def holder_experiment(rho, mu, family, p, q, scales, delta=0.01):
    """Log-log fit of shadow distance against marginal distance.

    For each scale ``t``, pairs ``W_q(mu, nu_t)`` with
    ``W_p(S(rho; mu), S(rho; nu_t))`` where ``nu_t = family(t)``.
    """
    mu = MarginalVector(mu)
    base = compose_shadow(rho, mu, p).shadow
    xs, ys = [], []
    for t in scales:
        nu = family(t)
        xs.append(marginal_vector_distance(mu, nu, MetricSpec(q, rho.block_dims)))
        ys.append(shadow_distance(base, compose_shadow(rho, nu, p).shadow, p))
    if all(x == 0 for x in xs) or all(y == 0 for y in ys):
        raise ExperimentError("all distances are zero; perturbation family is degenerate")
    theta = theta_of(p, delta).theta if p > 1 and not math.isinf(p) else None
    return _fit_pairs(list(scales), xs, ys, theta)


def _transport_map(lam, target, p):
    bm = barycentric_map(solve_ot(target, lam, MetricSpec(p, (lam.dim,))).plan)
    out = np.empty((lam.n_atoms, target.dim))
    out[bm.target_index] = bm.mapped
    return out


def map_stability_experiment(lam, mu, nu, p=2.0):
    """``(||T_mu - T_nu||_{L^2(lam)}, W_1(mu, nu))`` for maps out of ``lam``.

    Maps are barycentric projections of the optimal plans from ``lam``.
    """
    if lam.dim != mu.dim or mu.dim != nu.dim:
        raise InputError("lam, mu and nu must share a dimension")
    Tm = _transport_map(lam, mu, p)
    Tn = _transport_map(lam, nu, p)
    sq = np.sum((Tm - Tn) ** 2, axis=1)
    lhs = math.sqrt(math.fsum(lam.weights * sq))
    rhs = solve_ot(mu, nu, MetricSpec(1.0, (mu.dim,))).value
    return lhs, rhs


def map_stability_fit(lam, mu, family, scales, p=2.0, delta=0.01):
    """Fit ``log lhs`` against ``log W_1`` over ``nu = family(t)``."""
    xs, ys = [], []
    for t in scales:
        lhs, rhs = map_stability_experiment(lam, mu, family(t), p)
        xs.append(rhs)
        ys.append(lhs)
    if all(y == 0 for y in ys):
        raise ExperimentError("all map distances are zero")
    return _fit_pairs(list(scales), xs, ys, theta_of(p, delta).theta)


__all__ = [
    "ThetaSpec",
    "StabilityReport",
    "SmoothingSpec",
    "RatioReport",
    "HolderFit",
    "theta_of",
    "stability_report",
    "smooth",
    "nonexpansive_diagnostic",
    "translation_family",
    "mass_swap_family",
    "holder_experiment",
    "map_stability_experiment",
    "map_stability_fit",
    "shadow_distance",
]

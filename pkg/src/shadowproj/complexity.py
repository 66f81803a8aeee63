"""Covering-number dimension estimates and empirical-shadow rate experiments."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._fit import LineFit, ols
from ._rng import mix_seed
from .exceptions import ExperimentError, InputError
from .measures import (
    DiscreteMeasure,
    MarginalVector,
    MetricSpec,
    marginal_vector_distance,
    sample_empirical,
)
from .shadow import compose_shadow
from .stability import shadow_distance, theta_of

MASS_TOL = 1e-12


@dataclass(frozen=True)
class CoveringEstimate:
    epsilon: float
    N: int
    tau: float = 0.0
    centers: tuple = field(default=(), repr=False)

    @property
    def d_eps(self):
        """``log N / (-log epsilon)``; undefined (nan) at ``epsilon = 1``."""
        if self.epsilon == 1.0:
            return math.nan
        return math.log(self.N) / (-math.log(self.epsilon))


def _points(points):
    if isinstance(points, DiscreteMeasure) or hasattr(points, "atoms"):
        points = points.atoms
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.size == 0:
        raise InputError("point set is empty", field="points")
    return X


def _dist_to(X, c, norm_p):
    return np.linalg.norm(X - c, ord=norm_p, axis=1)


def _greedy_net(X, epsilon, norm_p):
    radius = epsilon / 2.0
    centers = [0]
    dist = _dist_to(X, X[0], norm_p)
    while True:
        k = int(np.argmax(dist))
        if dist[k] <= radius:
            return centers
        centers.append(k)
        dist = np.minimum(dist, _dist_to(X, X[k], norm_p))


def covering_number(points, epsilon, norm_p=math.inf):
    """Greedy farthest-point cover by closed balls of diameter ``epsilon``.

    Starts from the first point and repeatedly adds the point farthest from
    the chosen centers until every point lies within ``epsilon / 2`` of one.
    The count is a valid cover, hence an upper bound on the covering number;
    the centers are ``epsilon/2``-separated, so it never exceeds the
    ``epsilon/2`` packing number either.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive", field="epsilon")
    X = _points(points)
    centers = _greedy_net(X, epsilon, norm_p)
    return CoveringEstimate(float(epsilon), len(centers), 0.0, tuple(centers))


def covering_with_mass_drop(m, epsilon, tau, norm_p=math.inf):
    """Upper bound on the ``(epsilon, tau)`` covering number of ``m``.

    Runs the greedy net, then repeatedly removes the center whose removal
    loses the least covered mass, as long as the covered mass stays at
    least ``1 - tau``.
    """
    if not 0.0 <= tau < 1.0:
        raise InputError(f"tau must lie in [0, 1), got {tau!r}", field="tau")
    if not epsilon > 0:
        raise InputError("epsilon must be positive", field="epsilon")
    X = _points(m)
    w = np.asarray(m.weights, dtype=float)
    centers = _greedy_net(X, epsilon, norm_p)
    cover = np.array([_dist_to(X, X[c], norm_p) <= epsilon / 2.0 for c in centers])
    active = list(range(len(centers)))
    counts = cover.sum(axis=0)
    covered = math.fsum(w[counts > 0])
    while len(active) > 1:
        losses = [math.fsum(w[cover[a] & (counts == 1)]) for a in active]
        k = int(np.argmin(losses))
        if covered - losses[k] < 1.0 - tau - MASS_TOL:
            break
        a = active.pop(k)
        counts = counts - cover[a]
        covered = math.fsum(w[counts > 0])
    kept = tuple(centers[a] for a in active)
    return CoveringEstimate(float(epsilon), len(kept), float(tau), kept)


@dataclass(frozen=True)
class DimensionProfile:
    """``d(epsilon)`` profile with two dimension summaries.

    ``plateau`` is ``d(epsilon)`` at the finest resolved scale (the smallest
    swept epsilon at which the net is coarser than the point set itself), the
    finite-sample stand-in for ``epsilon -> 0``. ``fit`` is the OLS slope of
    ``log N`` on ``-log epsilon`` over the sweep, a diagnostic that is biased
    low when balls hold only a few points each.
    """

    estimates: tuple
    fit: LineFit
    plateau: float
    plateau_epsilon: float

    @property
    def dimension(self):
        return self.plateau

    @property
    def profile(self):
        return [(e.epsilon, e.N, e.d_eps) for e in self.estimates]


def resolution_scale(points, norm_p=math.inf):
    """Twice the largest nearest-neighbour distance; 0 for a single point."""
    X = _points(points)
    if X.shape[0] < 2:
        return 0.0
    nn = np.full(X.shape[0], np.inf)
    for k in range(X.shape[0]):
        d = _dist_to(X, X[k], norm_p)
        d[k] = np.inf
        nn[k] = d.min()
    return 2.0 * float(nn.max())


def default_epsilons(points, num=8, norm_p=math.inf):
    """Geometric sweep from the resolution scale to half the diameter."""
    X = _points(points)
    lo = resolution_scale(X, norm_p) * (1 + 1e-9)
    diam = float(np.max(np.ptp(X, axis=0))) if X.shape[0] > 1 else 0.0
    if lo == 0.0 or diam / 2 <= lo:
        return [0.5 ** k for k in range(1, num + 1)]
    return list(np.geomspace(lo, diam / 2, num))


def covering_profile(points, epsilons=None, tau=0.0, norm_p=math.inf, plateau_epsilon=None):
    """Covering counts and ``d(epsilon)`` over an epsilon sweep.

    ``plateau_epsilon`` overrides the automatic choice of plateau scale.
    Counts are ``(epsilon, tau)`` counts when ``tau > 0`` (``points`` must
    then be a measure).
    """
    if epsilons is None:
        epsilons = default_epsilons(points, norm_p=norm_p)
    eps = sorted(float(e) for e in epsilons)
    if any(e >= 1.0 for e in eps):
        raise InputError("epsilon sweep must lie in (0, 1)", field="epsilons")
    if tau > 0:
        ests = [covering_with_mass_drop(points, e, tau, norm_p) for e in eps]
    else:
        ests = [covering_number(points, e, norm_p) for e in eps]
    Ns = [e.N for e in ests]
    if all(n == Ns[0] for n in Ns):
        fit = LineFit(0.0, math.log(Ns[0]), 0.0, 1.0)
    else:
        fit = ols([-math.log(e) for e in eps], [math.log(n) for n in Ns])
    n_points = _points(points).shape[0]
    if plateau_epsilon is None:
        resolved = [e for e in ests if e.N < n_points] or [ests[-1]]
        chosen = resolved[0]
    else:
        chosen = covering_number(points, plateau_epsilon, norm_p) if tau == 0 else \
            covering_with_mass_drop(points, plateau_epsilon, tau, norm_p)
    return DimensionProfile(tuple(ests), fit, chosen.d_eps, chosen.epsilon)


def rate_fit(xs, ys):
    """OLS slope of ``ys`` on ``xs`` with its standard error and r^2."""
    if len(xs) < 3:
        raise ExperimentError("rate fit needs at least three points")
    return ols(xs, ys)


# -- sample complexity -------------------------------------------------------


@dataclass(frozen=True)
class RateRow:
    n: int
    m: int
    trial: int
    seed: int
    distance: float
    lower: float


@dataclass(frozen=True)
class RateTable:
    rows: tuple
    p: float
    slope_n: LineFit
    slope_m: LineFit
    reference: dict

    def mean(self, n, m):
        return float(np.mean([r.distance for r in self.rows if r.n == n and r.m == m]))

    def sd(self, n, m):
        d = [r.distance for r in self.rows if r.n == n and r.m == m]
        return float(np.std(d, ddof=1)) if len(d) > 1 else 0.0

    def count(self, n, m):
        return sum(1 for r in self.rows if r.n == n and r.m == m)

    def diagonal(self):
        ns = sorted({r.n for r in self.rows})
        ms = sorted({r.m for r in self.rows})
        return list(zip(ns, ms))

    def monotone_within_se(self):
        """Mean distance along the doubling diagonal never rises by more
        than one pooled standard error between consecutive sizes."""
        diag = self.diagonal()
        for (n0, m0), (n1, m1) in zip(diag, diag[1:]):
            pooled = math.sqrt(
                (self.sd(n0, m0) ** 2 + self.sd(n1, m1) ** 2) / self.count(n0, m0)
            )
            if self.mean(n1, m1) > self.mean(n0, m0) + pooled:
                return False
        return True

    def lower_bound_holds(self, slack=1e-9):
        return all(r.lower <= r.distance + slack for r in self.rows)


def sample_complexity_experiment(
    rho, mu, n_grid, m_grid, trials, base_seed, p, q=None, s=None, t=None, delta=0.01,
    pairs="full",
):
    """Distances between ``S(rho; mu)`` and empirical shadows ``S(rho_n; mu_m)``.

    ``pairs="full"`` runs every ``(n, m)``; ``"axes"`` only the diagonal plus
    the rows with ``m`` or ``n`` at its maximum (the points the fits use).
    Trial seeds are ``mix(base_seed, n, m, trial)``; the ``rho`` sample uses
    substream 0 and marginal ``i`` substream ``i + 1``.
    """
    n_grid = sorted(int(x) for x in n_grid)
    m_grid = sorted(int(x) for x in m_grid)
    if not n_grid or not m_grid or trials < 1:
        raise InputError("n_grid, m_grid and trials must be nonempty/positive")
    mu = MarginalVector(mu)
    spec = MetricSpec(p, rho.block_dims)
    reference = compose_shadow(rho, mu, p).shadow
    n_max, m_max = n_grid[-1], m_grid[-1]
    if pairs == "full":
        todo = [(n, m) for n in n_grid for m in m_grid]
    elif pairs == "axes":
        todo = sorted(
            set(zip(n_grid, m_grid)) | {(n, m_max) for n in n_grid} | {(n_max, m) for m in m_grid}
        )
    else:
        raise InputError(f"unknown pairs mode {pairs!r}", field="pairs")

    rows = []
    for n, m in todo:
        for trial in range(trials):
            seed = mix_seed(base_seed, n, m, trial)
            rho_n = sample_empirical(rho, n, mix_seed(seed, 0))
            mu_m = MarginalVector(
                sample_empirical(mu[i], m, mix_seed(seed, i + 1)) for i in range(len(mu))
            )
            emp = compose_shadow(rho_n, mu_m, p).shadow
            dist = shadow_distance(reference, emp, p)
            lower = marginal_vector_distance(mu, mu_m, spec)
            rows.append(RateRow(n, m, trial, seed, dist, lower))
    rows.sort(key=lambda r: (r.n, r.m, r.trial))

    def mean(n, m):
        return float(np.mean([r.distance for r in rows if r.n == n and r.m == m]))

    def loglog(sizes, means):
        # a zero mean (exact recovery) has no logarithm; report no slope
        if len(sizes) < 2 or min(means) <= 0:
            return None
        return ols(np.log(sizes), np.log(means))

    fit_n = loglog(n_grid, [mean(n, m_max) for n in n_grid])
    fit_m = loglog(m_grid, [mean(n_max, m) for m in m_grid])

    dims = rho.block_dims
    s = list(s) if s is not None else [d + 0.5 for d in dims]
    t = list(t) if t is not None else [float(d) for d in dims]
    theta = theta_of(p, delta).theta if p > 1 and not math.isinf(p) else None
    reference_slopes = {
        "n": -1.0 / sum(dims),
        "m_upper": [(-theta / si) if theta is not None else None for si in s],
        "m_lower": [-1.0 / ti for ti in t],
        "s": s,
        "t": t,
        "theta": theta,
    }
    return RateTable(tuple(rows), float(p), fit_n, fit_m, reference_slopes)


__all__ = [
    "CoveringEstimate",
    "DimensionProfile",
    "RateRow",
    "RateTable",
    "covering_number",
    "covering_with_mass_drop",
    "covering_profile",
    "default_epsilons",
    "resolution_scale",
    "rate_fit",
    "sample_complexity_experiment",
]

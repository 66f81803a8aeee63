"""Brute-force LP for the projection problem in multimarginal form.

One variable per pair ``(x, y)`` with ``x`` in the product of the marginal
supports and ``y`` an atom of ``rho``. The LP is solved by a dense two-phase
tableau simplex with Bland's rule. This module shares no solver code with the
shadow construction, so it serves as an independent optimality oracle.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, SizeError, SolverError
from .measures import DiscreteMeasure, MarginalVector, ProductMeasure

DEFAULT_VARIABLE_CAP = 20_000
GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min c @ x  s.t.  A @ x = b, x >= 0`` (dense)."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    combos: np.ndarray = None
    n_rho: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_vars(self):
        return self.c.shape[0]

    @property
    def n_constraints(self):
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class LPSolution:
    x: np.ndarray
    value: float
    duals: np.ndarray
    rows: np.ndarray
    basis: tuple
    iterations: int
    gap: float


@dataclass(frozen=True, eq=False)
class ProjectionCertificate:
    """Optimal value (cost units for finite ``p``), plan and recovered coupling.

    ``gamma`` holds ``(combo index, rho atom, mass)`` triplets; ``pi_star`` is
    its x-marginal, *a* minimizer of the projection problem.
    """

    value: float
    p: float
    gamma: np.ndarray
    pi_star: ProductMeasure
    duals: np.ndarray
    gap: float
    combos: np.ndarray

    @property
    def distance(self):
        """Projection distance: ``value^(1/p)``, or the threshold for ``p = inf``."""
        if math.isinf(self.p):
            return self.value
        return max(self.value, 0.0) ** (1.0 / self.p)


def _combos(mu):
    return np.array(list(itertools.product(*[range(m.n_atoms) for m in mu])), dtype=int)


def _combo_atoms(mu, combos):
    return np.concatenate([mu[i].atoms[combos[:, i]] for i in range(len(mu))], axis=1)


def _check(rho, mu, cap):
    if not isinstance(rho, ProductMeasure):
        raise InputError("rho must be a ProductMeasure", field="rho")
    mu = MarginalVector(mu)
    if len(mu) != rho.K:
        raise InputError(f"{len(mu)} marginals for K={rho.K} blocks", field="marginals")
    for i, (m, d) in enumerate(zip(mu, rho.block_dims)):
        if m.dim != d:
            raise InputError(f"marginal {i} has dimension {m.dim}, block has {d}", field="marginals")
    n_vars = math.prod(m.n_atoms for m in mu) * rho.n_atoms
    if n_vars > cap:
        raise SizeError(f"projection LP would have {n_vars} variables (cap {cap})",
                        field="variable_cap")
    return mu


def _constraints(rho, mu, combos, allowed=None):
    nx, ny = combos.shape[0], rho.n_atoms
    rows, rhs = [], []
    for i, m in enumerate(mu):
        for a in range(m.n_atoms):
            r = np.zeros((nx, ny))
            r[combos[:, i] == a, :] = 1.0
            rows.append(r.reshape(-1))
            rhs.append(m.weights[a])
    # last rho row dropped: implied by total mass
    for y in range(ny - 1):
        r = np.zeros((nx, ny))
        r[:, y] = 1.0
        rows.append(r.reshape(-1))
        rhs.append(rho.weights[y])
    A = np.array(rows)
    b = np.array(rhs)
    if allowed is not None:
        A = A[:, allowed]
    return A, b


def build_projection_lp(rho, mu, p, variable_cap=DEFAULT_VARIABLE_CAP):
    """LP over couplings of ``(pi, rho)`` with ``pi`` having marginals ``mu``.

    Variable ``k = combo * n_rho + y``; cost ``sum_i ||x_i - y_i||_p^p``.
    """
    p = float(p)
    if math.isinf(p):
        raise InputError("build_projection_lp requires finite p", field="p")
    mu = _check(rho, mu, variable_cap)
    combos = _combos(mu)
    X = _combo_atoms(mu, combos)
    diff = np.abs(X[:, None, :] - rho.atoms[None, :, :])
    c = (diff**p).sum(axis=2).reshape(-1)
    A, b = _constraints(rho, mu, combos)
    return LinearProgram(c=c, A=A, b=b, combos=combos, n_rho=rho.n_atoms, meta={"p": p})


# -- dense tableau simplex -------------------------------------------------


def _pivot(T, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, cost, allowed, tol, max_iter):
    """Bland's rule on tableau ``T`` (rows = constraints, last column = rhs)."""
    m = T.shape[0]
    it = 0
    while True:
        r_cost = cost - cost[basis] @ T[:, :-1]
        cand = np.flatnonzero((r_cost < -tol) & allowed)
        if cand.size == 0:
            return it
        j = int(cand[0])
        col = T[:, j]
        ok = col > 1e-12
        if not ok.any():
            raise SolverError("LP is unbounded")
        ratios = np.full(m, np.inf)
        ratios[ok] = T[ok, -1] / col[ok]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-15 * max(1.0, abs(best)))
        r = int(min(ties, key=lambda k: basis[k]))
        _pivot(T, r, j)
        basis[r] = j
        it += 1
        if it > max_iter:
            raise SolverError(f"dense simplex exceeded {max_iter} pivots")


def solve_lp(lp, tol=1e-11, max_iter=None, phase_one_only=False):
    """Two-phase primal simplex with Bland's rule; returns an :class:`LPSolution`.

    Redundant equality rows are detected at the end of phase one and removed.
    """
    A = np.asarray(lp.A, dtype=float)
    b = np.asarray(lp.b, dtype=float)
    c = np.asarray(lp.c, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        A = np.where((b < 0)[:, None], -A, A)
        b = np.abs(b)
    if max_iter is None:
        max_iter = 100 * (m + n) + 1000
    T = np.zeros((m, n + m + 1))
    T[:, :n] = A
    T[:, n : n + m] = np.eye(m)
    T[:, -1] = b
    basis = list(range(n, n + m))
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    it = _run(T, basis, cost1, allowed, tol, max_iter)
    infeas = float(T[:, -1] @ cost1[basis])
    if infeas > 1e-10:
        if phase_one_only:
            return None
        raise SolverError(f"LP infeasible (phase-one residual {infeas:.3e})")

    # drive zero-level artificials out of the basis; drop rows that cannot be
    keep = []
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > 1e-9)
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
                keep.append(r)
        else:
            keep.append(r)
    T = T[keep]
    basis = [basis[r] for r in keep]
    rows = np.array(keep, dtype=int)

    if phase_one_only:
        x = np.zeros(n)
        x[basis] = T[:, -1]
        return LPSolution(np.maximum(x, 0.0), 0.0, np.zeros(len(rows)), rows,
                          tuple(basis), it, 0.0)

    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True
    cost2 = np.concatenate([c, np.zeros(m)])
    it += _run(T, basis, cost2, allowed, tol, max_iter)
    x = np.zeros(n)
    x[basis] = T[:, -1]
    x = np.maximum(x, 0.0)

    B = A[rows][:, basis]
    try:
        y = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(B)
        raise SolverError(f"singular final basis (condition number {cond:.3e})") from exc
    value = float(c @ x)
    gap = abs(value - float(b[rows] @ y))
    red = c - A[rows].T @ y
    scale = max(1.0, float(np.abs(c).max()))
    if gap > GAP_TOL * scale or red.min() < -GAP_TOL * scale:
        cond = np.linalg.cond(B)
        raise SolverError(
            f"certificate failed: gap {gap:.3e}, min reduced cost {red.min():.3e}, "
            f"basis condition {cond:.3e}"
        )
    return LPSolution(x, value, y, rows, tuple(basis), it, gap)


def _certificate(rho, mu, combos, x, value, p, duals, gap, var_index=None):
    ny = rho.n_atoms
    if var_index is None:
        var_index = np.arange(x.shape[0])
    nzv = np.flatnonzero(x > 0)
    k = var_index[nzv]
    gamma = np.stack([k // ny, k % ny, x[nzv]], axis=1).astype(float)
    xmass = np.bincount(k // ny, weights=x[nzv], minlength=combos.shape[0])
    X = _combo_atoms(mu, combos)
    pi_star = ProductMeasure(DiscreteMeasure.from_masses(X, xmass), rho.block_dims)
    return ProjectionCertificate(value, p, gamma, pi_star, duals, gap, combos)


def project_oracle(rho, mu, p, variable_cap=DEFAULT_VARIABLE_CAP):
    """Solve the projection of ``rho`` onto the couplings of ``mu`` by brute force.

    For ``p = inf`` the smallest feasible threshold is found by binary search
    over the distinct pair costs, each probe a phase-one LP restricted to
    pairs with cost at most the threshold.
    """
    p = float(p)
    if not math.isinf(p):
        lp = build_projection_lp(rho, mu, p, variable_cap)
        sol = solve_lp(lp)
        return _certificate(rho, MarginalVector(mu), lp.combos, sol.x, sol.value, p,
                            sol.duals, sol.gap)

    mu = _check(rho, mu, variable_cap)
    combos = _combos(mu)
    X = _combo_atoms(mu, combos)
    D = np.abs(X[:, None, :] - rho.atoms[None, :, :]).max(axis=2).reshape(-1)
    A_full, b = _constraints(rho, mu, combos)
    levels = np.unique(D)
    cache = {}

    def probe(idx):
        if idx not in cache:
            allowed = np.flatnonzero(D <= levels[idx])
            lp = LinearProgram(c=np.zeros(allowed.size), A=A_full[:, allowed], b=b)
            cache[idx] = (allowed, solve_lp(lp, phase_one_only=True))
        return cache[idx]

    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if probe(mid)[1] is not None:
            hi = mid
        else:
            lo = mid + 1
    allowed, sol = probe(lo)
    if sol is None:
        raise SolverError("no feasible threshold found")
    return _certificate(rho, mu, combos, sol.x, float(levels[lo]), p, sol.duals, 0.0,
                        var_index=allowed)


__all__ = [
    "LinearProgram",
    "LPSolution",
    "ProjectionCertificate",
    "build_projection_lp",
    "solve_lp",
    "project_oracle",
]

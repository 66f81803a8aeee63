"""Shadow of a joint measure onto the couplings of prescribed marginals.

Each block's optimal plan between ``mu_i`` and the block marginal ``rho_i``
is disintegrated into a kernel ``kappa_i(x_i | y_i)``; pushing ``rho``
through the product kernel gives the shadow. The plans come from the
deterministic solvers in :mod:`shadowproj.ot_exact`, so the result is the
*canonical* shadow: when several optimal plans exist, the pivot rule picks one.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, SizeError, SolverError
from .measures import (
    DiscreteMeasure,
    MarginalVector,
    MetricSpec,
    ProductMeasure,
    _canonical_key,
    aggregate,
    marginal,
)
from .ot_exact import solve

DEFAULT_SUPPORT_CAP = 10**6
VALUE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ConditionalKernel:
    """Row-stochastic ``kappa(x | y)``: one row per conditioning atom ``y``."""

    conditioning: DiscreteMeasure
    source_atoms: np.ndarray
    rows: np.ndarray

    @property
    def conditioning_atoms(self):
        return self.conditioning.atoms

    def reconstruct(self):
        """Plan table ``kappa(x | y) rho(dy)`` with rows indexed by ``x``."""
        return (self.rows * self.conditioning.weights[:, None]).T

    def is_deterministic(self):
        return bool(np.all(np.count_nonzero(self.rows > 0, axis=1) == 1))


def disintegrate(plan):
    """Kernel of ``plan`` conditioned on its target (column) measure.

    Rows are normalized by the column sums, so a column with a single
    nonzero becomes an exact Dirac row.
    """
    colsum = plan.table.sum(axis=0)
    if np.any(colsum <= 0):
        raise InputError("plan has a zero-mass conditioning atom")
    rows = plan.table.T / colsum[:, None]
    rows.setflags(write=False)
    return ConditionalKernel(plan.target, plan.source.atoms, rows)


@dataclass(frozen=True, eq=False)
class ShadowResult:
    """Canonical shadow, glued coupling and certified projection value.

    ``glued`` is an ``(L, 3)`` array of ``(shadow atom, rho atom, mass)``
    triplets; the first two columns are integer-valued.
    """

    shadow: ProductMeasure
    glued: np.ndarray
    value: float
    per_marginal_values: tuple
    rho: ProductMeasure
    mu: MarginalVector
    p: float
    kernels: tuple
    block_index: np.ndarray
    plans: tuple

    @property
    def spec(self):
        return MetricSpec(self.p, self.rho.block_dims)

    def glued_cost(self):
        return glued_cost(self)


def _block_lookup(rho, rho_i, i):
    keys = {_canonical_key(a): k for k, a in enumerate(rho_i.atoms)}
    return np.array([keys[_canonical_key(a)] for a in rho.block(i)], dtype=int)


def _validate(rho, mu):
    if not isinstance(rho, ProductMeasure):
        raise InputError("rho must be a ProductMeasure", field="rho")
    mu = MarginalVector(mu)
    if len(mu) != rho.K:
        raise InputError(f"{len(mu)} marginals for K={rho.K} blocks", field="marginals")
    for i, (m, d) in enumerate(zip(mu, rho.block_dims)):
        if m.dim != d:
            raise InputError(f"marginal {i} has dimension {m.dim}, block has {d}", field="marginals")
    return mu


def compose_shadow(rho, mu, p, support_cap=DEFAULT_SUPPORT_CAP):
    """Canonical shadow of ``rho`` onto the couplings of ``mu``.

    ``p`` may be ``inf`` (bottleneck plans, max aggregation).
    """
    mu = _validate(rho, mu)
    p = float(p)
    K = rho.K
    plans, kernels, values, lookup = [], [], [], []
    for i in range(K):
        rho_i = marginal(rho, i)
        res = solve(mu[i], rho_i, MetricSpec(p, (rho.block_dims[i],)))
        plans.append(res.plan)
        values.append(res.value)
        kernels.append(disintegrate(res.plan))
        lookup.append(_block_lookup(rho, rho_i, i))
    block_index = np.stack(lookup, axis=1)

    # nonzero kernel entries per (block, conditioning atom)
    nz = [
        [np.flatnonzero(kern.rows[y] > 0) for y in range(kern.rows.shape[0])]
        for kern in kernels
    ]
    size = sum(
        math.prod(len(nz[i][block_index[k, i]]) for i in range(K)) for k in range(rho.n_atoms)
    )
    if size > support_cap:
        raise SizeError(f"shadow support would have {size} entries (cap {support_cap})",
                        field="support_cap")

    slot = {}
    order = []
    masses = []
    triplets = []
    for k in range(rho.n_atoms):
        ys = block_index[k]
        idx_lists = [nz[i][ys[i]] for i in range(K)]
        w_lists = [kernels[i].rows[ys[i], idx_lists[i]] for i in range(K)]
        grids = np.meshgrid(*idx_lists, indexing="ij")
        combos = np.stack([g.reshape(-1) for g in grids], axis=1)
        w = rho.weights[k]
        for wi in w_lists:
            w = np.multiply.outer(w, wi)
        w = np.asarray(w).reshape(-1)
        for combo, mass in zip(map(tuple, combos), w):
            s = slot.get(combo)
            if s is None:
                s = slot[combo] = len(order)
                order.append(combo)
                masses.append([])
            masses[s].append(mass)
            triplets.append((s, k, mass))

    atoms = np.array(
        [np.concatenate([mu[i].atoms[c[i]] for i in range(K)]) for c in order]
    )
    shadow_w = np.array([math.fsum(ms) for ms in masses])
    shadow = ProductMeasure(DiscreteMeasure(atoms, shadow_w), rho.block_dims)
    if shadow.n_atoms != len(order):
        raise SolverError("shadow atoms collided; marginal supports have duplicate atoms")

    value = aggregate(values, p)
    result = ShadowResult(
        shadow=shadow,
        glued=np.array(triplets, dtype=float).reshape(-1, 3),
        value=value,
        per_marginal_values=tuple(values),
        rho=rho,
        mu=mu,
        p=p,
        kernels=tuple(kernels),
        block_index=block_index,
        plans=tuple(plans),
    )
    gc = glued_cost(result)
    if abs(gc - value) > VALUE_TOL:
        raise SolverError(f"glued coupling cost {gc!r} differs from value {value!r}")
    return result


def glued_cost(result):
    """Transport cost of the glued coupling between shadow and ``rho``."""
    spec = result.spec
    xi = result.glued[:, 0].astype(int)
    yi = result.glued[:, 1].astype(int)
    mass = result.glued[:, 2]
    X = result.shadow.atoms[xi]
    Y = result.rho.atoms[yi]
    diff = np.abs(X - Y)
    if spec.is_inf:
        return float(diff.max()) if len(mass) else 0.0
    c = (diff**spec.p).sum(axis=1)
    return max(math.fsum(mass * c), 0.0) ** (1.0 / spec.p)


def glued_marginals(result):
    """``(x-marginal, y-marginal)`` mass vectors of the glued coupling."""
    xi = result.glued[:, 0].astype(int)
    yi = result.glued[:, 1].astype(int)
    mass = result.glued[:, 2]
    return (
        np.bincount(xi, weights=mass, minlength=result.shadow.n_atoms),
        np.bincount(yi, weights=mass, minlength=result.rho.n_atoms),
    )


def total_variation(a, b):
    """Total variation distance between two discrete measures on the same space."""
    acc = {}
    for atom, w in zip(a.atoms, a.weights):
        acc[_canonical_key(atom)] = acc.get(_canonical_key(atom), 0.0) + w
    for atom, w in zip(b.atoms, b.weights):
        acc[_canonical_key(atom)] = acc.get(_canonical_key(atom), 0.0) - w
    return 0.5 * math.fsum(abs(v) for v in acc.values())


@dataclass(frozen=True, eq=False)
class MapInduced:
    induced: bool
    maps: tuple = ()

    def __bool__(self):
        return self.induced


def is_map_induced(result):
    """Whether every block kernel is deterministic.

    When it is, ``maps[i]`` is an integer array sending each atom of
    ``rho_i`` to an atom index of ``mu_i``, and the shadow is checked to equal
    the pushforward of ``rho`` under the product map.
    """
    if not all(k.is_deterministic() for k in result.kernels):
        return MapInduced(False)
    maps = tuple(np.argmax(k.rows > 0, axis=1) for k in result.kernels)
    K = result.rho.K
    images = np.array(
        [
            np.concatenate(
                [result.mu[i].atoms[maps[i][result.block_index[k, i]]] for i in range(K)]
            )
            for k in range(result.rho.n_atoms)
        ]
    )
    push = DiscreteMeasure(images, result.rho.weights)
    if not push.same_as(result.shadow.base):
        raise SolverError("deterministic kernels but shadow is not the pushforward of rho")
    return MapInduced(True, maps)


def project_measure_distance(a, b, p):
    """``W_p`` between two product measures under the separable metric."""
    spec = MetricSpec(p, a.block_dims)
    return solve(a.base, b.base, spec).value


__all__ = [
    "ConditionalKernel",
    "ShadowResult",
    "MapInduced",
    "disintegrate",
    "compose_shadow",
    "glued_cost",
    "glued_marginals",
    "total_variation",
    "is_map_induced",
    "project_measure_distance",
]

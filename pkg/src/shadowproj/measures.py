"""Discrete probability measures on products of Euclidean blocks.

A measure is a finite list of atoms with strictly positive weights. Atoms are
rows of a 2-D float array; a :class:`ProductMeasure` additionally records how
the coordinates split into blocks ``(d_1, ..., d_K)``.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import SplitMix64
from .exceptions import InputError

MASS_TOL = 1e-12


@dataclass(frozen=True)
class MetricSpec:
    """Exponent ``p`` in ``[1, inf]`` and block dimensions of the product space."""

    p: float
    block_dims: tuple

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1.0:
            raise InputError(f"p must be >= 1 or inf, got {self.p!r}", field="p")
        dims = tuple(int(d) for d in self.block_dims)
        if not dims:
            raise InputError("block_dims must be nonempty", field="block_dims")
        if any(d < 1 for d in dims):
            raise InputError(f"block dims must be >= 1, got {dims}", field="block_dims")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "block_dims", dims)

    @property
    def K(self):
        return len(self.block_dims)

    @property
    def dim(self):
        return sum(self.block_dims)

    @property
    def is_inf(self):
        return math.isinf(self.p)

    def block_slices(self):
        out, start = [], 0
        for d in self.block_dims:
            out.append(slice(start, start + d))
            start += d
        return out

    def with_p(self, p):
        return MetricSpec(p, self.block_dims)


def _canonical_key(row):
    # -0.0 and 0.0 are the same point
    return (row + 0.0).tobytes()


def _merge(atoms, weights):
    """Merge exactly-equal atoms, keeping first-occurrence order."""
    index = {}
    keep = []
    groups = []
    for k in range(atoms.shape[0]):
        key = _canonical_key(atoms[k])
        j = index.get(key)
        if j is None:
            index[key] = len(keep)
            keep.append(k)
            groups.append([weights[k]])
        else:
            groups[j].append(weights[k])
    merged = np.array([math.fsum(g) for g in groups], dtype=float)
    return atoms[keep] + 0.0, merged


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure.

    Duplicate atoms are merged on construction. Weights must be positive and
    sum to one within ``1e-12``; within tolerance they are renormalized.
    """

    atoms: np.ndarray
    weights: np.ndarray = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise InputError("atoms must be a nonempty 2-D array", field="atoms")
        if not np.all(np.isfinite(atoms)):
            raise InputError("atom coordinates must be finite", field="atoms")
        if self.weights is None:
            weights = np.full(atoms.shape[0], 1.0 / atoms.shape[0])
        else:
            weights = np.array(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != atoms.shape[0]:
            raise InputError(
                f"{weights.shape[0]} weights for {atoms.shape[0]} atoms", field="weights"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise InputError("weights must be finite and strictly positive", field="weights")
        atoms, weights = _merge(atoms, weights)
        total = math.fsum(weights)
        if abs(total - 1.0) > MASS_TOL:
            raise InputError(f"weights sum to {total!r}, expected 1", field="weights")
        if total != 1.0:
            weights = weights / total
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        meta = dict(self.meta)
        meta.setdefault("bbox", (atoms.min(axis=0).tolist(), atoms.max(axis=0).tolist()))
        object.__setattr__(self, "meta", meta)

    @classmethod
    def from_masses(cls, atoms, masses):
        """Build from nonnegative masses: zeros dropped, rest rescaled to one.

        Intended for masses assembled by the solvers, which carry rounding
        error; callers are responsible for the total being close to one.
        """
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        masses = np.asarray(masses, dtype=float)
        pos = masses > 0
        total = math.fsum(masses[pos])
        return cls(atoms[pos], masses[pos] / total)

    @classmethod
    def dirac(cls, point):
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), [1.0])

    @classmethod
    def uniform(cls, atoms):
        return cls(atoms, None)

    @property
    def n_atoms(self):
        return self.atoms.shape[0]

    @property
    def dim(self):
        return self.atoms.shape[1]

    def total_mass(self):
        return math.fsum(self.weights)

    def translate(self, shift):
        return DiscreteMeasure(self.atoms + np.asarray(shift, dtype=float), self.weights)

    def same_as(self, other, atol=0.0):
        """Equal as measures: same atom set, weights within ``atol``."""
        if self.dim != other.dim or self.n_atoms != other.n_atoms:
            return False
        pos = {_canonical_key(a): w for a, w in zip(other.atoms, other.weights)}
        for a, w in zip(self.atoms, self.weights):
            v = pos.get(_canonical_key(a))
            if v is None or abs(v - w) > atol:
                return False
        return True

    def __repr__(self):
        return f"DiscreteMeasure(n_atoms={self.n_atoms}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """Discrete measure on ``R^{d_1} x ... x R^{d_K}`` with its block split."""

    base: DiscreteMeasure
    block_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if not dims or any(d < 1 for d in dims):
            raise InputError(f"invalid block dims {dims}", field="dims")
        if sum(dims) != self.base.dim:
            raise InputError(
                f"atoms have dimension {self.base.dim}, dims sum to {sum(dims)}",
                field="dims",
            )
        object.__setattr__(self, "block_dims", dims)

    @classmethod
    def from_arrays(cls, atoms, weights, block_dims):
        return cls(DiscreteMeasure(atoms, weights), block_dims)

    @property
    def atoms(self):
        return self.base.atoms

    @property
    def weights(self):
        return self.base.weights

    @property
    def n_atoms(self):
        return self.base.n_atoms

    @property
    def K(self):
        return len(self.block_dims)

    def spec(self, p):
        return MetricSpec(p, self.block_dims)

    def block(self, i):
        """Coordinates of block ``i`` (0-based) for every atom."""
        start = sum(self.block_dims[:i])
        return self.atoms[:, start : start + self.block_dims[i]]

    def __repr__(self):
        return f"ProductMeasure(n_atoms={self.n_atoms}, dims={self.block_dims})"


class MarginalVector(tuple):
    """Tuple of K discrete measures, component ``i`` living on ``R^{d_i}``."""

    def __new__(cls, components):
        comps = tuple(components)
        if not comps:
            raise InputError("marginal vector must be nonempty", field="marginals")
        for c in comps:
            if not isinstance(c, DiscreteMeasure):
                raise InputError("marginal components must be DiscreteMeasure", field="marginals")
        return super().__new__(cls, comps)

    @property
    def block_dims(self):
        return tuple(c.dim for c in self)

    def translate(self, t):
        return MarginalVector(c.translate(np.full(c.dim, t)) for c in self)


def _check_spec(spec, dim):
    if spec.dim != dim:
        raise InputError(f"point dimension {dim} does not match spec dimension {spec.dim}")


def ground_distance(x, y, spec):
    """Separable product distance between two points.

    ``(sum_i ||x_i - y_i||_p^p)^(1/p)``, or ``max_i ||x_i - y_i||_inf`` for
    ``p = inf``.

    >>> ground_distance([0, 0], [1, 1], MetricSpec(1, (1, 1)))
    2.0
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch {x.shape} vs {y.shape}")
    _check_spec(spec, x.shape[0])
    diff = np.abs(x - y)
    if spec.is_inf:
        return float(max(diff[s].max() for s in spec.block_slices()))
    p = spec.p
    total = math.fsum(math.fsum(diff[s] ** p) for s in spec.block_slices())
    return total ** (1.0 / p)


def pairwise_cost(X, Y, spec):
    """Matrix of ``d(x, y)^p`` (finite p) or ``d(x, y)`` (p = inf).

    With per-block l_p norms the separable metric equals the l_p norm of the
    full coordinate difference, which is what is computed here.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"dimension mismatch {X.shape[1]} vs {Y.shape[1]}")
    _check_spec(spec, X.shape[1])
    diff = np.abs(X[:, None, :] - Y[None, :, :])
    if spec.is_inf:
        return diff.max(axis=2)
    if spec.p == 1.0:
        return diff.sum(axis=2)
    if spec.p == 2.0:
        return (diff * diff).sum(axis=2)
    return (diff**spec.p).sum(axis=2)


def marginal(m, i):
    """Pushforward of ``m`` under projection onto block ``i`` (0-based)."""
    if not 0 <= i < m.K:
        raise InputError(f"block index {i} out of range for K={m.K}")
    return DiscreteMeasure(m.block(i), m.weights)


def marginals(m):
    return MarginalVector(marginal(m, i) for i in range(m.K))


def aggregate(values, p):
    """Combine per-block distances: l_p sum for finite p, max for inf."""
    values = [float(v) for v in values]
    if math.isinf(p):
        return max(values)
    return math.fsum(v**p for v in values) ** (1.0 / p)


def marginal_vector_distance(a, b, spec, ot=None):
    """``(sum_i W_p^p(a_i, b_i))^(1/p)``, or ``max_i W_inf(a_i, b_i)``.

    ``ot`` maps ``(source, target, spec_i)`` to a distance; it defaults to the
    exact solvers in :mod:`shadowproj.ot_exact`.
    """
    if len(a) != len(b) or len(a) != spec.K:
        raise InputError("marginal vectors and spec disagree on K")
    if ot is None:
        from .ot_exact import wasserstein

        ot = wasserstein
    vals = []
    for i, (ai, bi) in enumerate(zip(a, b)):
        vals.append(ot(ai, bi, MetricSpec(spec.p, (spec.block_dims[i],))))
    return aggregate(vals, spec.p)


def sample_indices(weights, n, seed):
    """Inverse-CDF draws of atom indices in construction order."""
    if n < 1:
        raise InputError(f"sample size must be >= 1, got {n}", field="n")
    cdf = np.cumsum(np.asarray(weights, dtype=float))
    cdf[-1] = 1.0
    gen = SplitMix64(seed)
    u = np.array(gen.uniforms(n))
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample_empirical(m, n, seed):
    """Empirical measure of ``n`` i.i.d. draws from ``m``.

    Returns the same kind as ``m``. Repeated draws are merged, so weights are
    multiples of ``1/n``.
    """
    idx = sample_indices(m.weights, n, seed)
    counts = np.bincount(idx, minlength=m.n_atoms)
    keep = np.nonzero(counts)[0]
    base = DiscreteMeasure(m.atoms[keep], counts[keep] / float(n))
    if isinstance(m, ProductMeasure):
        return ProductMeasure(base, m.block_dims)
    return base


# -- JSON ------------------------------------------------------------------


def measure_to_dict(m):
    dims = list(m.block_dims) if isinstance(m, ProductMeasure) else [m.dim]
    return {
        "dims": dims,
        "atoms": m.atoms.tolist(),
        "weights": m.weights.tolist(),
    }


def measure_from_dict(d, source="<dict>"):
    """Parse the measure JSON schema.

    ``{"dims": [d_1, ..., d_K], "atoms": [[...], ...], "weights": [...]}``;
    ``weights`` may be omitted for a uniform measure. A single-block measure
    is returned as :class:`DiscreteMeasure`, otherwise :class:`ProductMeasure`.
    """
    if not isinstance(d, dict):
        raise InputError("measure document must be an object", file=source)
    for key in ("dims", "atoms"):
        if key not in d:
            raise InputError(f"missing field {key!r}", file=source, field=key)
    try:
        dims = [int(x) for x in d["dims"]]
        atoms = np.array(d["atoms"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc), file=source, field="atoms") from exc
    if atoms.ndim != 2 or atoms.shape[1] != sum(dims):
        raise InputError(
            f"atoms must be rows of length {sum(dims)}", file=source, field="atoms"
        )
    try:
        base = DiscreteMeasure(atoms, d.get("weights"))
    except InputError as exc:
        raise InputError(exc.message, file=source, field=exc.field) from None
    if len(dims) == 1:
        return base
    return ProductMeasure(base, dims)


def save_measure(m, path):
    with open(path, "w") as fh:
        json.dump(measure_to_dict(m), fh)
        fh.write("\n")


def load_measure(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(str(exc), file=str(path)) from exc
    return measure_from_dict(doc, source=str(path))


def as_product(m):
    """View a single-block measure as a K=1 product measure."""
    if isinstance(m, ProductMeasure):
        return m
    return ProductMeasure(m, (m.dim,))


def grid_measure(axes, density=None):
    """Tensor grid with weights proportional to ``density`` (uniform default).

    ``axes`` lists one 1-D coordinate array per block. Stand-in for an
    absolutely continuous measure with density bounded above and below.
    """
    mesh = np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")
    atoms = np.stack([g.reshape(-1) for g in mesh], axis=1)
    if density is None:
        w = np.ones(atoms.shape[0])
    else:
        w = np.array([density(a) for a in atoms], dtype=float)
        if np.any(w <= 0):
            raise InputError("grid density must be strictly positive", field="density")
    w = w / math.fsum(w)
    return ProductMeasure(DiscreteMeasure(atoms, w), (1,) * len(axes))

"""Reproducible instance generators built on the SplitMix64 stream."""

import math

import numpy as np

from ._rng import SplitMix64, mix_seed
from .measures import DiscreteMeasure, MarginalVector, ProductMeasure, grid_measure


def _measure(gen, max_atoms, dim, levels):
    n = 1 + int(gen.uniform() * max_atoms)
    if levels:
        atoms = np.array([[math.floor(gen.uniform() * levels) / (levels - 1)
                           for _ in range(dim)] for _ in range(n)])
    else:
        atoms = np.array([[gen.uniform() for _ in range(dim)] for _ in range(n)])
    # collapse duplicates before drawing weights
    atoms = np.unique(atoms, axis=0)
    w = np.array([0.05 + gen.uniform() for _ in range(atoms.shape[0])])
    return DiscreteMeasure(atoms, w / math.fsum(w))


def random_measure(seed, max_atoms=4, dim=1, levels=0):
    """Up to ``max_atoms`` atoms; coordinates on ``levels`` grid values when
    ``levels > 1`` (ties and degeneracy), uniform in [0, 1) otherwise."""
    return _measure(SplitMix64(seed), max_atoms, dim, levels)


def random_product(seed, max_atoms=4, block_dims=(1, 1), levels=0):
    m = random_measure(seed, max_atoms, sum(block_dims), levels)
    return ProductMeasure(m, block_dims)


def random_marginals(seed, max_atoms=4, block_dims=(1, 1), levels=0):
    return MarginalVector(
        random_measure(mix_seed(seed, i), max_atoms, d, levels) for i, d in enumerate(block_dims)
    )


def random_projection_instance(seed, max_atoms=4, block_dims=(1, 1)):
    """``(rho, mu)`` with at most ``max_atoms`` atoms each.

    One instance in three uses uniform coordinates; the others use a 3- or
    4-level lattice so that ties and degenerate plans are common.
    """
    levels = (0, 3, 4)[seed % 3]
    rho = random_product(mix_seed(seed, 101), max_atoms, block_dims, levels)
    mu = random_marginals(mix_seed(seed, 202), max_atoms, block_dims, levels)
    return rho, mu


def worked_instance():
    """Two-atom example: projection value 0.5 for p = 2."""
    rho = ProductMeasure(DiscreteMeasure([[0.0, 0.0], [1.0, 1.0]], None), (1, 1))
    mu = MarginalVector([
        DiscreteMeasure([[0.0], [1.0]], None),
        DiscreteMeasure.dirac([0.5]),
    ])
    return rho, mu


def smooth_density(a):
    return 1.0 + 0.5 * math.sin(3.0 * a[0]) * math.cos(2.0 * a[1])


def reference_instance(grid=8):
    """Grid ``rho`` on [0,1]^2 with a density bounded away from 0 and 8-atom
    marginals with tilted weights; the rate and Hoelder experiments use it."""
    ax = np.linspace(0.0, 1.0, grid)
    rho = grid_measure([ax, ax], smooth_density)
    g = np.linspace(0.05, 0.95, 8)
    mu = MarginalVector([
        DiscreteMeasure(g[:, None], (1 + g) / math.fsum(1 + g)),
        DiscreteMeasure(g[:, None], (2 - g) / math.fsum(2 - g)),
    ])
    return rho, mu


def three_atom_marginals():
    return MarginalVector([
        DiscreteMeasure([[0.2], [0.5], [0.8]], [0.3, 0.4, 0.3]),
        DiscreteMeasure([[0.1], [0.45], [0.9]], [0.25, 0.35, 0.4]),
    ])

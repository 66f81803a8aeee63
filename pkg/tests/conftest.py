import itertools
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


def enumerate_vertices(A, b, c, tol=1e-10):
    """Minimum of ``c @ x`` over ``A x = b, x >= 0`` by trying every basis.

    Independent of the package solvers: rank via SVD, each candidate basis
    solved with least squares and kept when exact and nonnegative.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    r = np.linalg.matrix_rank(A)
    best = np.inf
    for S in itertools.combinations(range(A.shape[1]), r):
        B = A[:, S]
        if np.linalg.matrix_rank(B) < r:
            continue
        xs, *_ = np.linalg.lstsq(B, b, rcond=None)
        if np.max(np.abs(B @ xs - b)) > tol or xs.min() < -tol:
            continue
        best = min(best, float(c[list(S)] @ xs))
    return best


def coupling_lp(a, b, C):
    """Equality form of the two-marginal transport LP."""
    n, m = C.shape
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return A, np.concatenate([a, b]), C.reshape(-1)

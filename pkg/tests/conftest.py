import itertools

import numpy as np
import pytest


def cut_value(edges, weights, x):
    """Total weight of hyperedges with both a 0-vertex and a 1-vertex."""
    total = 0.0
    for e, w in zip(edges, weights):
        vals = {x[v] for v in e}
        if len(vals) == 2:
            total += w
    return total


def all_cuts(n):
    return [np.array(bits, dtype=float) for bits in itertools.product([0, 1], repeat=n)]


def dense_quadratic_forms(A, w):
    """a_j^T (A^T W A)^+ a_j via numpy's pinv; independent of the package's SVD path."""
    A = np.asarray(A.todense() if hasattr(A, "todense") else A, dtype=float)
    M = A.T @ (np.asarray(w)[:, None] * A)
    P = np.linalg.pinv(M, rcond=1e-10, hermitian=True)
    return np.einsum("ij,jk,ik->i", A, P, A)


@pytest.fixture
def rs():
    return np.random.default_rng(20221016)

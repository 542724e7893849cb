"""Leverage scores of row-reweighted matrices.

For a matrix ``A`` and row weights ``w >= 0`` the leverage score of row ``j``
in ``W^{1/2} A`` is

    sigma_j = w_j * a_j^T (A^T W A)^+ a_j.

Two backends produce these: an exact one from a thin SVD of ``W^{1/2} A``,
and a randomized one that projects ``W^{1/2} A (A^T W A)^+`` onto a few random
sign vectors, solving each system with preconditioned conjugate gradients.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import rng
from .errors import InvalidArgument, SolverFailure

EXACT = "exact"
SKETCHED = "sketched"

PINV_RTOL = 1e-12
JL_CONSTANT = 8.0


@dataclass(frozen=True)
class SolverConfig:
    """Backend settings for leverage estimation.

    ``sketch_rows=None`` means ``ceil(8 ln m / delta**2)``; ``cg_max_iter=None``
    means ``max(1000, 2 n)``. ``workers`` only changes how sketch blocks are
    scheduled, never the result.
    """

    mode: str = EXACT
    delta: float = 0.25
    sketch_rows: Optional[int] = None
    cg_tolerance: float = 1e-10
    cg_max_iter: Optional[int] = None
    ridge: float = 0.0
    workers: int = 1
    block_size: int = 64

    def __post_init__(self):
        if self.mode not in (EXACT, SKETCHED):
            raise InvalidArgument(f"unknown solver mode {self.mode!r}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidArgument(f"delta must lie in (0, 1), got {self.delta}")
        if self.sketch_rows is not None and self.sketch_rows < 1:
            raise InvalidArgument("sketch_rows must be at least 1")
        if not self.cg_tolerance > 0:
            raise InvalidArgument("cg_tolerance must be positive")
        if self.cg_max_iter is not None and self.cg_max_iter < 1:
            raise InvalidArgument("cg_max_iter must be at least 1")
        if self.ridge < 0:
            raise InvalidArgument("ridge must be nonnegative")
        if self.workers < 1 or self.block_size < 1:
            raise InvalidArgument("workers and block_size must be positive")

    def rows_for(self, m):
        if self.sketch_rows is not None:
            return self.sketch_rows
        return max(1, math.ceil(JL_CONSTANT * math.log(max(m, 2)) / self.delta**2))

    @property
    def inflation(self):
        """Largest ratio of a successful sketched estimate to the true score."""
        return (1.0 + self.delta) / (1.0 - self.delta)


@dataclass(frozen=True, eq=False)
class LeverageEstimate:
    sigma: np.ndarray
    nu: float
    mode: str
    failure_probability: float = 0.0
    iterations: int = 0


def _check_inputs(A, w):
    A = sp.csr_matrix(A, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (A.shape[0],):
        raise InvalidArgument(f"weights must have shape ({A.shape[0]},), got {w.shape}")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(A.data))):
        raise InvalidArgument("non-finite entries in matrix or weights")
    if np.any(w < 0):
        raise InvalidArgument("row weights must be nonnegative")
    return A, w


@dataclass(frozen=True, eq=False)
class PseudoinverseFactor:
    """``(A^T W A)^+ = B B^T`` with ``B = V_r diag(1/s_r)`` from a thin SVD."""

    basis: np.ndarray
    singular_values: np.ndarray = field(repr=False)

    @property
    def rank(self):
        return self.basis.shape[1]

    def quadratic_forms(self, A):
        """``a_j^T (A^T W A)^+ a_j`` for every row of ``A``."""
        P = np.asarray(sp.csr_matrix(A) @ self.basis)
        return np.einsum("ij,ij->i", P, P)

    def dense(self):
        return self.basis @ self.basis.T


def pinv_factor(A, w, rtol=PINV_RTOL):
    """Factor the Moore-Penrose pseudoinverse of ``A^T W A``.

    Singular values of ``W^{1/2} A`` below ``rtol`` times the largest are
    treated as zero.
    """
    A, w = _check_inputs(A, w)
    active = np.flatnonzero(w > 0)
    n = A.shape[1]
    if len(active) == 0:
        return PseudoinverseFactor(np.zeros((n, 0)), np.zeros(0))
    B = (sp.diags(np.sqrt(w[active])) @ A[active]).toarray()
    _, s, vt = np.linalg.svd(B, full_matrices=False)
    keep = s > rtol * s[0] if len(s) and s[0] > 0 else np.zeros(len(s), dtype=bool)
    s = s[keep]
    return PseudoinverseFactor(vt[keep].T / s, s)


def leverage_exact(A, w) -> LeverageEstimate:
    """Exact leverage scores ``sigma(W^{1/2} A)``; rows with ``w_j = 0`` get 0."""
    A, w = _check_inputs(A, w)
    q = pinv_factor(A, w).quadratic_forms(A)
    sigma = w * q
    return LeverageEstimate(sigma, float(sigma.sum()), EXACT, 0.0)


def jl_failure_probability(rows, count, delta):
    """Union bound over ``count`` vectors for a ``rows``-row Rademacher sketch.

    Each vector's squared norm leaves ``[1 - delta, 1 + delta]`` with
    probability at most ``2 exp(-rows (delta^2/2 - delta^3/3) / 2)``.
    """
    if count == 0:
        return 0.0
    per_vector = 2.0 * math.exp(-rows * (delta**2 / 2 - delta**3 / 3) / 2)
    return min(1.0, count * per_vector)


def block_pcg(M, Y, tol, maxiter, precond=None):
    """Independent preconditioned CG solves of ``M z = y`` for every column of ``Y``.

    ``M`` must be symmetric positive semidefinite and each column of ``Y`` in
    its range. ``precond`` is the diagonal of a Jacobi preconditioner.
    Returns the solutions and the iteration count; raises ``SolverFailure``
    when some column's relative residual stays above ``tol``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    X = np.zeros_like(Y)
    ynorm = np.sqrt(np.einsum("ij,ij->j", Y, Y))
    live = ynorm > 0
    if not live.any():
        return X, 0
    scale = np.where(live, ynorm, 1.0)
    dinv = np.ones(Y.shape[0]) if precond is None else precond
    R = Y.copy()
    Z = dinv[:, None] * R
    P = Z.copy()
    rz = np.einsum("ij,ij->j", R, Z)
    res = np.zeros(Y.shape[1])
    for it in range(1, maxiter + 1):
        MP = np.asarray(M @ P)
        pmp = np.einsum("ij,ij->j", P, MP)
        ok = live & (pmp > 0)
        alpha = np.divide(rz, pmp, out=np.zeros_like(rz), where=ok)
        X += alpha * P
        R -= alpha * MP
        res = np.sqrt(np.einsum("ij,ij->j", R, R)) / scale
        live &= res > tol
        if not live.any():
            return X, it
        Z = dinv[:, None] * R
        rz_new = np.einsum("ij,ij->j", R, Z)
        beta = np.divide(rz_new, rz, out=np.zeros_like(rz), where=live & (rz > 0))
        P = Z + beta * P
        P[:, ~live] = 0.0
        rz = rz_new
    raise SolverFailure("conjugate gradient did not converge", maxiter, float(res.max()))


def leverage_sketched(A, w, cfg: SolverConfig, key) -> LeverageEstimate:
    """Randomized overestimates of ``sigma(W^{1/2} A)``.

    Row ``s`` of the sketch has entries ``rademacher(derive(key, s), j)``
    scaled by ``1/sqrt(rows)``. Raw estimates are divided by ``1 - delta`` and
    capped at ``1 / (1 - delta)``, so they dominate the true scores whenever
    the sketch preserves every relevant norm within ``1 +- delta``.
    """
    A, w = _check_inputs(A, w)
    m, n = A.shape
    active = np.flatnonzero(w > 0)
    rows = cfg.rows_for(m)
    nu = cfg.inflation * n
    sigma = np.zeros(m)
    if len(active) == 0:
        return LeverageEstimate(sigma, nu, SKETCHED, 0.0)

    Aa = A[active]
    wa = w[active]
    WA = sp.csr_matrix(sp.diags(np.sqrt(wa)) @ Aa)
    M = sp.csr_matrix(WA.T @ WA)
    if cfg.ridge > 0:
        M = sp.csr_matrix(M + cfg.ridge * sp.identity(n))
    diag = M.diagonal()
    precond = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)
    maxiter = cfg.cg_max_iter or max(1000, 2 * n)
    row_keys = np.array([rng.derive(key, "sketch-row", s) for s in range(rows)], dtype=np.uint64)
    WAt = sp.csr_matrix(WA.T)

    def run_block(start):
        keys = row_keys[start:start + cfg.block_size]
        signs = rng.rademacher(keys[:, None], active[None, :])
        Y = np.asarray(WAt @ signs.T)
        Z, its = block_pcg(M, Y, cfg.cg_tolerance, maxiter, precond)
        AZ = np.asarray(Aa @ Z)
        return np.einsum("ij,ij->i", AZ, AZ), its

    starts = range(0, rows, cfg.block_size)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run_block, starts))
    else:
        parts = [run_block(s) for s in starts]

    acc = np.zeros(len(active))
    for contrib, _ in parts:
        acc += contrib
    est = wa * acc / rows
    cap = 1.0 / (1.0 - cfg.delta)
    sigma[active] = np.minimum(est / (1.0 - cfg.delta), cap)
    fail = jl_failure_probability(rows, len(active), cfg.delta)
    iters = max(its for _, its in parts)
    return LeverageEstimate(sigma, nu, SKETCHED, fail, iters)


class Overestimator:
    """Leverage-score overestimator bound to one matrix.

    Call it with row weights ``w``. Call ``c`` of a sketched overestimator uses
    the key ``derive(seed, "leverage-call", c)``, so two overestimators built
    with the same seed return identical sequences.
    """

    def __init__(self, A, cfg: SolverConfig = SolverConfig(), seed=0):
        self.A = sp.csr_matrix(A, dtype=np.float64)
        self.cfg = cfg
        self.seed = int(seed)
        self.calls = 0

    @property
    def bound(self):
        """Certified bound on the 1-norm of every output, if fixed in advance."""
        if self.cfg.mode == SKETCHED:
            return self.cfg.inflation * self.A.shape[1]
        return None

    def __call__(self, w) -> LeverageEstimate:
        c = self.calls
        self.calls += 1
        if self.cfg.mode == EXACT:
            return leverage_exact(self.A, w)
        return leverage_sketched(self.A, w, self.cfg, rng.derive(self.seed, "leverage-call", c))


def make_overestimator(A, cfg: SolverConfig = SolverConfig(), seed=0):
    return Overestimator(A, cfg, seed)

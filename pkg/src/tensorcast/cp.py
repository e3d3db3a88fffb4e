"""CP decomposition by alternating least squares, with and without a mask."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .tensor import (
    as_mask,
    as_tensor,
    khatri_rao,
    masked_error,
    matricize,
    normalized_error,
    rank_bound,
    reconstruct,
)

log = logging.getLogger(__name__)

PINV_RCOND = 1e-12
# below this the fit is exact to working precision and relative changes are noise
EXACT_FIT = 1e-13


@dataclass(frozen=True)
class FactorSet:
    """CP factors ``A`` (F x R), ``B`` (T x R) and ``C`` (N x R).

    Solvers return factors whose ``A`` and ``B`` columns have unit norm; all
    magnitude lives in ``C``, the temporal factor that gets forecast.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        ranks = {np.shape(self.A)[1], np.shape(self.B)[1], np.shape(self.C)[1]}
        if len(ranks) != 1:
            raise ValueError(f"factor matrices have different column counts: {sorted(ranks)}")

    @property
    def rank(self):
        return self.A.shape[1]

    @property
    def dims(self):
        return self.A.shape[0], self.B.shape[0], self.C.shape[0]

    def __iter__(self):
        return iter((self.A, self.B, self.C))

    def with_temporal(self, C):
        """Same spatial factors, different temporal factor (e.g. a forecast)."""
        return FactorSet(self.A, self.B, np.asarray(C, dtype=np.float64))


@dataclass(frozen=True)
class AlsOptions:
    """Stopping rule, initialization seed and optional ridge damping.

    ``ridge`` adds ``ridge * mean(diag(G))`` to the diagonal of every normal
    matrix ``G``.  It is scale-free and keeps over-factored fits from drifting
    into degenerate, mutually cancelling components; 0 gives plain ALS.
    """

    max_sweeps: int = 500
    rel_tol: float = 1e-6
    seed: int = 0
    ridge: float = 0.0

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


def random_factors(dims, rank, seed):
    """Uniform [0, 1) initial factors, drawn A then B then C from one generator."""
    rng = np.random.default_rng(seed)
    return FactorSet(*(rng.random((d, rank)) for d in dims))


def normalize(fs):
    """Scale columns of A and B to unit norm, pushing the scale into C.

    A component whose A or B column is exactly zero contributes nothing; its
    columns become constant unit vectors and its C column zero, so the
    tensor is unchanged.
    """
    A, B, C = (np.array(f, dtype=np.float64) for f in fs)
    na = np.linalg.norm(A, axis=0)
    nb = np.linalg.norm(B, axis=0)
    dead = (na == 0) | (nb == 0)
    if dead.any():
        A[:, dead] = 1.0
        B[:, dead] = 1.0
        C[:, dead] = 0.0
        na = np.linalg.norm(A, axis=0)
        nb = np.linalg.norm(B, axis=0)
    return FactorSet(A / na, B / nb, C * (na * nb))


def _check_rank(dims, rank):
    bound = rank_bound(dims)
    if not 1 <= rank <= bound:
        raise ValueError(f"rank {rank} outside [1, {bound}] for a tensor of shape {tuple(dims)}")


def _converged(history, rel_tol):
    if history[-1] <= EXACT_FIT:
        return True
    if len(history) < 2:
        return False
    prev, cur = history[-2], history[-1]
    return abs(prev - cur) <= rel_tol * prev


def _damp(grams, ridge):
    if ridge == 0:
        return grams
    rank = grams.shape[-1]
    level = ridge * np.trace(grams, axis1=-2, axis2=-1) / rank
    return grams + level[..., None, None] * np.eye(rank)


def _solve(unfolded, kr, gram, ridge):
    return unfolded @ kr @ np.linalg.pinv(_damp(gram, ridge), rcond=PINV_RCOND, hermitian=True)


def cp_als(x, rank, opts=None, init=None):
    """Rank-``rank`` CP fit of ``x`` by plain ALS.

    Each sweep updates A, B and C in turn from the normal equations of the
    matching unfolding, then renormalizes.  Returns the factors and the
    normalized fit error after every sweep.
    """
    opts = opts or AlsOptions()
    x = as_tensor(x)
    _check_rank(x.shape, rank)
    if not np.any(x):
        raise ValueError("cannot decompose an all-zero tensor")
    X1, X2, X3 = (matricize(x, m) for m in (1, 2, 3))
    if init is None:
        A, B, C = random_factors(x.shape, rank, opts.seed)
    else:
        if init.rank != rank or init.dims != x.shape:
            raise ValueError("initial factors do not match tensor shape and rank")
        A, B, C = init

    history = []
    for _ in range(opts.max_sweeps):
        A = _solve(X1, khatri_rao(C, B), (C.T @ C) * (B.T @ B), opts.ridge)
        B = _solve(X2, khatri_rao(C, A), (C.T @ C) * (A.T @ A), opts.ridge)
        C = _solve(X3, khatri_rao(B, A), (B.T @ B) * (A.T @ A), opts.ridge)
        A, B, C = normalize(FactorSet(A, B, C))
        history.append(normalized_error(x, reconstruct((A, B, C))))
        if _converged(history, opts.rel_tol):
            break
    return FactorSet(A, B, C), history


def _masked_update(unfolded, mask, kr, mode, ridge):
    """Row-wise least squares over observed columns only.

    Row i solves ``min_a || m_i * (x_i - kr a) ||``; its normal matrix is
    ``sum_j m_ij k_j k_j^T``, assembled for all rows in one product.
    """
    counts = mask.sum(axis=1)
    rank = kr.shape[1]
    short = np.flatnonzero(counts < rank)
    if short.size:
        i = int(short[0])
        raise ValueError(
            f"mode-{mode} row {i} has {int(counts[i])} observed entries, fewer than the rank {rank}"
        )
    w = mask.astype(np.float64)
    outer = (kr[:, :, None] * kr[:, None, :]).reshape(kr.shape[0], rank * rank)
    grams = (w @ outer).reshape(-1, rank, rank)
    rhs = (w * unfolded) @ kr
    return np.einsum("irs,is->ir", np.linalg.pinv(_damp(grams, ridge), rcond=PINV_RCOND, hermitian=True), rhs)


def mean_fill(x, mask):
    """Copy of ``x`` with unobserved entries replaced by the observed mean."""
    filled = np.array(x, dtype=np.float64)
    filled[~mask] = x[mask].mean()
    return filled


def masked_cp_als(x, mask, rank, opts=None, init=None):
    """CP fit that only trusts the entries where ``mask`` is true.

    Without ``init`` the factors start from a plain CP fit of ``x`` with the
    missing entries mean-filled.  Each sweep then solves the masked
    least-squares problem for A, B and C exactly, row by row.  The history
    holds the normalized error over observed entries.
    """
    opts = opts or AlsOptions()
    x = as_tensor(x)
    mask = as_mask(mask, x.shape)
    _check_rank(x.shape, rank)
    if not np.any(x[mask]):
        raise ValueError("observed entries are all zero")
    X1, X2, X3 = (matricize(x, m) for m in (1, 2, 3))
    M1, M2, M3 = (matricize(mask, m) > 0.5 for m in (1, 2, 3))
    if init is None:
        init, _ = cp_als(mean_fill(x, mask), rank, opts)
    elif init.rank != rank or init.dims != x.shape:
        raise ValueError("initial factors do not match tensor shape and rank")
    A, B, C = init

    history = []
    for _ in range(opts.max_sweeps):
        A = _masked_update(X1, M1, khatri_rao(C, B), 1, opts.ridge)
        B = _masked_update(X2, M2, khatri_rao(C, A), 2, opts.ridge)
        C = _masked_update(X3, M3, khatri_rao(B, A), 3, opts.ridge)
        A, B, C = normalize(FactorSet(A, B, C))
        history.append(masked_error(x, reconstruct((A, B, C)), mask))
        if _converged(history, opts.rel_tol):
            break
    return FactorSet(A, B, C), history


def rank_sweep(x, ranks, opts=None):
    """Normalized reconstruction error for each rank, each fitted from scratch."""
    ranks = list(ranks)
    if not ranks:
        raise ValueError("ranks must be nonempty")
    out = []
    for r in ranks:
        _, history = cp_als(x, r, opts)
        log.debug("rank %d: e_cpd=%.3e after %d sweeps", r, history[-1], len(history))
        out.append((r, history[-1]))
    return out

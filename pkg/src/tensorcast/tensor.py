"""Dense 3-way tensor helpers.

Tensors are plain ``float64`` numpy arrays of shape ``(F, T, N)``
(frequency bin, time-of-day slot, day); masks are ``bool`` arrays of the same
shape with ``True`` marking an observed entry.

Unfoldings follow the Kolda & Bader column ordering, which is what makes

    X_(1) = A (C kr B)^T,   X_(2) = B (C kr A)^T,   X_(3) = C (B kr A)^T

hold literally (``kr`` = Khatri-Rao).  For the mode-1 unfolding the column
index of entry ``(f, t, n)`` is ``t + T*n``; for mode 2 it is ``f + F*n`` and
for mode 3 it is ``f + F*t``.  The canonical linear order of a tensor (used by
the text format) is the same "first index fastest" order, i.e.
``f + F*t + F*T*n``.
"""

from __future__ import annotations

import numpy as np

# mode -> axis order that puts the unfolded axis first while keeping the
# remaining axes in increasing order
_AXES = {1: (0, 1, 2), 2: (1, 0, 2), 3: (2, 0, 1)}


def as_tensor(x, name="tensor"):
    """Return ``x`` as a float64 3-way array, raising on anything else."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be 3-way, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: {arr.shape}")
    return arr


def as_mask(m, shape=None):
    arr = np.asarray(m)
    if arr.dtype != np.bool_:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("mask entries must be 0/1 or boolean")
        arr = arr.astype(bool)
    if arr.ndim != 3:
        raise ValueError(f"mask must be 3-way, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"mask shape {arr.shape} does not match tensor shape {tuple(shape)}")
    return arr


def _check_mode(mode):
    if mode not in _AXES:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def unfolding_shape(mode, dims):
    _check_mode(mode)
    F, T, N = dims
    rows = dims[mode - 1]
    return rows, (F * T * N) // rows


def matricize(x, mode):
    """Mode-``mode`` unfolding (1-based) of a 3-way tensor."""
    _check_mode(mode)
    x = as_tensor(x)
    return np.reshape(np.transpose(x, _AXES[mode]), (x.shape[mode - 1], -1), order="F")


def fold(m, mode, dims):
    """Inverse of :func:`matricize`."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError(f"dims must have three entries, got {dims}")
    m = np.asarray(m, dtype=np.float64)
    expected = unfolding_shape(mode, dims)
    if m.shape != expected:
        raise ValueError(f"cannot fold a {m.shape} matrix in mode {mode} into {dims}; expected {expected}")
    axes = _AXES[mode]
    permuted = tuple(dims[a] for a in axes)
    return np.transpose(np.reshape(m, permuted, order="F"), np.argsort(axes))


def khatri_rao(u, v):
    """Column-wise Kronecker product; column r is ``kron(u[:, r], v[:, r])``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 2 or v.ndim != 2:
        raise ValueError("khatri_rao expects two matrices")
    if u.shape[1] != v.shape[1]:
        raise ValueError(f"column counts differ: {u.shape[1]} vs {v.shape[1]}")
    return np.einsum("ir,jr->ijr", u, v).reshape(u.shape[0] * v.shape[0], u.shape[1])


def reconstruct(factors):
    """Full tensor ``sum_r a_r o b_r o c_r`` from factor matrices ``(A, B, C)``."""
    A, B, C = (np.asarray(f, dtype=np.float64) for f in factors)
    if not (A.ndim == B.ndim == C.ndim == 2):
        raise ValueError("factors must be matrices")
    if not (A.shape[1] == B.shape[1] == C.shape[1]):
        raise ValueError(f"factor ranks differ: {A.shape[1]}, {B.shape[1]}, {C.shape[1]}")
    return fold(A @ khatri_rao(C, B).T, 1, (A.shape[0], B.shape[0], C.shape[0]))


def normalized_error(x, xhat):
    """``||x - xhat||_F / ||x||_F``."""
    x = as_tensor(x)
    xhat = as_tensor(xhat, "xhat")
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    ref = np.linalg.norm(x)
    if ref == 0:
        raise ValueError("reference tensor has zero norm")
    return float(np.linalg.norm(x - xhat) / ref)


def masked_error(x, xhat, mask):
    """Normalized error restricted to the entries where ``mask`` is true."""
    x = as_tensor(x)
    mask = as_mask(mask, x.shape)
    ref = np.linalg.norm(x[mask])
    if ref == 0:
        raise ValueError("reference tensor has zero norm on the selected entries")
    return float(np.linalg.norm((x - xhat)[mask]) / ref)


def rank_bound(dims):
    """Upper bound ``min(FT, FN, TN)`` on the CP rank of an ``F x T x N`` tensor."""
    F, T, N = dims
    return min(F * T, F * N, T * N)

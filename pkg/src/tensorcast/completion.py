"""Iterative tensor completion: impute from the CP model, refit, repeat."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cp import AlsOptions, FactorSet, cp_als, masked_cp_als, mean_fill
from .tensor import as_mask, as_tensor, masked_error, reconstruct

log = logging.getLogger(__name__)

VARIANTS = ("plain", "masked")


@dataclass(frozen=True)
class CompletionOptions:
    rank: int = 10
    cp_variant: str = "masked"
    max_outer_iters: int = 50
    outer_rel_tol: float = 1e-4
    als: AlsOptions = field(default_factory=AlsOptions)

    def __post_init__(self):
        if self.cp_variant not in VARIANTS:
            raise ValueError(f"cp_variant must be one of {VARIANTS}, got {self.cp_variant!r}")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if not self.outer_rel_tol > 0:
            raise ValueError("outer_rel_tol must be positive")


@dataclass
class CompletionResult:
    tensor: np.ndarray
    factors: FactorSet
    # rows of (iteration, observed_error, hidden_error or None); iteration 0
    # is the initial CP fit before any imputation round
    history: list
    converged: bool


def impute(x_incomplete, mask, factors):
    """Keep observed entries, take missing ones from the CP model."""
    x = as_tensor(x_incomplete)
    mask = as_mask(mask, x.shape)
    model = reconstruct(factors)
    if model.shape != x.shape:
        raise ValueError(f"factor shape {model.shape} does not match tensor shape {x.shape}")
    return np.where(mask, x, model)


def _fit(x, mask, opts, init):
    if opts.cp_variant == "masked":
        return masked_cp_als(x, mask, opts.rank, opts.als, init=init)[0]
    return cp_als(x, opts.rank, opts.als, init=init)[0]


def complete(x_incomplete, mask, opts=None, truth=None):
    """Fill the missing entries of ``x_incomplete``.

    ``truth``, when given, is only used to report the error on the hidden
    entries; it never influences the fit.
    """
    opts = opts or CompletionOptions()
    x = as_tensor(x_incomplete)
    mask = as_mask(mask, x.shape)
    hidden = ~mask
    if truth is not None:
        truth = as_tensor(truth, "truth")

    def row(it, fs):
        xhat = reconstruct(fs)
        obs = masked_error(x, xhat, mask)
        hid = masked_error(truth, xhat, hidden) if truth is not None and hidden.any() else None
        return (it, obs, hid)

    if not hidden.any():
        fs, _ = cp_als(x, opts.rank, opts.als)
        return CompletionResult(x.copy(), fs, [row(0, fs)], True)

    current = mean_fill(x, mask)
    fs = _fit(current, mask, opts, None)
    history = [row(0, fs)]
    converged = False
    for it in range(1, opts.max_outer_iters + 1):
        filled = impute(x, mask, fs)
        change = np.linalg.norm(filled[hidden] - current[hidden])
        scale = np.linalg.norm(current[hidden])
        current = filled
        fs = _fit(current, mask, opts, fs)
        history.append(row(it, fs))
        if change <= opts.outer_rel_tol * max(scale, np.finfo(float).tiny):
            converged = True
            break
    if not converged:
        log.warning("completion stopped after %d outer iterations without converging", opts.max_outer_iters)
    return CompletionResult(impute(x, mask, fs), fs, history, converged)

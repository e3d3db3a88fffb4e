"""Joint completion and forecasting of 3-way time-series tensors.

CP decomposition extracts a few temporal factors from a frequency x
time-of-day x day tensor; those factors are forecast with a small LSTM (or
an AR baseline) and the future tensor is rebuilt from the forecasts.
"""

from .tensor import (
    fold,
    khatri_rao,
    matricize,
    normalized_error,
    reconstruct,
)
from .cp import AlsOptions, FactorSet, cp_als, masked_cp_als, rank_sweep
from .completion import CompletionOptions, complete, impute

__all__ = [
    "AlsOptions",
    "CompletionOptions",
    "FactorSet",
    "complete",
    "cp_als",
    "fold",
    "impute",
    "khatri_rao",
    "masked_cp_als",
    "matricize",
    "normalized_error",
    "rank_sweep",
    "reconstruct",
]

__version__ = "0.1.0"

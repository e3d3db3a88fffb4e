"""Univariate predictors: least-squares AR and a thin LSTM wrapper.

Both follow the same small protocol: ``fit(series)`` then
``forecast(horizon)``, the forecast continuing right after the fitted series.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np

from . import lstm


@dataclass(frozen=True)
class ArModel:
    """``x_t = intercept + sum_k coef[k] * x_{t-1-k}``."""

    coef: np.ndarray
    intercept: float

    @property
    def order(self):
        return len(self.coef)


def _lag_matrix(s, p):
    n = len(s)
    # row for target index t holds x_{t-1}, ..., x_{t-p}, 1
    lags = np.column_stack([s[p - 1 - k:n - 1 - k] for k in range(p)])
    return np.column_stack([lags, np.ones(n - p)]), s[p:]


def ar_fit(series, p=7):
    """Ordinary least squares over every length-``p`` lag window, with intercept.

    Rank-deficient designs (e.g. a constant series) get the minimum-norm
    solution rather than an error.
    """
    if p < 1:
        raise ValueError("order must be >= 1")
    s = np.asarray(series, dtype=np.float64).ravel()
    if len(s) < 2 * p:
        raise ValueError(f"series of length {len(s)} too short for order {p} (need {2 * p})")
    design, target = _lag_matrix(s, p)
    beta = np.linalg.pinv(design, rcond=1e-12) @ target
    return ArModel(beta[:p], float(beta[p]))


def ar_forecast(model, context, horizon):
    """Recursive forecast, feeding each prediction back in as the newest lag."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    p = model.order
    hist = list(np.asarray(context, dtype=np.float64).ravel()[::-1][:p])
    if len(hist) < p:
        raise ValueError(f"context needs at least {p} values")
    out = []
    for _ in range(horizon):
        nxt = model.intercept + float(np.dot(model.coef, hist))
        out.append(nxt)
        hist = [nxt] + hist[:-1]
    return np.array(out)


class Predictor(Protocol):
    min_length: int

    def fit(self, series): ...

    def forecast(self, horizon): ...


class ArPredictor:
    def __init__(self, order=7):
        self.order = order
        self.min_length = 2 * order
        self.model = None
        self._context = None

    def fit(self, series):
        self._context = np.asarray(series, dtype=np.float64).ravel()
        self.model = ar_fit(self._context, self.order)
        return self

    def forecast(self, horizon):
        return ar_forecast(self.model, self._context, horizon)


class LstmPredictor:
    min_length = 3

    def __init__(self, cfg=None):
        self.cfg = cfg or lstm.TrainConfig()
        self.model = None
        self.loss_history = None
        self._context = None

    def fit(self, series):
        self._context = np.asarray(series, dtype=np.float64).ravel()
        self.model, self.loss_history = lstm.train_lstm(self._context, self.cfg)
        return self

    def forecast(self, horizon):
        return lstm.forecast(self.model, self._context, horizon)


def make_predictor(name, seed=0, ar_order=7, train=None):
    """Predictor by name; ``seed`` overrides the LSTM config's seed."""
    if name == "ar":
        return ArPredictor(ar_order)
    if name == "lstm":
        cfg = train or lstm.TrainConfig()
        return LstmPredictor(replace(cfg, seed=seed))
    raise ValueError(f"unknown predictor {name!r}; expected 'ar' or 'lstm'")

"""Decompose-then-forecast prediction of future tensor slices.

In ``cpd`` mode the learning tensor is CP-decomposed, each temporal factor
column is forecast independently and the future slices are rebuilt from the
spatial factors and the forecast columns.  ``raw`` mode is the baseline that
forecasts every mode-3 fiber on its own.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import make_predictor
from .completion import CompletionOptions, complete
from .cp import AlsOptions, FactorSet, cp_als
from .lstm import TrainConfig
from .tensor import as_mask, as_tensor, rank_bound, reconstruct

log = logging.getLogger(__name__)

MODES = ("cpd", "raw")
# ridge damping for the pipeline's CP fits; undamped ALS over-factors the
# rank-10 default into cancelling components that cannot be forecast one by one
PIPELINE_RIDGE = 3e-2
PREDICTORS = ("lstm", "ar")


@dataclass(frozen=True)
class PipelineConfig:
    rank: int = 10
    n_learn: int = 80
    n_predict: int = 20
    predictor: str = "lstm"
    mode: str = "cpd"
    als: AlsOptions = field(default_factory=lambda: AlsOptions(ridge=PIPELINE_RIDGE))
    train: TrainConfig = field(default_factory=TrainConfig)
    completion: CompletionOptions | None = None
    ar_order: int = 7
    # base seed for predictors; series k uses seed + k
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.predictor not in PREDICTORS:
            raise ValueError(f"predictor must be one of {PREDICTORS}, got {self.predictor!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_learn < 1 or self.n_predict < 1:
            raise ValueError("n_learn and n_predict must be >= 1")
        if self.n_learn < 2 * self.min_context:
            raise ValueError(
                f"n_learn={self.n_learn} too short for {self.predictor} (need {2 * self.min_context})"
            )

    @property
    def min_context(self):
        return self.ar_order if self.predictor == "ar" else 2

    def completion_options(self):
        if self.completion is not None:
            return self.completion
        return CompletionOptions(rank=self.rank, als=self.als)

    def as_dict(self):
        return asdict(self)


@dataclass
class PredictionReport:
    predicted: np.ndarray
    e_p: float | None
    cpd_time: float
    learning_time: float
    total_time: float
    factors: FactorSet | None = None
    completion_history: list | None = None
    config: dict | None = None

    def summary(self):
        """JSON-ready metrics, timings and config echo (no arrays)."""
        out = {
            "e_p": self.e_p,
            "error_percent": None if self.e_p is None else 100.0 * self.e_p,
            "cpd_time": self.cpd_time,
            "learning_time": self.learning_time,
            "total_time": self.total_time,
            "predicted_shape": list(self.predicted.shape),
            "config": self.config,
        }
        if self.completion_history is not None:
            out["completion_history"] = [
                {"iteration": it, "observed_error": obs, "hidden_error": hid}
                for it, obs, hid in self.completion_history
            ]
        return out

    def to_json(self):
        return json.dumps(self.summary(), indent=2, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, np.ndarray)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def prediction_error(x_true, x_pred):
    """``sum (x - xhat)^2 / sum x^2`` over all entries."""
    x_true = np.asarray(x_true, dtype=np.float64)
    x_pred = np.asarray(x_pred, dtype=np.float64)
    if x_true.shape != x_pred.shape:
        raise ValueError(f"shape mismatch: {x_true.shape} vs {x_pred.shape}")
    denom = float(np.sum(x_true ** 2))
    if denom == 0:
        raise ValueError("true tensor is all zero")
    return float(np.sum((x_true - x_pred) ** 2) / denom)


def split_learn_predict(x, n_learn):
    """First ``n_learn`` days for learning, the rest for testing."""
    x = as_tensor(x)
    N = x.shape[2]
    if not 1 <= n_learn < N:
        raise ValueError(f"n_learn must lie in [1, {N - 1}], got {n_learn}")
    return x[:, :, :n_learn].copy(), x[:, :, n_learn:].copy()


def forecast_series(series, horizon, cfg):
    """Fit one predictor per row of ``series`` and forecast ``horizon`` steps.

    Row ``k`` uses seed ``cfg.seed + k`` so results do not depend on the
    thread count.
    """
    series = np.asarray(series, dtype=np.float64)

    def one(k):
        p = make_predictor(cfg.predictor, seed=cfg.seed + k, ar_order=cfg.ar_order, train=cfg.train)
        return p.fit(series[k]).forecast(horizon)

    if cfg.threads > 1 and len(series) > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            rows = list(pool.map(one, range(len(series))))
    else:
        rows = [one(k) for k in range(len(series))]
    return np.array(rows).reshape(len(series), horizon)


def _check_rank(dims, rank):
    if not 1 <= rank <= rank_bound(dims):
        raise ValueError(f"rank {rank} outside [1, {rank_bound(dims)}] for shape {tuple(dims)}")


def _predict(x_learn, factors, cfg, x_test, cpd_time, start, history=None):
    F, T, _ = x_learn.shape
    t0 = time.perf_counter()
    if cfg.mode == "cpd":
        C_P = forecast_series(factors.C.T, cfg.n_predict, cfg).T
        learning_time = time.perf_counter() - t0
        predicted = reconstruct(factors.with_temporal(C_P))
    else:
        fibers = x_learn.reshape(F * T, -1)
        predicted = forecast_series(fibers, cfg.n_predict, cfg).reshape(F, T, cfg.n_predict)
        learning_time = time.perf_counter() - t0
    e_p = None
    if x_test is not None:
        x_test = as_tensor(x_test, "x_test")
        if x_test.shape != predicted.shape:
            raise ValueError(f"test tensor shape {x_test.shape} != predicted shape {predicted.shape}")
        e_p = prediction_error(x_test, predicted)
    return PredictionReport(
        predicted=predicted,
        e_p=e_p,
        cpd_time=cpd_time,
        learning_time=learning_time,
        total_time=time.perf_counter() - start,
        factors=factors,
        completion_history=history,
        config=cfg.as_dict(),
    )


def predict_tensor(x_learn, cfg=None, x_test=None):
    """Forecast ``cfg.n_predict`` future days from a complete learning tensor.

    ``e_p`` is filled in when the true future ``x_test`` is supplied.
    """
    cfg = cfg or PipelineConfig()
    x_learn = as_tensor(x_learn, "x_learn")
    if x_learn.shape[2] != cfg.n_learn:
        raise ValueError(f"learning tensor has {x_learn.shape[2]} days, config says {cfg.n_learn}")
    start = time.perf_counter()
    factors = None
    if cfg.mode == "cpd":
        _check_rank(x_learn.shape, cfg.rank)
        factors, _ = cp_als(x_learn, cfg.rank, cfg.als)
    cpd_time = time.perf_counter() - start
    return _predict(x_learn, factors, cfg, x_test, cpd_time, start)


def joint_complete_predict(x_incomplete, mask, cfg=None, x_test=None, truth=None):
    """Complete a learning tensor with missing entries, then forecast.

    ``truth`` (the full learning tensor) only feeds the hidden-entry column of
    the completion history.
    """
    cfg = cfg or PipelineConfig()
    x = as_tensor(x_incomplete, "x_incomplete")
    mask = as_mask(mask, x.shape)
    if x.shape[2] != cfg.n_learn:
        raise ValueError(f"learning tensor has {x.shape[2]} days, config says {cfg.n_learn}")
    copts = cfg.completion_options()
    _check_rank(x.shape, copts.rank)
    start = time.perf_counter()
    result = complete(x, mask, copts, truth=truth)
    cpd_time = time.perf_counter() - start
    factors = result.factors if cfg.mode == "cpd" else None
    return _predict(result.tensor, factors, cfg, x_test, cpd_time, start, result.history)


def run(x, cfg=None, mask=None, truth_learn=None):
    """Split ``x`` along days, predict the tail and score it.

    ``mask`` (learning days only) switches to joint completion and
    prediction; masked-out learning entries are never read.
    """
    cfg = cfg or PipelineConfig()
    x = as_tensor(x)
    if x.shape[2] != cfg.n_learn + cfg.n_predict:
        raise ValueError(
            f"tensor has {x.shape[2]} days but n_learn + n_predict = {cfg.n_learn + cfg.n_predict}"
        )
    x_learn, x_test = split_learn_predict(x, cfg.n_learn)
    if mask is None:
        return predict_tensor(x_learn, cfg, x_test)
    mask = as_mask(mask, x_learn.shape)
    hidden_view = np.where(mask, x_learn, 0.0)
    return joint_complete_predict(hidden_view, mask, cfg, x_test, truth=x_learn if truth_learn is None else truth_learn)

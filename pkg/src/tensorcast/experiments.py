"""Experiment drivers that produce the rows behind each table and curve."""

from __future__ import annotations

import logging
from dataclasses import replace

from .completion import complete
from .cp import rank_sweep
from .detection import roc
from .pipeline import PipelineConfig, run, split_learn_predict
from .synth import generate_mask

log = logging.getLogger(__name__)

TABLE1_HEADER = ("method", "cpd_time", "learning_time", "total_time", "error_percent")
TABLE1_METHODS = (("AR", "ar", "raw"), ("AR+CPD", "ar", "cpd"), ("LSTM", "lstm", "raw"), ("LSTM+CPD", "lstm", "cpd"))


def table1(x, cfg=None, methods=TABLE1_METHODS):
    """One row per (predictor, mode); raw rows have no CPD time."""
    cfg = cfg or PipelineConfig()
    rows, reports = [], {}
    for name, predictor, mode in methods:
        report = run(x, replace(cfg, predictor=predictor, mode=mode))
        log.info("%s: e_p=%.4f learning %.2fs", name, report.e_p, report.learning_time)
        reports[name] = report
        cpd_time = report.cpd_time if mode == "cpd" else None
        rows.append((name, cpd_time, report.learning_time, report.total_time, 100.0 * report.e_p))
    return rows, reports


def rank_error_curve(x, ranks, cfg=None):
    """Rows ``(rank, e_cpd, e_p)``.

    ``e_cpd`` is the undamped ALS fit error of the learning tensor; ``e_p``
    comes from the full pipeline with its own ALS settings.
    """
    cfg = cfg or PipelineConfig()
    x_learn, _ = split_learn_predict(x, cfg.n_learn)
    fits = dict(rank_sweep(x_learn, ranks, replace(cfg.als, ridge=0.0)))
    rows = []
    for r in ranks:
        report = run(x, replace(cfg, rank=r))
        rows.append((r, fits[r], report.e_p))
    return rows


def completion_traces(x_learn, mask, cfg=None, variants=("plain", "masked")):
    """Rows ``(variant, iteration, observed_error, hidden_error)`` per outer iteration."""
    cfg = cfg or PipelineConfig()
    x_incomplete = x_learn * mask
    rows = []
    for variant in variants:
        opts = replace(cfg.completion_options(), cp_variant=variant)
        result = complete(x_incomplete, mask, opts, truth=x_learn)
        rows += [(variant, it, obs, hid) for it, obs, hid in result.history]
    return rows


def missing_sweep(x, ratios, variants=("plain", "masked"), cfg=None, mask_seed=0):
    """Rows ``(missing_ratio, variant, completion_error, e_p, outer_iterations)``."""
    cfg = cfg or PipelineConfig()
    learn_dims = x.shape[:2] + (cfg.n_learn,)
    rows = []
    for ratio in ratios:
        mask = generate_mask(learn_dims, ratio, seed=mask_seed)
        for variant in variants:
            copts = replace(cfg.completion_options(), cp_variant=variant)
            report = run(x, replace(cfg, completion=copts), mask=mask)
            last = report.completion_history[-1]
            rows.append((ratio, variant, last[2], report.e_p, last[0]))
    return rows


def roc_curves(x, truth, predictors=("lstm", "ar"), cfg=None, num_thresholds=200):
    """ROC of the detector applied to each predictor's forecast of the test days."""
    cfg = cfg or PipelineConfig()
    truth_test = truth[:, :, cfg.n_learn:]
    curves = {}
    for predictor in predictors:
        report = run(x, replace(cfg, predictor=predictor))
        curves[predictor] = roc(report.predicted, truth_test, num_thresholds)
    return curves

"""Threshold occupancy detector and its ROC curve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def detect(xhat, gamma):
    """Occupied wherever the predicted value reaches ``gamma`` (inclusive)."""
    return np.asarray(xhat, dtype=np.float64) >= gamma


@dataclass(frozen=True)
class RocCurve:
    """ROC points ordered by decreasing threshold.

    The first point uses ``gamma = +inf`` (nothing flagged, ``(0, 0)``) and the
    last ``gamma = -inf`` (everything flagged, ``(1, 1)``).
    """

    gamma: np.ndarray
    p_f: np.ndarray
    p_d: np.ndarray

    @property
    def auc(self):
        """Trapezoidal area under ``p_d`` as a function of ``p_f``."""
        return float(np.sum(np.diff(self.p_f) * (self.p_d[1:] + self.p_d[:-1]) / 2))

    def rows(self):
        return list(zip(self.gamma.tolist(), self.p_f.tolist(), self.p_d.tolist()))


def threshold_grid(values, num_thresholds=200):
    """Unique values, evenly subsampled, in decreasing order, with +-inf sentinels."""
    uniq = np.unique(np.asarray(values, dtype=np.float64))[::-1]
    if num_thresholds < len(uniq):
        idx = np.unique(np.round(np.linspace(0, len(uniq) - 1, num_thresholds)).astype(int))
        uniq = uniq[idx]
    return np.concatenate([[np.inf], uniq, [-np.inf]])


def roc(xhat, truth, num_thresholds=200):
    """Sweep the detector threshold and record false-alarm and detection rates.

    ``P_D`` is the fraction of truly occupied entries flagged and ``P_F`` the
    fraction of free entries flagged.
    """
    scores = np.asarray(xhat, dtype=np.float64).ravel()
    labels = np.asarray(truth, dtype=bool).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"shape mismatch: {np.shape(xhat)} vs {np.shape(truth)}")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ground truth must contain both occupied and free entries")
    gammas = threshold_grid(scores, num_thresholds)
    pos = np.sort(scores[labels])
    neg = np.sort(scores[~labels])
    # count of scores >= gamma, exact for every threshold including the sentinels
    tp = pos.size - np.searchsorted(pos, gammas, side="left")
    fp = neg.size - np.searchsorted(neg, gammas, side="left")
    return RocCurve(gammas, fp / n_neg, tp / n_pos)

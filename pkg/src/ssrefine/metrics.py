"""Monte Carlo evaluation indexes for DOA estimates.

All indexes average first over the P sources of a trial, then over trials.
Estimates are matched to true angles by sorted rank, which is adequate for
well-separated sources but not for closely spaced ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TrialRecord:
    truth_deg: np.ndarray
    estimate_deg: np.ndarray
    degraded: bool = False

    def __post_init__(self):
        truth = np.asarray(self.truth_deg, dtype=float)
        est = np.asarray(self.estimate_deg, dtype=float)
        if truth.shape != est.shape or truth.ndim != 1:
            raise ValueError("truth and estimate must be 1-D vectors of equal length")
        object.__setattr__(self, "truth_deg", truth)
        object.__setattr__(self, "estimate_deg", np.sort(est))


@dataclass(frozen=True)
class MetricConfig:
    """Success threshold ``delta`` (degrees) and soft-success decay ``kappa``."""

    success_threshold_deg: float = 1.0
    soft_decay_coeff: float = 1.0

    def __post_init__(self):
        if not self.success_threshold_deg > 0:
            raise ValueError("success threshold must be positive")
        if not self.soft_decay_coeff > 0:
            raise ValueError("soft decay coefficient must be positive")


def pair_estimates(truth, estimate) -> np.ndarray:
    """Sort both vectors and pair them by rank; returns a (P, 2) array."""
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if truth.shape != estimate.shape:
        raise ValueError("truth and estimate must have equal length")
    return np.column_stack([np.sort(truth), np.sort(estimate)])


def _abs_errors(records: Sequence[TrialRecord]) -> np.ndarray:
    if len(records) == 0:
        raise ValueError("no trial records")
    sizes = {r.truth_deg.size for r in records}
    if len(sizes) != 1:
        raise ValueError("all records must have the same number of sources")
    pairs = np.stack([pair_estimates(r.truth_deg, r.estimate_deg) for r in records])
    return np.abs(pairs[:, :, 1] - pairs[:, :, 0])


def rmse(records: Sequence[TrialRecord]) -> float:
    """Root mean square DOA error in degrees."""
    err = _abs_errors(records)
    return float(np.sqrt(np.mean(np.mean(err**2, axis=1))))


def success_rate_hard(records: Sequence[TrialRecord], config: MetricConfig = MetricConfig()) -> float:
    """Fraction of estimates within ``delta``; an error of exactly ``delta`` succeeds."""
    err = _abs_errors(records)
    hits = (config.success_threshold_deg - err >= 0).astype(float)
    return float(np.mean(np.mean(hits, axis=1)))


def success_rate_soft(records: Sequence[TrialRecord], config: MetricConfig = MetricConfig()) -> float:
    """Success weighted by ``exp(-|error| / kappa)`` inside the threshold.

    Uses sgn(0) = 0, so an error of exactly ``delta`` scores half weight.
    """
    err = _abs_errors(records)
    gate = (1.0 + np.sign(config.success_threshold_deg - err)) / 2.0
    terms = np.exp(-err / config.soft_decay_coeff) * gate
    return float(np.mean(np.mean(terms, axis=1)))


def resolution_probability(records: Sequence[TrialRecord], pair=(0, 1)) -> float:
    """Fraction of trials where both sources of ``pair`` are resolved.

    Resolved means each estimate is strictly closer to its true angle than
    half the true separation.
    """
    if len(records) == 0:
        raise ValueError("no trial records")
    i, j = pair
    resolved = 0
    for r in records:
        p = pair_estimates(r.truth_deg, r.estimate_deg)
        half_sep = abs(p[i, 0] - p[j, 0]) / 2.0
        if half_sep == 0:
            raise ValueError("resolution needs two distinct true angles")
        if abs(p[i, 1] - p[i, 0]) < half_sep and abs(p[j, 1] - p[j, 0]) < half_sep:
            resolved += 1
    return resolved / len(records)

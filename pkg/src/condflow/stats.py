"""Empirical distribution machinery: ECDF, two-sample KS, weighted ECDF.

Critical values are asymptotic only (1% level, coefficient 1.628); all
comparisons in this package run with at least a thousand samples per side,
where the asymptotic approximation is adequate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InsufficientSamplesError

__all__ = [
    "KsResult",
    "ks_two_sample",
    "ks_weighted",
    "ecdf",
    "weighted_ecdf",
    "effective_sample_size",
]

_KS_COEFF_1PCT = 1.628


@dataclass(frozen=True)
class KsResult:
    """Two-sample Kolmogorov-Smirnov comparison at the 1% level."""

    statistic: float
    n1: int
    n2: int
    critical_1pct: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "stat": self.statistic,
            "critical_1pct": self.critical_1pct,
            "pass": self.passed,
        }


def _critical_1pct(n1: int, n2: int) -> float:
    return _KS_COEFF_1PCT * math.sqrt((n1 + n2) / (n1 * n2))


def ks_two_sample(xs, ys) -> KsResult:
    """Sup distance between the two ECDFs; `passed` means below the 1%
    critical value.  Requires at least 50 samples per side."""
    xs = np.sort(np.asarray(xs, dtype=np.float64))
    ys = np.sort(np.asarray(ys, dtype=np.float64))
    n1, n2 = xs.size, ys.size
    if n1 < 50 or n2 < 50:
        raise InsufficientSamplesError(f"KS needs >= 50 samples per side, got {n1}, {n2}")
    pooled = np.concatenate([xs, ys])
    f1 = np.searchsorted(xs, pooled, side="right") / n1
    f2 = np.searchsorted(ys, pooled, side="right") / n2
    stat = float(np.max(np.abs(f1 - f2)))
    crit = _critical_1pct(n1, n2)
    return KsResult(statistic=stat, n1=n1, n2=n2, critical_1pct=crit, passed=stat < crit)


def ks_weighted(xs, ws, ys) -> KsResult:
    """KS between a weighted sample (xs, ws) and an unweighted sample ys.

    The weighted side enters the critical value through its effective sample
    size (sum w)^2 / sum w^2.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ws = np.asarray(ws, dtype=np.float64)
    ys = np.sort(np.asarray(ys, dtype=np.float64))
    keep = ws > 0
    xs, ws = xs[keep], ws[keep]
    if xs.size == 0:
        raise InsufficientSamplesError("all weights are zero")
    n1 = int(round(effective_sample_size(ws)))
    n2 = ys.size
    if n1 < 50 or n2 < 50:
        raise InsufficientSamplesError(f"KS needs >= 50 effective samples per side, got {n1}, {n2}")
    order = np.argsort(xs)
    xs, ws = xs[order], ws[order]
    cum = np.cumsum(ws) / np.sum(ws)
    pooled = np.concatenate([xs, ys])
    idx = np.searchsorted(xs, pooled, side="right")
    f1 = np.where(idx > 0, cum[np.minimum(idx, xs.size) - 1], 0.0)
    f1 = np.where(idx == 0, 0.0, f1)
    f2 = np.searchsorted(ys, pooled, side="right") / n2
    stat = float(np.max(np.abs(f1 - f2)))
    crit = _critical_1pct(n1, n2)
    return KsResult(statistic=stat, n1=n1, n2=n2, critical_1pct=crit, passed=stat < crit)


def ecdf(xs) -> Callable:
    """Right-continuous empirical CDF of the sample."""
    xs = np.sort(np.asarray(xs, dtype=np.float64))
    n = xs.size
    if n == 0:
        raise InsufficientSamplesError("empty sample")

    def fn(t):
        return np.searchsorted(xs, np.asarray(t, dtype=np.float64), side="right") / n

    return fn


def weighted_ecdf(xs, ws) -> Callable:
    """Right-continuous step function with jump w_i / sum(w) at x_i.

    Raises if all weights are zero.  With unit weights this is the ordinary
    ECDF.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ws = np.asarray(ws, dtype=np.float64)
    if np.any(ws < 0):
        raise ValueError("weights must be nonnegative")
    total = float(np.sum(ws))
    if total <= 0:
        raise InsufficientSamplesError("all weights are zero")
    order = np.argsort(xs)
    xs, ws = xs[order], ws[order]
    cum = np.cumsum(ws) / total

    def fn(t):
        idx = np.searchsorted(xs, np.asarray(t, dtype=np.float64), side="right")
        out = np.where(idx > 0, cum[np.minimum(idx, xs.size) - 1], 0.0)
        return float(out) if np.ndim(t) == 0 else out

    return fn


def effective_sample_size(ws) -> float:
    """(sum w)^2 / sum w^2: the equivalent unweighted sample count."""
    ws = np.asarray(ws, dtype=np.float64)
    denom = float(np.sum(ws * ws))
    if denom == 0.0:
        return 0.0
    return float(np.sum(ws)) ** 2 / denom

"""Paired nonparametric significance testing.

Wilcoxon signed-rank with an exact small-sample null (zeros dropped, midranks
for ties) and a tie-corrected normal approximation above the exact threshold,
plus the Holm-Bonferroni step-down correction for families of comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DataError

EXACT_THRESHOLD = 25


@dataclass(frozen=True)
class WilcoxonResult:
    w_statistic: float
    n_effective: int
    p_value: float
    method: str


@dataclass(frozen=True)
class HolmReport:
    raw_p: tuple
    adjusted_p: tuple
    reject: tuple
    alpha: float


def _exact_two_sided_p(ranks: np.ndarray, w: float) -> float:
    """P(|W - mu| >= |w - mu|) under random signs of the observed ranks.

    Midranks are multiples of 1/2, so doubling makes every quantity an exact
    integer and the null distribution is a subset-sum count.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())  # equals n(n+1), always even
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled.tolist():
        counts[r:] = counts[r:] + counts[:total + 1 - r]
    mu2 = total // 2
    dev = abs(int(round(2.0 * w)) - mu2)
    extreme = np.abs(np.arange(total + 1) - mu2) >= dev
    return int(counts[extreme].sum()) / (2 ** ranks.size)


def _approx_two_sided_p(abs_diffs: np.ndarray, w: float, n: int) -> float:
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_sizes = np.unique(abs_diffs, return_counts=True)
    var -= float(((tie_sizes.astype(float) ** 3) - tie_sizes).sum()) / 48.0
    if w == mu:
        return 1.0
    # Continuity correction pulls the statistic half a step toward the mean.
    z = (abs(w - mu) - 0.5) / math.sqrt(var)
    return math.erfc(max(z, 0.0) / math.sqrt(2.0))


def wilcoxon_signed_rank(a, b, exact_threshold: int = EXACT_THRESHOLD) -> WilcoxonResult:
    """Two-sided paired test; W is the rank sum of positive differences.

    Zero differences are dropped. With n_effective at or below the threshold
    the p-value comes from full enumeration of sign assignments (computed by
    dynamic programming); above it, from a tie-corrected normal approximation
    with continuity correction 0.5. All dropped → p = 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size < 1:
        raise DataError("paired inputs must be equal-length vectors, n >= 1")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise DataError("non-finite values in paired inputs")
    diffs = a - b
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        return WilcoxonResult(w_statistic=0.0, n_effective=0, p_value=1.0, method="exact")
    abs_diffs = np.abs(diffs)
    ranks = rankdata(abs_diffs)
    w = float(ranks[diffs > 0].sum())
    if n <= exact_threshold:
        p = _exact_two_sided_p(ranks, w)
        method = "exact"
    else:
        p = _approx_two_sided_p(abs_diffs, w, n)
        method = "normal_approx"
    return WilcoxonResult(w_statistic=w, n_effective=n,
                          p_value=min(float(p), 1.0), method=method)


def holm_bonferroni(raw_p, alpha: float = 0.05) -> HolmReport:
    """Step-down correction: reject the sorted p-values while p_(i) <= alpha/(m-i+1).

    The first failure stops the procedure. Adjusted p-values are the running
    maximum of (m-i+1) * p_(i), capped at 1, reported in input order.
    """
    p = [float(v) for v in raw_p]
    if not p:
        raise DataError("need at least one p-value")
    if any(v < 0.0 or v > 1.0 for v in p):
        raise DataError("p-values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise DataError("alpha must lie strictly between 0 and 1")
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    reject = [False] * m
    adjusted = [0.0] * m
    running = 0.0
    still_rejecting = True
    for pos, i in enumerate(order):
        running = max(running, (m - pos) * p[i])
        adjusted[i] = min(running, 1.0)
        if still_rejecting and p[i] <= alpha / (m - pos):
            reject[i] = True
        else:
            still_rejecting = False
    return HolmReport(raw_p=tuple(p), adjusted_p=tuple(adjusted),
                      reject=tuple(reject), alpha=alpha)

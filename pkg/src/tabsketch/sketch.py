"""Row sketching: shrink a labelled context to per-class row budgets.

Three methods. ``random`` draws a seeded uniform subset, ``kmeans`` replaces
each class by its Lloyd cluster centers, ``coreset`` keeps a greedy
farthest-first subset whose covering radius is within twice the optimal
k-center radius. Budgets come from ``compute_quota`` and are allocated per
class, so every method preserves the chosen class balance and synthetic rows
always carry a valid label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError, QuotaError
from .seeding import derived_rng

SKETCH_METHODS = ("random", "kmeans", "coreset")
STRATEGIES = ("equal", "proportional")

KMEANS_MAX_ITERS = 100
KMEANS_TOL = 1e-6


@dataclass(frozen=True)
class ClassQuota:
    """Per-class row budgets.

    ``with_replacement`` flags classes whose budget exceeds their row count;
    only random sketching honours the flag by duplicating draws, the other
    methods emit such classes verbatim.
    """

    per_class: np.ndarray
    with_replacement: np.ndarray

    def __post_init__(self):
        per = np.array(self.per_class, dtype=int)
        rep = np.array(self.with_replacement, dtype=bool)
        if per.ndim != 1 or per.shape != rep.shape:
            raise QuotaError("per_class and with_replacement must be equal-length vectors")
        if (per < 0).any():
            raise QuotaError("quotas must be nonnegative")
        per.setflags(write=False)
        rep.setflags(write=False)
        object.__setattr__(self, "per_class", per)
        object.__setattr__(self, "with_replacement", rep)

    @property
    def num_classes(self) -> int:
        return self.per_class.size

    @property
    def total(self) -> int:
        return int(self.per_class.sum())


def compute_quota(class_counts, n_max: int, strategy: str) -> ClassQuota:
    """Allocate row budgets to classes under a total cap of ``n_max``.

    ``proportional`` splits the cap by class abundance with largest-remainder
    rounding (remainder ties favour the lower class index), caps each share at
    the class size, and returns the class counts unchanged when the whole set
    already fits. ``equal`` gives every class the same largest-remainder share
    and flags classes shorter than their share for replacement sampling.
    """
    counts = np.asarray(class_counts, dtype=int)
    if counts.ndim != 1 or counts.size == 0:
        raise QuotaError("class_counts must be a non-empty vector")
    if (counts < 1).any():
        raise QuotaError("every class needs at least one row")
    if n_max < 1:
        raise QuotaError("n_max must be positive")
    m = counts.size
    n = int(counts.sum())

    if strategy == "proportional":
        if n <= n_max:
            return ClassQuota(counts, np.zeros(m, dtype=bool))
        # Integer largest-remainder arithmetic: share_c = n_max*count_c/n.
        quota = np.array([(n_max * int(c)) // n for c in counts], dtype=int)
        remainder = [(n_max * int(c)) % n for c in counts]
        leftover = n_max - int(quota.sum())
        order = sorted(range(m), key=lambda c: (-remainder[c], c))
        for c in order[:leftover]:
            quota[c] += 1
        surplus = int(np.maximum(quota - counts, 0).sum())
        quota = np.minimum(quota, counts)
        while surplus > 0:
            room = np.flatnonzero(quota < counts)
            if room.size == 0:
                break
            grant = room[:surplus]
            quota[grant] += 1
            surplus -= grant.size
        return ClassQuota(quota, np.zeros(m, dtype=bool))

    if strategy == "equal":
        if n_max < m:
            raise QuotaError(f"equal strategy needs n_max >= {m} (one row per class), got {n_max}")
        base, extra = divmod(n_max, m)
        quota = np.full(m, base, dtype=int)
        quota[:extra] += 1  # all fractional parts tie, so low class indices win
        return ClassQuota(quota, quota > counts)

    raise ValueError(f"unknown strategy {strategy!r}")


def _check_inputs(x, y, quota: ClassQuota):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataError("sketch input must be a non-empty 2-D matrix")
    if y.shape != (x.shape[0],):
        raise DataError("labels must be a vector with one entry per row")
    if not np.isfinite(x).all():
        raise DataError("non-finite values in sketch input")
    m = quota.num_classes
    if y.min() < 0 or y.max() >= m:
        raise QuotaError("labels out of range for the quota")
    counts = np.bincount(y, minlength=m)
    short = (quota.per_class > counts) & ~quota.with_replacement
    if short.any():
        c = int(np.flatnonzero(short)[0])
        raise QuotaError(f"class {c} quota {int(quota.per_class[c])} exceeds its "
                         f"{int(counts[c])} rows without replacement")
    return x, y


def sketch_random(x, y, quota: ClassQuota, seed: int):
    """Per class, draw quota rows uniformly (with replacement where flagged).

    Returns (rows, labels, source_rows); outputs are verbatim copies of input
    rows and source_rows records their original indices.
    """
    x, y = _check_inputs(x, y, quota)
    picks = []
    for c in range(quota.num_classes):
        k = int(quota.per_class[c])
        if k == 0:
            continue
        rows = np.flatnonzero(y == c)
        rng = derived_rng(seed, "class", c)
        chosen = rng.choice(rows, size=k, replace=bool(quota.with_replacement[c]))
        picks.append(np.sort(chosen))
    source = np.concatenate(picks) if picks else np.empty(0, dtype=int)
    return x[source].copy(), y[source].copy(), source


def _kmeanspp_init(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, rows.shape[1]))
    centers[0] = rows[int(rng.integers(rows.shape[0]))]
    d2 = cdist(rows, centers[:1], "sqeuclidean")[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            pick = int(rng.choice(rows.shape[0], p=d2 / total))
        else:
            pick = int(rng.integers(rows.shape[0]))  # every row already a center
        centers[j] = rows[pick]
        d2 = np.minimum(d2, cdist(rows, centers[j:j + 1], "sqeuclidean")[:, 0])
    return centers


def _lloyd(rows: np.ndarray, k: int, rng: np.random.Generator,
           max_iters: int, tol: float) -> np.ndarray:
    centers = _kmeanspp_init(rows, k, rng)
    for _ in range(max_iters):
        d2 = cdist(rows, centers, "sqeuclidean")
        assign = d2.argmin(axis=1)
        new = centers.copy()
        for j in range(k):
            member = rows[assign == j]
            if member.shape[0]:
                new[j] = member.mean(axis=0)
        empties = [j for j in range(k) if not (assign == j).any()]
        if empties:
            # Reseed each empty center at a row far from its current center.
            nearest = d2[np.arange(rows.shape[0]), assign].copy()
            for j in empties:
                far = int(nearest.argmax())
                new[j] = rows[far]
                nearest[far] = -1.0
        shift = np.linalg.norm(new - centers) / max(np.linalg.norm(centers), 1e-12)
        centers = new
        if shift < tol:
            break
    return centers


def sketch_kmeans(x, y, quota: ClassQuota, seed: int,
                  max_iters: int = KMEANS_MAX_ITERS, tol: float = KMEANS_TOL):
    """Per class, emit the K-means centers of that class's rows (K = quota).

    Classes at or under budget pass through verbatim. Centers are synthetic
    rows (coordinate-wise inside the per-class bounding box), so the returned
    source_rows is None.
    """
    x, y = _check_inputs(x, y, quota)
    if (quota.per_class < 1).any():
        raise QuotaError("kmeans needs a quota of at least 1 for every class")
    blocks = []
    labels = []
    for c in range(quota.num_classes):
        rows = x[y == c]
        k = int(quota.per_class[c])
        if k >= rows.shape[0]:
            blocks.append(rows.copy())
            labels.append(np.full(rows.shape[0], c, dtype=int))
            continue
        centers = _lloyd(rows, k, derived_rng(seed, "class", c), max_iters, tol)
        blocks.append(centers)
        labels.append(np.full(k, c, dtype=int))
    return np.vstack(blocks), np.concatenate(labels), None


def sketch_coreset(x, y, quota: ClassQuota, seed: int):
    """Per class, keep a greedy farthest-first subset of quota rows.

    The first pick is the row farthest from the class centroid; each later
    pick maximizes distance to the nearest row already picked (Gonzalez
    traversal, covering radius within 2x optimal). Ties go to the lowest row
    index. The seed is accepted for interface symmetry; the traversal itself
    is deterministic.
    """
    x, y = _check_inputs(x, y, quota)
    if (quota.per_class < 1).any():
        raise QuotaError("coreset needs a quota of at least 1 for every class")
    picks = []
    for c in range(quota.num_classes):
        rows_idx = np.flatnonzero(y == c)
        k = int(quota.per_class[c])
        if k >= rows_idx.size:
            picks.append(rows_idx)
            continue
        rows = x[rows_idx]
        centroid = rows.mean(axis=0)
        first = int(((rows - centroid) ** 2).sum(axis=1).argmax())
        order = [first]
        nearest = ((rows - rows[first]) ** 2).sum(axis=1)
        while len(order) < k:
            pick = int(nearest.argmax())
            order.append(pick)
            nearest = np.minimum(nearest, ((rows - rows[pick]) ** 2).sum(axis=1))
        picks.append(rows_idx[order])
    source = np.concatenate(picks) if picks else np.empty(0, dtype=int)
    return x[source].copy(), y[source].copy(), source


def apply_sketch(method: str, x, y, quota: ClassQuota, seed: int):
    """Dispatch one sketch method by name."""
    if method == "random":
        return sketch_random(x, y, quota, seed)
    if method == "kmeans":
        return sketch_kmeans(x, y, quota, seed)
    if method == "coreset":
        return sketch_coreset(x, y, quota, seed)
    raise ValueError(f"unknown sketch method {method!r}")

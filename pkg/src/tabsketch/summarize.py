"""Compose feature reduction and row sketching into one context summary.

The default order fits the feature transform on the full training fold,
applies it, then sketches rows in the reduced space. The transform travels
with the result so test rows are mapped identically. An ablation flag flips
the order (sketch first, fit the transform on the sketched rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .featsel import DEFAULT_BINS, FEATSEL_METHODS, FeatureTransform, apply, fit_features
from .seeding import derive_seed
from .sketch import SKETCH_METHODS, STRATEGIES, apply_sketch, compute_quota


@dataclass(frozen=True)
class SummaryPlan:
    """One point in the method grid plus the budget and seed."""

    sketch: str
    featsel: str
    strategy: str
    n_max: int
    d_max: int
    seed: int
    bins: int = DEFAULT_BINS
    scale_pca: bool = False
    fit_on_sketch: bool = False

    def __post_init__(self):
        if self.sketch not in SKETCH_METHODS:
            raise ValueError(f"sketch must be one of {SKETCH_METHODS}")
        if self.featsel not in FEATSEL_METHODS:
            raise ValueError(f"featsel must be one of {FEATSEL_METHODS}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.n_max < 1 or self.d_max < 1:
            raise ValueError("n_max and d_max must be positive")
        if self.bins < 2:
            raise ValueError("bins must be at least 2")


@dataclass(frozen=True)
class CompactContext:
    """A summarized context: n' x d' rows, labels, and the fitted transform."""

    x_compact: np.ndarray
    y_compact: np.ndarray
    num_classes: int
    transform: FeatureTransform
    plan: SummaryPlan
    dataset_id: str = ""
    fold_index: int = -1
    source_rows: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x_compact, dtype=float)
        y = np.asarray(self.y_compact, dtype=int)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise DataError("compact rows must be 2-D with one label per row")
        if x.shape[0] > self.plan.n_max:
            raise DataError("compact context exceeds the row budget")
        if x.shape[1] > self.plan.d_max:
            raise DataError("compact context exceeds the column budget")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise DataError("compact labels out of range")

    @property
    def n_rows(self) -> int:
        return self.x_compact.shape[0]

    @property
    def n_cols(self) -> int:
        return self.x_compact.shape[1]


def summarize(train_x, train_y, plan: SummaryPlan, num_classes: int | None = None,
              dataset_id: str = "", fold_index: int = -1) -> CompactContext:
    """Shrink a labelled training fold to the plan's budgets.

    Deterministic per (inputs, plan): submodule seeds are derived by hashing
    (plan.seed, dataset_id, fold_index, stage tag), so changing one grid axis
    never perturbs another's randomness.
    """
    x = np.asarray(train_x, dtype=float)
    y = np.asarray(train_y, dtype=int)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DataError("train rows must be 2-D with one label per row")
    m = int(num_classes) if num_classes is not None else int(y.max()) + 1
    counts = np.bincount(y, minlength=m)
    feat_seed = derive_seed(plan.seed, dataset_id, fold_index, "featsel")
    row_seed = derive_seed(plan.seed, dataset_id, fold_index, "sketch")
    quota = compute_quota(counts, plan.n_max, plan.strategy)

    if plan.fit_on_sketch:
        x_rows, y_rows, src = apply_sketch(plan.sketch, x, y, quota, row_seed)
        transform = fit_features(plan.featsel, x_rows, y_rows, plan.d_max,
                                 bins=plan.bins, seed=feat_seed,
                                 scale_pca=plan.scale_pca)
        x_small = apply(transform, x_rows)
    else:
        transform = fit_features(plan.featsel, x, y, plan.d_max, bins=plan.bins,
                                 seed=feat_seed, scale_pca=plan.scale_pca)
        reduced = apply(transform, x)
        x_small, y_rows, src = apply_sketch(plan.sketch, reduced, y, quota, row_seed)

    return CompactContext(x_compact=x_small, y_compact=y_rows, num_classes=m,
                          transform=transform, plan=plan, dataset_id=dataset_id,
                          fold_index=fold_index, source_rows=src)


def transform_test(ctx: CompactContext, test_rows) -> np.ndarray:
    """Map unlabelled rows through the context's fitted transform."""
    return apply(ctx.transform, test_rows)

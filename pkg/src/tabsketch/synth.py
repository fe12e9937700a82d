"""Bundled synthetic classification datasets.

Gaussian blob generators used by the test suite and the ``synth`` CLI command:
a balanced binary problem, a balanced 10-class problem, a 95/5 imbalanced
binary problem, and a binary problem whose first block of features carries all
the signal while the rest are pure noise. All are deterministic per seed.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .seeding import derived_rng


def _assemble(rng: np.random.Generator, counts, means, d: int,
              dataset_id: str) -> Dataset:
    rows = []
    labels = []
    for c, (k, mu) in enumerate(zip(counts, means)):
        rows.append(rng.standard_normal((k, d)) + mu)
        labels.append(np.full(k, c, dtype=int))
    x = np.vstack(rows)
    y = np.concatenate(labels)
    perm = rng.permutation(x.shape[0])
    return Dataset(id=dataset_id, features=x[perm], labels=y[perm],
                   num_classes=len(counts),
                   feature_names=tuple(f"f{j}" for j in range(d)))


def _spread_counts(n: int, classes: int) -> list[int]:
    base, extra = divmod(n, classes)
    return [base + (1 if c < extra else 0) for c in range(classes)]


def make_binary(n: int = 2000, d: int = 120, sep: float = 2.5,
                seed: int = 7, dataset_id: str = "synth-binary") -> Dataset:
    """Two balanced unit-variance blobs whose means sit ``sep`` apart."""
    rng = derived_rng(seed, "binary")
    direction = rng.standard_normal(d)
    direction *= sep / np.linalg.norm(direction)
    counts = _spread_counts(n, 2)
    return _assemble(rng, counts, [np.zeros(d), direction], d, dataset_id)


def make_multiclass(n: int = 2000, d: int = 120, classes: int = 10,
                    sep: float = 3.0, seed: int = 11,
                    dataset_id: str = "synth-multi10") -> Dataset:
    """``classes`` balanced blobs, each mean ``sep`` from the origin."""
    rng = derived_rng(seed, "multiclass")
    means = []
    for _ in range(classes):
        v = rng.standard_normal(d)
        means.append(v * (sep / np.linalg.norm(v)))
    return _assemble(rng, _spread_counts(n, classes), means, d, dataset_id)


def make_imbalanced(n: int = 2000, d: int = 120, minority_frac: float = 0.05,
                    sep: float = 2.0, seed: int = 13,
                    dataset_id: str = "synth-imbalanced") -> Dataset:
    """Binary blobs with a small minority class (class 1)."""
    rng = derived_rng(seed, "imbalanced")
    direction = rng.standard_normal(d)
    direction *= sep / np.linalg.norm(direction)
    minority = max(1, round(n * minority_frac))
    counts = [n - minority, minority]
    return _assemble(rng, counts, [np.zeros(d), direction], d, dataset_id)


def make_informative_noise(n: int = 2000, informative: int = 20,
                           noise: int = 80, delta: float = 0.6,
                           seed: int = 17,
                           dataset_id: str = "synth-infnoise") -> Dataset:
    """Balanced binary data where only the first ``informative`` columns matter.

    Class 1's mean is shifted by ``delta`` on each informative column; the
    remaining columns are identically distributed noise for both classes.
    """
    rng = derived_rng(seed, "infnoise")
    d = informative + noise
    shift = np.concatenate([np.full(informative, delta), np.zeros(noise)])
    counts = _spread_counts(n, 2)
    return _assemble(rng, counts, [np.zeros(d), shift], d, dataset_id)


SYNTH_MAKERS = {
    "binary": make_binary,
    "multi10": make_multiclass,
    "imbalanced": make_imbalanced,
    "infnoise": make_informative_noise,
}


def bundled_trio(seed: int = 0) -> list[Dataset]:
    """The three standard constraint-check datasets (seed offsets keep them distinct)."""
    return [
        make_binary(seed=seed + 7),
        make_multiclass(seed=seed + 11),
        make_imbalanced(seed=seed + 13),
    ]

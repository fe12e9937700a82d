"""Feature reduction: pick or project columns down to at most d_max.

Every fit produces a FeatureTransform that applies identically to training and
test rows, which is what keeps the reduced space consistent across the split.
Methods: ``random`` column subset, ``mutual_info`` ranking on a quantile-binned
contingency table, and ``pca`` via SVD of the centered matrix. All methods
return the identity subset when the input is already under budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .seeding import derived_rng

FEATSEL_METHODS = ("random", "mutual_info", "pca")
DEFAULT_BINS = 16

_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class FeatureTransform:
    """A fitted column reduction.

    ``column_subset`` keeps ``columns`` (strictly increasing indices);
    ``linear_projection`` maps rows to ((rows - center) / scale) @ projection
    where the projection columns are orthonormal and ``scale`` is all ones
    unless the fit standardized columns. ``explained_variance`` is populated
    by the PCA fit only.
    """

    kind: str
    d_in: int
    columns: tuple[int, ...] | None = None
    projection: np.ndarray | None = None
    center: np.ndarray | None = None
    scale: np.ndarray | None = None
    explained_variance: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.d_in < 1:
            raise DataError("d_in must be positive")
        if self.kind == "column_subset":
            cols = tuple(int(c) for c in (self.columns or ()))
            if not cols:
                raise DataError("column subset must keep at least one column")
            if any(b <= a for a, b in zip(cols, cols[1:])):
                raise DataError("subset columns must be strictly increasing")
            if cols[0] < 0 or cols[-1] >= self.d_in:
                raise DataError("subset column out of range")
            object.__setattr__(self, "columns", cols)
        elif self.kind == "linear_projection":
            proj = np.array(self.projection, dtype=float)
            center = np.array(self.center, dtype=float)
            if proj.ndim != 2 or proj.shape[0] != self.d_in or proj.shape[1] < 1:
                raise DataError("projection must be d_in x d_out with d_out >= 1")
            if center.shape != (self.d_in,):
                raise DataError("center must have one entry per input column")
            gram = proj.T @ proj
            if not np.allclose(gram, np.eye(proj.shape[1]), atol=_ORTHO_TOL):
                raise DataError("projection columns must be orthonormal")
            scale = (np.ones(self.d_in) if self.scale is None
                     else np.array(self.scale, dtype=float))
            if scale.shape != (self.d_in,) or (scale <= 0).any():
                raise DataError("scale must be a positive vector, one entry per column")
            proj.setflags(write=False)
            center.setflags(write=False)
            scale.setflags(write=False)
            object.__setattr__(self, "projection", proj)
            object.__setattr__(self, "center", center)
            object.__setattr__(self, "scale", scale)
        else:
            raise DataError(f"unknown transform kind {self.kind!r}")

    @property
    def d_out(self) -> int:
        if self.kind == "column_subset":
            return len(self.columns)
        return self.projection.shape[1]

    def to_dict(self) -> dict:
        """JSON-ready form for the sidecar file."""
        out = {"kind": self.kind, "d_in": self.d_in, "d_out": self.d_out}
        if self.kind == "column_subset":
            out["columns"] = list(self.columns)
        else:
            out["projection"] = [[float(v) for v in row] for row in self.projection]
            out["center"] = [float(v) for v in self.center]
            out["scale"] = [float(v) for v in self.scale]
            if self.explained_variance is not None:
                out["explained_variance"] = list(self.explained_variance)
        return out


def transform_from_dict(payload: dict) -> FeatureTransform:
    """Inverse of FeatureTransform.to_dict."""
    kind = payload.get("kind")
    if kind == "column_subset":
        return FeatureTransform(kind="column_subset", d_in=int(payload["d_in"]),
                                columns=tuple(int(c) for c in payload["columns"]))
    if kind == "linear_projection":
        ev = payload.get("explained_variance")
        scale = payload.get("scale")
        return FeatureTransform(kind="linear_projection", d_in=int(payload["d_in"]),
                                projection=np.array(payload["projection"], dtype=float),
                                center=np.array(payload["center"], dtype=float),
                                scale=None if scale is None else np.array(scale, dtype=float),
                                explained_variance=tuple(ev) if ev is not None else None)
    raise DataError(f"unknown transform kind {kind!r}")


def identity_transform(d: int) -> FeatureTransform:
    return FeatureTransform(kind="column_subset", d_in=d, columns=tuple(range(d)))


def fit_random(d: int, d_max: int, seed: int) -> FeatureTransform:
    """Keep a seeded uniform draw of d_max distinct columns (identity if under budget)."""
    if d < 1:
        raise DataError("d must be positive")
    if d_max < 1:
        raise DataError("d_max must be positive")
    if d <= d_max:
        return identity_transform(d)
    rng = derived_rng(seed, "columns")
    cols = np.sort(rng.choice(d, size=d_max, replace=False))
    return FeatureTransform(kind="column_subset", d_in=d,
                            columns=tuple(int(c) for c in cols))


def _bin_codes(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency bin indices; discrete inputs keep their own values as bins."""
    distinct = np.unique(values)
    if distinct.size <= bins:
        return np.searchsorted(distinct, values)
    ordered = np.sort(values)
    n = values.size
    edges = [ordered[math.ceil(i * n / bins) - 1] for i in range(1, bins)]
    edges = np.unique(edges)  # duplicate quantile edges collapse into one
    return np.searchsorted(edges, values, side="left")


def mutual_information(feature, labels, bins: int = DEFAULT_BINS) -> float:
    """I(X;Y) in nats between a quantile-binned feature and the class labels."""
    x = np.asarray(feature, dtype=float)
    y = np.asarray(labels, dtype=int)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise DataError("feature and labels must be equal-length vectors, n >= 2")
    if bins < 2:
        raise DataError("bins must be at least 2")
    if not np.isfinite(x).all():
        raise DataError("non-finite feature values")
    codes = _bin_codes(x, bins)
    n = x.size
    table: dict[tuple[int, int], int] = {}
    row_tot: dict[int, int] = {}
    col_tot: dict[int, int] = {}
    for b, c in zip(codes.tolist(), y.tolist()):
        table[(b, c)] = table.get((b, c), 0) + 1
        row_tot[b] = row_tot.get(b, 0) + 1
        col_tot[c] = col_tot.get(c, 0) + 1
    terms = [(n_bc / n) * math.log((n_bc * n) / (row_tot[b] * col_tot[c]))
             for (b, c), n_bc in table.items()]
    value = math.fsum(terms)
    return value if value > 0.0 else 0.0


def fit_mutual_info(x, y, d_max: int, bins: int = DEFAULT_BINS,
                    seed: int = 0) -> FeatureTransform:
    """Keep the d_max columns with the highest label mutual information.

    Ranking ties go to the lower column index; the kept set is emitted in
    ascending column order. The seed argument exists for interface symmetry
    with the other fits; the ranking is deterministic.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DataError("rows must be 2-D with one label per row")
    d = x.shape[1]
    if d_max < 1:
        raise DataError("d_max must be positive")
    if d <= d_max:
        return identity_transform(d)
    scores = [mutual_information(x[:, j], y, bins) for j in range(d)]
    ranked = sorted(range(d), key=lambda j: (-scores[j], j))
    keep = sorted(ranked[:d_max])
    return FeatureTransform(kind="column_subset", d_in=d, columns=tuple(keep))


def fit_pca(x, d_max: int, scale: bool = False) -> FeatureTransform:
    """Project onto the leading principal directions of the training rows.

    Centers columns (optionally scales them to unit variance), takes the top
    min(d_max, rank) right singular directions with a deterministic sign
    convention (largest-magnitude entry positive), and records explained
    variances s^2/(n-1). Under budget (d <= d_max) the identity subset is
    returned instead of a rotation.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("pca needs at least 2 rows")
    if not np.isfinite(x).all():
        raise DataError("non-finite values in pca input")
    if d_max < 1:
        raise DataError("d_max must be positive")
    n, d = x.shape
    if d <= d_max:
        return identity_transform(d)
    center = x.mean(axis=0)
    xc = x - center
    spread = None
    if scale:
        spread = xc.std(axis=0)
        spread[spread == 0.0] = 1.0
        xc = xc / spread
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    rank = int((s > s[0] * max(n, d) * np.finfo(float).eps).sum()) if s[0] > 0 else 0
    d_out = min(d_max, max(rank, 1))  # all-equal rows degenerate to one direction
    comps = vt[:d_out].copy()
    for row in comps:
        if row[np.abs(row).argmax()] < 0:
            row *= -1.0
    variances = tuple(float(v) for v in (s[:d_out] ** 2) / (n - 1))
    return FeatureTransform(kind="linear_projection", d_in=d, projection=comps.T,
                            center=center, scale=spread,
                            explained_variance=variances)


def apply(transform: FeatureTransform, rows) -> np.ndarray:
    """Map rows through a fitted transform; output has transform.d_out columns."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != transform.d_in:
        raise DataError(f"expected {transform.d_in} columns, got "
                        f"{rows.shape[1] if rows.ndim == 2 else 'non-matrix input'}")
    if transform.kind == "column_subset":
        return rows[:, list(transform.columns)].copy()
    return ((rows - transform.center) / transform.scale) @ transform.projection


def fit_features(method: str, x, y, d_max: int, bins: int = DEFAULT_BINS,
                 seed: int = 0, scale_pca: bool = False) -> FeatureTransform:
    """Dispatch one feature-reduction fit by name."""
    if method == "random":
        return fit_random(np.asarray(x).shape[1], d_max, seed)
    if method == "mutual_info":
        return fit_mutual_info(x, y, d_max, bins=bins, seed=seed)
    if method == "pca":
        return fit_pca(x, d_max, scale=scale_pca)
    raise ValueError(f"unknown feature method {method!r}")

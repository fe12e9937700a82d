"""Feature reduction fits and the mutual-information estimator.

The MI oracle below recomputes quantile binning and the contingency-table sum
from scratch with pure-Python containers; math.fsum makes both sides exactly
rounded, so scores are compared for strict equality.
"""

import math
from collections import Counter

import numpy as np
import pytest

from tabsketch import (
    DataError,
    FeatureTransform,
    apply,
    fit_mutual_info,
    fit_pca,
    fit_random,
    mutual_information,
    transform_from_dict,
)
from tabsketch.featsel import fit_features, identity_transform


def mi_oracle(feature, labels, bins):
    x = [float(v) for v in feature]
    n = len(x)
    distinct = sorted(set(x))
    if len(distinct) <= bins:
        codes = [distinct.index(v) for v in x]
    else:
        ordered = sorted(x)
        edges = []
        for i in range(1, bins):
            e = ordered[math.ceil(i * n / bins) - 1]
            if e not in edges:
                edges.append(e)
        codes = [sum(1 for e in edges if e < v) for v in x]
    joint = Counter(zip(codes, labels))
    row = Counter(codes)
    col = Counter(labels)
    value = math.fsum((k / n) * math.log((k * n) / (row[b] * col[c]))
                      for (b, c), k in joint.items())
    return value if value > 0.0 else 0.0


def test_mi_perfect_predictor_reaches_label_entropy():
    y = [0] * 50 + [1] * 50
    assert mutual_information(np.array(y, dtype=float), y, bins=4) == pytest.approx(
        math.log(2), abs=1e-12)


def test_mi_constant_feature_is_zero():
    y = [0, 1] * 20
    assert mutual_information(np.full(40, 3.5), y, bins=8) == 0.0


def test_mi_two_bin_example():
    got = mutual_information([1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1], bins=2)
    assert got == pytest.approx(math.log(2), abs=1e-15)


def test_mi_matches_oracle_bit_for_bit():
    rng = np.random.default_rng(21)
    for _ in range(200):
        n = int(rng.integers(2, 51))
        bins = int(rng.integers(2, 9))
        m = int(rng.integers(2, 4))
        y = rng.integers(0, m, size=n).tolist()
        if rng.random() < 0.5:
            x = rng.standard_normal(n)
        else:
            x = rng.integers(0, 5, size=n).astype(float)  # heavy ties
        assert mutual_information(x, y, bins) == mi_oracle(x, y, bins)


def test_mi_invariant_under_monotone_transform():
    rng = np.random.default_rng(22)
    x = rng.standard_normal(60)
    y = rng.integers(0, 2, size=60)
    base = mutual_information(x, y, bins=6)
    assert mutual_information(np.exp(x), y, bins=6) == base
    assert mutual_information(3.0 * x - 7.0, y, bins=6) == base


def test_mi_bounds():
    rng = np.random.default_rng(23)
    for _ in range(50):
        n = int(rng.integers(4, 40))
        x = rng.standard_normal(n)
        y = rng.integers(0, 3, size=n)
        bins = int(rng.integers(2, 7))
        got = mutual_information(x, y, bins)
        assert got >= 0.0
        h_y = mi_oracle(y.astype(float), y.tolist(), bins=max(bins, 3))
        assert got <= h_y + 1e-12 or h_y == 0.0


def test_mi_input_validation():
    with pytest.raises(DataError):
        mutual_information([1.0], [0], bins=2)
    with pytest.raises(DataError):
        mutual_information([1.0, 2.0], [0, 1], bins=1)
    with pytest.raises(DataError):
        mutual_information([1.0, np.nan], [0, 1], bins=2)


def test_fit_mutual_info_ranks_by_score():
    rng = np.random.default_rng(24)
    y = np.array([0] * 30 + [1] * 30)
    col0 = y.astype(float)                       # perfect signal
    col1 = np.zeros(60)                          # none
    col2 = y.astype(float).copy()
    col2[::3] = 1.0 - col2[::3]                  # corrupted signal
    x = np.column_stack([col1, col0, col2])
    t = fit_mutual_info(x, y, d_max=2, bins=4)
    assert t.columns == (1, 2)


def test_fit_mutual_info_identity_under_budget():
    rng = np.random.default_rng(25)
    x = rng.standard_normal((20, 4))
    y = rng.integers(0, 2, size=20)
    t = fit_mutual_info(x, y, d_max=9, bins=4)
    assert t.columns == (0, 1, 2, 3)


def test_fit_mutual_info_matches_ranking_oracle():
    rng = np.random.default_rng(26)
    for _ in range(60):
        n = int(rng.integers(4, 40))
        d = int(rng.integers(2, 8))
        bins = int(rng.integers(2, 8))
        x = np.round(rng.standard_normal((n, d)), 1)  # rounding makes MI ties likely
        y = rng.integers(0, 3, size=n)
        d_max = int(rng.integers(1, d))
        scores = [mi_oracle(x[:, j], y.tolist(), bins) for j in range(d)]
        want = sorted(sorted(range(d), key=lambda j: (-scores[j], j))[:d_max])
        got = fit_mutual_info(x, y, d_max=d_max, bins=bins)
        assert list(got.columns) == want


def test_fit_random_identity_and_subset():
    assert fit_random(10, 100, seed=0).columns == tuple(range(10))
    t = fit_random(3072, 100, seed=1)
    cols = np.array(t.columns)
    assert cols.size == 100 == len(set(t.columns))
    assert (np.diff(cols) > 0).all() and cols.max() < 3072
    assert fit_random(3072, 100, seed=1).columns == t.columns
    assert fit_random(3072, 100, seed=2).columns != t.columns


def test_pca_rank_one_line_preserves_distances():
    rng = np.random.default_rng(27)
    t_param = rng.standard_normal(30)
    x = np.outer(t_param, [3.0, 4.0]) + [1.0, -2.0]
    t = fit_pca(x, d_max=1)
    z = apply(t, x)
    assert z.shape == (30, 1)
    orig = np.abs(t_param[:, None] - t_param[None, :]) * 5.0
    proj = np.abs(z[:, 0][:, None] - z[None, :, 0])
    assert np.allclose(orig, proj, atol=1e-9)


def test_pca_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(28)
    x = rng.standard_normal((200, 30)) * rng.uniform(0.2, 4.0, size=30)
    t = fit_pca(x, d_max=12)
    assert t.d_out == 12
    xc = x - x.mean(axis=0)
    eigvals = np.linalg.eigvalsh(xc.T @ xc / (x.shape[0] - 1))[::-1]
    assert np.allclose(t.explained_variance, eigvals[:12], atol=1e-6)
    gram = t.projection.T @ t.projection
    assert np.allclose(gram, np.eye(12), atol=1e-8)
    assert (np.diff(t.explained_variance) <= 1e-12).all()
    assert sum(t.explained_variance) <= eigvals.sum() + 1e-6


def test_pca_apply_centers_training_rows():
    rng = np.random.default_rng(29)
    x = rng.standard_normal((50, 9)) + 100.0
    t = fit_pca(x, d_max=4)
    z = apply(t, x)
    assert np.abs(z.mean(axis=0)).max() < 1e-9


def test_pca_sign_convention():
    rng = np.random.default_rng(30)
    x = rng.standard_normal((40, 8))
    t = fit_pca(x, d_max=3)
    for j in range(t.d_out):
        comp = t.projection[:, j]
        assert comp[np.abs(comp).argmax()] > 0


def test_pca_rank_deficient_input_truncates():
    rng = np.random.default_rng(31)
    base = rng.standard_normal((40, 2))
    x = np.column_stack([base, base @ rng.standard_normal((2, 4))])  # rank 2
    t = fit_pca(x, d_max=5)
    assert t.d_out == 2


def test_pca_under_budget_returns_identity_subset():
    rng = np.random.default_rng(32)
    x = rng.standard_normal((50, 10))
    t = fit_pca(x, d_max=10)
    assert t.kind == "column_subset"
    assert t.columns == tuple(range(10))


def test_pca_scaled_variant():
    rng = np.random.default_rng(33)
    x = rng.standard_normal((60, 12)) * np.array([1e3] * 2 + [1.0] * 10)
    t = fit_pca(x, d_max=4, scale=True)
    assert np.allclose(t.projection.T @ t.projection, np.eye(4), atol=1e-8)
    z = apply(t, x)
    assert np.abs(z.mean(axis=0)).max() < 1e-9
    # scaling stops the huge columns from dominating the leading direction
    lead = np.abs(t.projection[:, 0])
    assert lead[:2].max() < 0.9


def test_apply_validates_width():
    t = fit_random(5, 3, seed=0)
    with pytest.raises(DataError):
        apply(t, np.zeros((4, 6)))


def test_subset_apply_selects_columns():
    t = FeatureTransform(kind="column_subset", d_in=3, columns=(0, 2))
    out = apply(t, np.array([[5.0, 6.0, 7.0]]))
    assert out.tolist() == [[5.0, 7.0]]


def test_transform_serialization_round_trip():
    rng = np.random.default_rng(34)
    x = rng.standard_normal((30, 7))
    for t in (fit_random(7, 4, seed=3), fit_pca(x, d_max=3),
              fit_pca(x, d_max=3, scale=True)):
        back = transform_from_dict(t.to_dict())
        assert back.kind == t.kind and back.d_out == t.d_out
        assert np.allclose(apply(back, x), apply(t, x), atol=0)


def test_transform_validation():
    with pytest.raises(DataError):
        FeatureTransform(kind="column_subset", d_in=3, columns=(2, 1))
    with pytest.raises(DataError):
        FeatureTransform(kind="column_subset", d_in=3, columns=(0, 3))
    with pytest.raises(DataError):
        FeatureTransform(kind="linear_projection", d_in=2,
                         projection=np.array([[1.0, 1.0], [0.0, 1.0]]),
                         center=np.zeros(2))


def test_fit_features_dispatch():
    rng = np.random.default_rng(35)
    x = rng.standard_normal((25, 6))
    y = rng.integers(0, 2, size=25)
    assert fit_features("random", x, y, 3, seed=1).kind == "column_subset"
    assert fit_features("mutual_info", x, y, 3).kind == "column_subset"
    assert fit_features("pca", x, y, 3).kind == "linear_projection"
    with pytest.raises(ValueError):
        fit_features("lda", x, y, 3)
    assert identity_transform(4).columns == (0, 1, 2, 3)

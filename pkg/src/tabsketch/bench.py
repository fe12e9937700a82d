"""Experiment grid runner and aggregation.

Runs datasets x backends x plans x folds, persists one CSV row per evaluation,
and aggregates rows into best-combination tables, normalized scaling curves,
and paired backend comparisons. The results file is append-only: rerunning
with the same file skips keys that are already present, so interrupted runs
resume. Row order and all non-timing columns are deterministic for a given
master seed, regardless of the worker count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter

import numpy as np

from .backend import BackendSpec, accuracy, predict
from .dataset import Dataset, stratified_folds
from .errors import DataError, TabsketchError
from .featsel import DEFAULT_BINS, FEATSEL_METHODS
from .seeding import derive_seed
from .sketch import SKETCH_METHODS, STRATEGIES
from .stats import WilcoxonResult, holm_bonferroni, wilcoxon_signed_rank
from .summarize import SummaryPlan, summarize, transform_test

CSV_HEADER = ("dataset_id", "backend_id", "sketch", "featsel", "strategy",
              "n_max", "d_max", "seed", "fold", "accuracy", "failure", "elapsed_s")

# Tie preference for best_combo: earlier entries win, so the simplest plan
# (random sketch, random features, proportional quotas) is reported on a tie.
_SKETCH_RANK = {"random": 0, "kmeans": 1, "coreset": 2}
_FEATSEL_RANK = {"random": 0, "mutual_info": 1, "pca": 2}
_STRATEGY_RANK = {"proportional": 0, "equal": 1}


@dataclass(frozen=True)
class EvalRecord:
    """One (dataset, backend, plan, fold) evaluation; accuracy xor failure."""

    dataset_id: str
    backend_id: str
    sketch: str
    featsel: str
    strategy: str
    n_max: int
    d_max: int
    seed: int
    fold: int
    accuracy: float | None
    failure: str | None
    elapsed_s: float

    def __post_init__(self):
        if (self.accuracy is None) == (self.failure is None):
            raise DataError("a record carries exactly one of accuracy or failure")

    def key(self) -> tuple:
        return (self.dataset_id, self.backend_id, self.sketch, self.featsel,
                self.strategy, self.n_max, self.d_max, self.seed, self.fold)

    def combo(self) -> tuple[str, str, str]:
        return (self.sketch, self.featsel, self.strategy)

    def to_row(self) -> list[str]:
        return [self.dataset_id, self.backend_id, self.sketch, self.featsel,
                self.strategy, str(self.n_max), str(self.d_max), str(self.seed),
                str(self.fold),
                "" if self.accuracy is None else repr(float(self.accuracy)),
                self.failure or "",
                f"{self.elapsed_s:.6f}"]


def _record_from_row(row: list[str]) -> EvalRecord:
    if len(row) != len(CSV_HEADER):
        raise DataError(f"results row has {len(row)} fields, expected {len(CSV_HEADER)}")
    return EvalRecord(
        dataset_id=row[0], backend_id=row[1], sketch=row[2], featsel=row[3],
        strategy=row[4], n_max=int(row[5]), d_max=int(row[6]), seed=int(row[7]),
        fold=int(row[8]),
        accuracy=float(row[9]) if row[9] != "" else None,
        failure=row[10] if row[10] != "" else None,
        elapsed_s=float(row[11]))


def load_records(path) -> list[EvalRecord]:
    """Read a results CSV; missing file means no records yet."""
    path = Path(path)
    if not path.exists():
        return []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(header) != CSV_HEADER:
            raise DataError(f"{path}: unexpected results header {header!r}")
        return [_record_from_row(row) for row in reader if row]


@dataclass(frozen=True)
class GridSpec:
    """Axes and budgets of one benchmark run."""

    sketch_axis: tuple[str, ...] = SKETCH_METHODS
    featsel_axis: tuple[str, ...] = FEATSEL_METHODS
    strategy_axis: tuple[str, ...] = STRATEGIES
    n_max_levels: tuple[int, ...] = (3000,)
    d_max_levels: tuple[int, ...] = (100,)
    folds: int = 10
    seed: int = 0
    bins: int = DEFAULT_BINS
    backends: tuple[BackendSpec, ...] = (BackendSpec(id="knn", kind="knn"),)

    def __post_init__(self):
        for axis, allowed in ((self.sketch_axis, SKETCH_METHODS),
                              (self.featsel_axis, FEATSEL_METHODS),
                              (self.strategy_axis, STRATEGIES)):
            if not axis:
                raise DataError("grid axes must be nonempty")
            bad = [v for v in axis if v not in allowed]
            if bad:
                raise DataError(f"unknown axis value {bad[0]!r}")
        if not self.n_max_levels or not self.d_max_levels:
            raise DataError("budget level lists must be nonempty")
        if min(self.n_max_levels) < 1 or min(self.d_max_levels) < 1:
            raise DataError("budgets must be positive")
        if self.folds < 2:
            raise DataError("need at least 2 folds")
        if not self.backends:
            raise DataError("need at least one backend")

    def plans(self) -> list[SummaryPlan]:
        out = []
        for n_max in self.n_max_levels:
            for d_max in self.d_max_levels:
                for sk in self.sketch_axis:
                    for fs in self.featsel_axis:
                        for st in self.strategy_axis:
                            out.append(SummaryPlan(sketch=sk, featsel=fs, strategy=st,
                                                   n_max=n_max, d_max=d_max,
                                                   seed=self.seed, bins=self.bins))
        return out


def _run_cell(ds: Dataset, backend: BackendSpec, plan: SummaryPlan, fold) -> EvalRecord:
    start = perf_counter()
    base = dict(dataset_id=ds.id, backend_id=backend.id, sketch=plan.sketch,
                featsel=plan.featsel, strategy=plan.strategy, n_max=plan.n_max,
                d_max=plan.d_max, seed=plan.seed, fold=fold.fold_index)
    try:
        ctx = summarize(ds.features[fold.train_rows], ds.labels[fold.train_rows],
                        plan, num_classes=ds.num_classes, dataset_id=ds.id,
                        fold_index=fold.fold_index)
        test = transform_test(ctx, ds.features[fold.test_rows])
        pred = predict(ctx, test, backend)
        acc = accuracy(pred, ds.labels[fold.test_rows])
        return EvalRecord(**base, accuracy=acc, failure=None,
                          elapsed_s=perf_counter() - start)
    except TabsketchError as exc:
        reason = " ".join(f"{type(exc).__name__}: {exc}".split())
        return EvalRecord(**base, accuracy=None, failure=reason,
                          elapsed_s=perf_counter() - start)


def run_grid(spec: GridSpec, datasets, out_path, jobs: int = 1,
             progress=None) -> list[EvalRecord]:
    """Evaluate every grid cell, appending new rows to ``out_path``.

    Existing rows are kept and their keys skipped. Cells run on a thread pool
    but results are written in enumeration order by the calling thread, so the
    file contents do not depend on ``jobs``.
    """
    if jobs < 1:
        raise DataError("jobs must be at least 1")
    out_path = Path(out_path)
    existing = load_records(out_path)
    done_keys = {rec.key() for rec in existing}
    plans = spec.plans()

    cells = []
    for ds in datasets:
        folds = stratified_folds(ds, spec.folds, seed=derive_seed(spec.seed, ds.id))
        for backend in spec.backends:
            for plan in plans:
                for fold in folds:
                    cells.append((ds, backend, plan, fold))
    todo = [(ds, backend, plan, fold) for ds, backend, plan, fold in cells
            if (ds.id, backend.id, plan.sketch, plan.featsel, plan.strategy,
                plan.n_max, plan.d_max, plan.seed, fold.fold_index) not in done_keys]

    fresh: list[EvalRecord] = []
    if todo:
        write_header = not out_path.exists() or out_path.stat().st_size == 0
        with out_path.open("a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if write_header:
                writer.writerow(CSV_HEADER)
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_cell, *cell) for cell in todo]
                for i, fut in enumerate(futures):
                    rec = fut.result()
                    writer.writerow(rec.to_row())
                    fh.flush()
                    fresh.append(rec)
                    if progress is not None:
                        progress(i + 1, len(todo))
    return existing + fresh


def filter_records(records, dataset_id=None, backend_id=None, sketch=None,
                   featsel=None, strategy=None, n_max=None, d_max=None):
    """Keep records matching every given (non-None) criterion."""
    out = []
    for rec in records:
        if dataset_id is not None and rec.dataset_id != dataset_id:
            continue
        if backend_id is not None and rec.backend_id != backend_id:
            continue
        if sketch is not None and rec.sketch != sketch:
            continue
        if featsel is not None and rec.featsel != featsel:
            continue
        if strategy is not None and rec.strategy != strategy:
            continue
        if n_max is not None and rec.n_max != n_max:
            continue
        if d_max is not None and rec.d_max != d_max:
            continue
        out.append(rec)
    return out


@dataclass(frozen=True)
class BestCombo:
    dataset_id: str
    backend_id: str
    sketch: str
    featsel: str
    strategy: str
    mean_accuracy: float
    fold_accuracies: tuple[tuple[int, float], ...]


def _single_budget(records) -> None:
    budgets = {(rec.n_max, rec.d_max) for rec in records}
    if len(budgets) > 1:
        raise DataError(f"records span {len(budgets)} budget levels; "
                        "filter to one (n_max, d_max) first")


def best_combo(records, dataset_id: str, backend_id: str) -> BestCombo:
    """The method triple with the highest mean fold accuracy.

    A combo with any failed fold is excluded. Ties prefer the simplest plan:
    random over kmeans over coreset, random over mutual_info over pca,
    proportional over equal.
    """
    mine = filter_records(records, dataset_id=dataset_id, backend_id=backend_id)
    if not mine:
        raise DataError(f"no records for {dataset_id!r} / {backend_id!r}")
    _single_budget(mine)
    by_combo: dict[tuple, list[EvalRecord]] = {}
    failed = set()
    for rec in mine:
        if rec.failure is not None:
            failed.add(rec.combo())
        else:
            by_combo.setdefault(rec.combo(), []).append(rec)
    ranked = []
    for combo, recs in by_combo.items():
        if combo in failed:
            continue
        accs = sorted((rec.fold, rec.accuracy) for rec in recs)
        mean = float(np.mean([a for _, a in accs]))
        sk, fs, st = combo
        pref = (_SKETCH_RANK[sk], _FEATSEL_RANK[fs], _STRATEGY_RANK[st])
        ranked.append((-mean, pref, combo, mean, accs))
    if not ranked:
        raise DataError(f"no fully successful combo for {dataset_id!r} / {backend_id!r}")
    ranked.sort(key=lambda item: (item[0], item[1]))
    _, _, combo, mean, accs = ranked[0]
    return BestCombo(dataset_id=dataset_id, backend_id=backend_id,
                     sketch=combo[0], featsel=combo[1], strategy=combo[2],
                     mean_accuracy=mean, fold_accuracies=tuple(accs))


@dataclass(frozen=True)
class CurvePoint:
    level: int
    mean: float
    std: float
    datasets: int


def normalized_curves(records, axis: str, sketch: str = "random",
                      featsel: str = "mutual_info", strategy: str = "proportional",
                      backend_id: str | None = None) -> list[CurvePoint]:
    """Scaling curve over n_max or d_max levels, averaged across datasets.

    Per dataset, the mean fold accuracy at each level is min-max normalized to
    [0, 1] across levels (all-tied datasets contribute 0.5 everywhere); the
    returned points are the per-level mean and population standard deviation
    across datasets. Records default-filter to the random/mutual_info/
    proportional plan so that only the chosen axis varies.
    """
    if axis not in ("n_max", "d_max"):
        raise DataError("axis must be n_max or d_max")
    pool = [rec for rec in filter_records(records, sketch=sketch, featsel=featsel,
                                          strategy=strategy, backend_id=backend_id)
            if rec.failure is None]
    if not pool:
        raise DataError("no successful records after filtering")
    backends = {rec.backend_id for rec in pool}
    if len(backends) > 1:
        raise DataError("records span multiple backends; pass backend_id")
    off_axis = "d_max" if axis == "n_max" else "n_max"
    if len({getattr(rec, off_axis) for rec in pool}) > 1:
        raise DataError(f"records vary in {off_axis}; filter it to one level first")
    levels = sorted({getattr(rec, axis) for rec in pool})
    if len(levels) < 2:
        raise DataError("need at least 2 axis levels")

    per_dataset: dict[str, dict[int, list[float]]] = {}
    for rec in pool:
        per_dataset.setdefault(rec.dataset_id, {}).setdefault(
            getattr(rec, axis), []).append(rec.accuracy)
    columns = []
    for ds_id, by_level in sorted(per_dataset.items()):
        if set(by_level) != set(levels):
            continue  # a dataset missing some level cannot be normalized
        means = np.array([float(np.mean(by_level[lv])) for lv in levels])
        lo, hi = means.min(), means.max()
        if hi > lo:
            columns.append((means - lo) / (hi - lo))
        else:
            columns.append(np.full(len(levels), 0.5))
    if not columns:
        raise DataError("no dataset covers every requested level")
    stack = np.vstack(columns)
    return [CurvePoint(level=lv, mean=float(stack[:, i].mean()),
                       std=float(stack[:, i].std()), datasets=stack.shape[0])
            for i, lv in enumerate(levels)]


@dataclass(frozen=True)
class DatasetComparison:
    dataset_id: str
    mean_a: float
    mean_b: float
    wilcoxon: WilcoxonResult
    adjusted_p: float
    significant: bool


@dataclass(frozen=True)
class ComparisonReport:
    backend_a: str
    backend_b: str
    alpha: float
    per_dataset: tuple[DatasetComparison, ...]
    wins_a: int
    wins_b: int
    significant: int


def compare_backends(records, backend_a: str, backend_b: str,
                     alpha: float = 0.05) -> ComparisonReport:
    """Per-dataset paired Wilcoxon on best-combo fold accuracies, Holm-corrected.

    A dataset counts as a win for the backend with the higher mean only when
    its Holm-adjusted rejection holds at ``alpha``.
    """
    datasets = sorted({rec.dataset_id for rec in records})
    shared = []
    for ds_id in datasets:
        try:
            ca = best_combo(records, ds_id, backend_a)
            cb = best_combo(records, ds_id, backend_b)
        except DataError:
            continue
        shared.append((ds_id, ca, cb))
    if not shared:
        raise DataError(f"no dataset has best combos for both "
                        f"{backend_a!r} and {backend_b!r}")
    tests = []
    for ds_id, ca, cb in shared:
        folds_a = dict(ca.fold_accuracies)
        folds_b = dict(cb.fold_accuracies)
        if set(folds_a) != set(folds_b):
            raise DataError(f"{ds_id}: backends were scored on different folds")
        order = sorted(folds_a)
        a_vec = [folds_a[f] for f in order]
        b_vec = [folds_b[f] for f in order]
        tests.append(wilcoxon_signed_rank(a_vec, b_vec))
    holm = holm_bonferroni([t.p_value for t in tests], alpha=alpha)
    per_dataset = []
    wins_a = wins_b = 0
    for (ds_id, ca, cb), test, adj, rej in zip(shared, tests, holm.adjusted_p,
                                               holm.reject):
        per_dataset.append(DatasetComparison(
            dataset_id=ds_id, mean_a=ca.mean_accuracy, mean_b=cb.mean_accuracy,
            wilcoxon=test, adjusted_p=adj, significant=bool(rej)))
        if rej:
            if ca.mean_accuracy > cb.mean_accuracy:
                wins_a += 1
            elif cb.mean_accuracy > ca.mean_accuracy:
                wins_b += 1
    return ComparisonReport(backend_a=backend_a, backend_b=backend_b, alpha=alpha,
                            per_dataset=tuple(per_dataset), wins_a=wins_a,
                            wins_b=wins_b,
                            significant=sum(1 for d in per_dataset if d.significant))

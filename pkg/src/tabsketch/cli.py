"""Command-line entry point.

Subcommands: ``summarize`` one dataset into a compact context, ``bench`` a
config-driven grid, ``report`` best-combination tables and scaling curves,
``compare`` two backends with paired statistics, and ``synth`` to write the
bundled synthetic datasets. Exit codes: 0 success, 1 usage error, 2 data
error, 3 backend error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backend import BackendSpec
from .bench import (
    GridSpec,
    best_combo,
    compare_backends,
    filter_records,
    load_records,
    normalized_curves,
    run_grid,
)
from .dataset import MISSING_POLICIES, load_csv, write_csv
from .errors import BackendError, BridgeLaunchError, DataError, TabsketchError
from .featsel import DEFAULT_BINS, FEATSEL_METHODS
from .sketch import SKETCH_METHODS, STRATEGIES
from .summarize import SummaryPlan, summarize
from .synth import SYNTH_MAKERS


class UsageError(Exception):
    """Bad flags or config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class DatasetRef:
    path: str
    label_column: str
    id: str | None = None
    missing_policy: str = "reject"


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[DatasetRef, ...]
    grid: GridSpec
    output_dir: str = "."


_TOP_KEYS = {"datasets", "grid", "backends", "output_dir"}
_DATASET_KEYS = {"path", "label_column", "id", "missing_policy"}
_GRID_KEYS = {"sketch", "featsel", "strategy", "n_max", "d_max", "folds", "seed", "bins"}
_BACKEND_KEYS = {"id", "kind", "knn_k", "command", "timeout", "config"}


def _reject_unknown(payload: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise UsageError(f"unknown key {unknown[0]!r} in {where} "
                         f"(allowed: {', '.join(sorted(allowed))})")


def _backend_from_dict(payload: dict, index: int) -> BackendSpec:
    if not isinstance(payload, dict):
        raise UsageError(f"backends[{index}] must be an object")
    _reject_unknown(payload, _BACKEND_KEYS, f"backends[{index}]")
    kind = payload.get("kind", "knn")
    try:
        return BackendSpec(
            id=payload.get("id", kind),
            kind=kind,
            knn_k=int(payload.get("knn_k", 5)),
            bridge_command=tuple(payload.get("command", ())),
            bridge_timeout=float(payload.get("timeout", 600.0)),
            passthrough_config=dict(payload.get("config", {})))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"backends[{index}]: {exc}") from exc


def parse_config(payload: dict) -> RunConfig:
    """Validate a config object; unknown keys anywhere are rejected."""
    if not isinstance(payload, dict):
        raise UsageError("config must be a JSON object")
    _reject_unknown(payload, _TOP_KEYS, "config")
    raw_datasets = payload.get("datasets")
    if not isinstance(raw_datasets, list) or not raw_datasets:
        raise UsageError("config needs a nonempty 'datasets' list")
    refs = []
    for i, item in enumerate(raw_datasets):
        if not isinstance(item, dict):
            raise UsageError(f"datasets[{i}] must be an object")
        _reject_unknown(item, _DATASET_KEYS, f"datasets[{i}]")
        if "path" not in item:
            raise UsageError(f"datasets[{i}] needs a 'path'")
        policy = item.get("missing_policy", "reject")
        if policy not in MISSING_POLICIES:
            raise UsageError(f"datasets[{i}]: missing_policy must be one of "
                             f"{MISSING_POLICIES}")
        refs.append(DatasetRef(path=str(item["path"]),
                               label_column=str(item.get("label_column", "label")),
                               id=item.get("id"), missing_policy=policy))
    raw_grid = payload.get("grid", {})
    if not isinstance(raw_grid, dict):
        raise UsageError("'grid' must be an object")
    _reject_unknown(raw_grid, _GRID_KEYS, "grid")
    raw_backends = payload.get("backends", [{"id": "knn", "kind": "knn"}])
    if not isinstance(raw_backends, list) or not raw_backends:
        raise UsageError("'backends' must be a nonempty list")
    backends = tuple(_backend_from_dict(b, i) for i, b in enumerate(raw_backends))
    try:
        grid = GridSpec(
            sketch_axis=tuple(raw_grid.get("sketch", SKETCH_METHODS)),
            featsel_axis=tuple(raw_grid.get("featsel", FEATSEL_METHODS)),
            strategy_axis=tuple(raw_grid.get("strategy", STRATEGIES)),
            n_max_levels=tuple(int(v) for v in raw_grid.get("n_max", [3000])),
            d_max_levels=tuple(int(v) for v in raw_grid.get("d_max", [100])),
            folds=int(raw_grid.get("folds", 10)),
            seed=int(raw_grid.get("seed", 0)),
            bins=int(raw_grid.get("bins", DEFAULT_BINS)),
            backends=backends)
    except (TypeError, ValueError, DataError) as exc:
        raise UsageError(f"grid: {exc}") from exc
    return RunConfig(datasets=tuple(refs), grid=grid,
                     output_dir=str(payload.get("output_dir", ".")))


def load_config(path) -> RunConfig:
    try:
        with Path(path).open(encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(payload)


def _cmd_summarize(args) -> int:
    ds = load_csv(args.input, args.label_col, missing_policy=args.missing_policy)
    try:
        plan = SummaryPlan(sketch=args.sketch, featsel=args.featsel,
                           strategy=args.strategy, n_max=args.n_max,
                           d_max=args.d_max, seed=args.seed, bins=args.bins,
                           fit_on_sketch=args.fit_on_sketch)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ctx = summarize(ds.features, ds.labels, plan, num_classes=ds.num_classes,
                    dataset_id=ds.id)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if ctx.transform.kind == "column_subset":
        names = tuple(ds.feature_names[j] for j in ctx.transform.columns)
    else:
        names = tuple(f"pc{j}" for j in range(ctx.n_cols))
    compact_path = out_dir / f"{ds.id}_compact.csv"
    sidecar_path = out_dir / f"{ds.id}_transform.json"
    write_csv(compact_path, ctx.x_compact, ctx.y_compact, names,
              label_column=args.label_col, label_names=ds.label_names)
    with sidecar_path.open("w", encoding="utf-8") as fh:
        json.dump(ctx.transform.to_dict(), fh, indent=2)
        fh.write("\n")
    counts = np.bincount(ctx.y_compact, minlength=ctx.num_classes)
    print(f"n'={ctx.n_rows} (cap {plan.n_max})  d'={ctx.n_cols} (cap {plan.d_max})")
    print("per-class rows: " + "  ".join(
        f"{c}:{int(k)}" for c, k in enumerate(counts)))
    print(f"wrote {compact_path} and {sidecar_path}")
    return 0


def _cmd_bench(args) -> int:
    config = load_config(args.config)
    grid = config.grid
    if args.seed is not None:
        grid = dataclasses.replace(grid, seed=args.seed)
    for backend in grid.backends:
        if backend.kind != "bridge":
            continue
        exe = backend.bridge_command[0]
        if shutil.which(exe) is None and not Path(exe).exists():
            raise BridgeLaunchError(f"bridge command {exe!r} not found")
    out_dir = Path(args.output_dir if args.output_dir is not None
                   else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    datasets = [load_csv(ref.path, ref.label_column, missing_policy=ref.missing_policy,
                         dataset_id=ref.id) for ref in config.datasets]
    results_path = out_dir / "results.csv"
    step = None

    def progress(done, total):
        nonlocal step
        if step is None:
            step = max(1, total // 20)
        if done % step == 0 or done == total:
            print(f"evaluated {done}/{total}", flush=True)

    records = run_grid(grid, datasets, results_path, jobs=args.jobs,
                       progress=progress)
    failures = sum(1 for rec in records if rec.failure is not None)
    print(f"{len(records)} records in {results_path} ({failures} failures)")
    return 0


def _written(path: Path) -> None:
    print(f"wrote {path}")


def _cmd_report(args) -> int:
    import csv as _csv

    records = load_records(args.results)
    if not records:
        raise DataError(f"{args.results}: no records")
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    table_records = filter_records(records, n_max=args.n_max, d_max=args.d_max)
    pairs = sorted({(rec.dataset_id, rec.backend_id) for rec in table_records})
    rows = []
    for ds_id, backend_id in pairs:
        try:
            rows.append(best_combo(table_records, ds_id, backend_id))
        except DataError as exc:
            print(f"skipping {ds_id}/{backend_id}: {exc}", file=sys.stderr)
    combos_path = out_dir / "best_combos.csv"
    with combos_path.open("w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset_id", "backend_id", "sketch", "featsel",
                         "strategy", "mean_accuracy", "folds"])
        for combo in rows:
            writer.writerow([combo.dataset_id, combo.backend_id, combo.sketch,
                             combo.featsel, combo.strategy,
                             repr(combo.mean_accuracy),
                             len(combo.fold_accuracies)])
    _written(combos_path)

    if args.axis is not None:
        curve_records = filter_records(
            records,
            n_max=args.n_max if args.axis == "d_max" else None,
            d_max=args.d_max if args.axis == "n_max" else None)
        points = normalized_curves(curve_records, args.axis, sketch=args.sketch,
                                   featsel=args.featsel, strategy=args.strategy,
                                   backend_id=args.backend)
        curve_path = out_dir / f"curve_{args.axis}.csv"
        with curve_path.open("w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh, lineterminator="\n")
            writer.writerow([args.axis, "mean_normalized_accuracy", "std", "datasets"])
            for pt in points:
                writer.writerow([pt.level, repr(pt.mean), repr(pt.std), pt.datasets])
        _written(curve_path)
    return 0


def _cmd_compare(args) -> int:
    import csv as _csv

    records = load_records(args.results)
    if not records:
        raise DataError(f"{args.results}: no records")
    pool = filter_records(records, n_max=args.n_max, d_max=args.d_max)
    report = compare_backends(pool, args.backend_a, args.backend_b,
                              alpha=args.alpha)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"compare_{args.backend_a}_vs_{args.backend_b}.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset_id", f"mean_{args.backend_a}",
                         f"mean_{args.backend_b}", "w_statistic", "n_effective",
                         "raw_p", "adjusted_p", "significant", "winner"])
        for row in report.per_dataset:
            winner = ""
            if row.significant:
                if row.mean_a > row.mean_b:
                    winner = args.backend_a
                elif row.mean_b > row.mean_a:
                    winner = args.backend_b
            writer.writerow([row.dataset_id, repr(row.mean_a), repr(row.mean_b),
                             repr(row.wilcoxon.w_statistic),
                             row.wilcoxon.n_effective, repr(row.wilcoxon.p_value),
                             repr(row.adjusted_p), str(row.significant).lower(),
                             winner])
    _written(path)
    print(f"{report.significant} of {len(report.per_dataset)} datasets significant "
          f"at alpha={report.alpha}: {args.backend_a} wins {report.wins_a}, "
          f"{args.backend_b} wins {report.wins_b} "
          "(pairing: per-fold accuracies of each backend's best combo)")
    return 0


def _cmd_synth(args) -> int:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = args.names if args.names else sorted(SYNTH_MAKERS)
    for name in names:
        if name not in SYNTH_MAKERS:
            raise UsageError(f"unknown synthetic dataset {name!r} "
                             f"(choose from {', '.join(sorted(SYNTH_MAKERS))})")
        ds = SYNTH_MAKERS[name](seed=args.seed + sorted(SYNTH_MAKERS).index(name))
        path = out_dir / f"{ds.id}.csv"
        write_csv(path, ds.features, ds.labels, ds.feature_names)
        _written(path)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="tabsketch",
                     description="Context summarization and benchmarking for "
                                 "in-context tabular classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("summarize", help="compact one dataset")
    ps.add_argument("--input", required=True, help="dataset CSV path")
    ps.add_argument("--label-col", default="label")
    ps.add_argument("--missing-policy", choices=MISSING_POLICIES, default="reject")
    ps.add_argument("--n-max", type=int, default=3000)
    ps.add_argument("--d-max", type=int, default=100)
    ps.add_argument("--sketch", choices=SKETCH_METHODS, default="random")
    ps.add_argument("--featsel", choices=FEATSEL_METHODS, default="random")
    ps.add_argument("--strategy", choices=STRATEGIES, default="proportional")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--bins", type=int, default=DEFAULT_BINS)
    ps.add_argument("--fit-on-sketch", action="store_true",
                    help="fit the feature transform on the sketched rows "
                         "instead of the full input (ablation)")
    ps.add_argument("--output-dir", default=".")
    ps.set_defaults(func=_cmd_summarize)

    pb = sub.add_parser("bench", help="run a config-driven grid")
    pb.add_argument("--config", required=True, help="JSON run config")
    pb.add_argument("--seed", type=int, default=None, help="override grid seed")
    pb.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    pb.add_argument("--output-dir", default=None, help="override config output_dir")
    pb.set_defaults(func=_cmd_bench)

    pr = sub.add_parser("report", help="best-combo table and scaling curves")
    pr.add_argument("results", help="results CSV from bench")
    pr.add_argument("--axis", choices=("n_max", "d_max"), default=None)
    pr.add_argument("--n-max", type=int, default=None, help="budget filter")
    pr.add_argument("--d-max", type=int, default=None, help="budget filter")
    pr.add_argument("--sketch", choices=SKETCH_METHODS, default="random",
                    help="curve plan filter")
    pr.add_argument("--featsel", choices=FEATSEL_METHODS, default="mutual_info",
                    help="curve plan filter")
    pr.add_argument("--strategy", choices=STRATEGIES, default="proportional",
                    help="curve plan filter")
    pr.add_argument("--backend", default=None, help="curve backend id")
    pr.add_argument("--output-dir", default=".")
    pr.set_defaults(func=_cmd_report)

    pc = sub.add_parser("compare", help="paired significance test of two backends")
    pc.add_argument("results", help="results CSV from bench")
    pc.add_argument("backend_a")
    pc.add_argument("backend_b")
    pc.add_argument("--alpha", type=float, default=0.05)
    pc.add_argument("--n-max", type=int, default=None, help="budget filter")
    pc.add_argument("--d-max", type=int, default=None, help="budget filter")
    pc.add_argument("--output-dir", default=".")
    pc.set_defaults(func=_cmd_compare)

    pg = sub.add_parser("synth", help="write the bundled synthetic datasets")
    pg.add_argument("names", nargs="*",
                    help=f"subset of: {', '.join(sorted(SYNTH_MAKERS))}")
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--output-dir", default=".")
    pg.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except TabsketchError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

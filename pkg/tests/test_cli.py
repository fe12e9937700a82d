"""Command-line behaviors: files written, exit codes, config validation."""

import json
import subprocess
import sys

import numpy as np
import pytest

from tabsketch import load_csv, load_records, transform_from_dict
from tabsketch.cli import main, parse_config, UsageError
from tabsketch.synth import make_binary
from tabsketch.dataset import write_csv


@pytest.fixture()
def small_csv(tmp_path):
    ds = make_binary(n=80, d=8, seed=3)
    path = tmp_path / "small.csv"
    write_csv(path, ds.features, ds.labels, ds.feature_names)
    return path


def test_synth_writes_loadable_files(tmp_path):
    rc = main(["synth", "binary", "imbalanced", "--output-dir", str(tmp_path),
               "--seed", "1"])
    assert rc == 0
    ds = load_csv(tmp_path / "synth-binary.csv", "label")
    assert ds.num_classes == 2 and ds.d == 120
    imb = load_csv(tmp_path / "synth-imbalanced.csv", "label")
    counts = imb.class_counts()
    assert counts.min() / counts.sum() == pytest.approx(0.05, abs=0.01)


def test_synth_unknown_name(tmp_path):
    assert main(["synth", "mystery", "--output-dir", str(tmp_path)]) == 1


def test_summarize_writes_compact_and_sidecar(tmp_path, small_csv, capsys):
    out = tmp_path / "out"
    rc = main(["summarize", "--input", str(small_csv), "--n-max", "20",
               "--d-max", "3", "--sketch", "coreset", "--featsel", "pca",
               "--strategy", "equal", "--output-dir", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "n'=20" in printed and "d'=3" in printed
    compact = load_csv(out / "small_compact.csv", "label")
    assert compact.n == 20 and compact.d == 3
    assert compact.class_counts().tolist() == [10, 10]
    sidecar = json.loads((out / "small_transform.json").read_text())
    t = transform_from_dict(sidecar)
    assert t.d_in == 8 and t.d_out == 3


def test_summarize_under_budget_identity(tmp_path, small_csv, capsys):
    out = tmp_path / "out"
    rc = main(["summarize", "--input", str(small_csv), "--n-max", "500",
               "--d-max", "50", "--output-dir", str(out)])
    assert rc == 0
    compact = load_csv(out / "small_compact.csv", "label")
    original = load_csv(small_csv, "label")
    assert compact.n == original.n and compact.d == original.d


def test_exit_codes(tmp_path, small_csv):
    # usage: unknown flag
    assert main(["summarize", "--no-such-flag"]) == 1
    # usage: bad plan value is caught by argparse choices
    assert main(["summarize", "--input", str(small_csv), "--sketch", "x"]) == 1
    # data: missing input file
    assert main(["summarize", "--input", str(tmp_path / "nope.csv")]) == 2
    # data: empty results for report
    assert main(["report", str(tmp_path / "nope-results.csv")]) == 2


def test_bench_exit_code_for_unresolvable_bridge(tmp_path, small_csv):
    config = {
        "datasets": [{"path": str(small_csv), "label_column": "label"}],
        "grid": {"sketch": ["random"], "featsel": ["random"],
                 "strategy": ["proportional"], "n_max": [20], "d_max": [4],
                 "folds": 2},
        "backends": [{"id": "ghost", "kind": "bridge",
                      "command": ["/no/such/bridge-binary"]}],
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    assert main(["bench", "--config", str(cfg),
                 "--output-dir", str(tmp_path)]) == 3


def test_bench_report_compare_flow(tmp_path, small_csv, capsys):
    config = {
        "datasets": [{"path": str(small_csv), "label_column": "label"}],
        "grid": {"sketch": ["random", "coreset"], "featsel": ["random"],
                 "strategy": ["proportional"], "n_max": [20, 40],
                 "d_max": [4], "folds": 4, "seed": 2},
        "backends": [{"id": "knn1", "kind": "knn", "knn_k": 1},
                     {"id": "knn5", "kind": "knn", "knn_k": 5}],
        "output_dir": str(tmp_path / "bench-out"),
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    assert main(["bench", "--config", str(cfg), "--jobs", "2"]) == 0
    results = tmp_path / "bench-out" / "results.csv"
    records = load_records(results)
    assert len(records) == 1 * 2 * (2 * 1 * 1 * 2) * 4
    capsys.readouterr()

    rc = main(["report", str(results), "--axis", "n_max", "--d-max", "4",
               "--n-max", "40", "--featsel", "random", "--backend", "knn5",
               "--output-dir", str(tmp_path / "rep")])
    assert rc == 0
    combos = (tmp_path / "rep" / "best_combos.csv").read_text().splitlines()
    assert combos[0].startswith("dataset_id,backend_id,")
    assert len(combos) == 3  # header + one row per backend
    curve = (tmp_path / "rep" / "curve_n_max.csv").read_text().splitlines()
    assert len(curve) == 3
    capsys.readouterr()

    rc = main(["compare", str(results), "knn1", "knn5", "--n-max", "40",
               "--output-dir", str(tmp_path / "cmp")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "datasets significant" in out
    lines = (tmp_path / "cmp" / "compare_knn1_vs_knn5.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["dataset_id", "mean_knn1", "mean_knn5"]
    assert len(lines) == 2


def test_config_rejects_unknown_keys(tmp_path, small_csv):
    good = {
        "datasets": [{"path": str(small_csv)}],
        "grid": {"folds": 2},
    }
    parse_config(good)
    for bad in (
        {**good, "surprise": 1},
        {"datasets": [{"path": "x", "weight": 2}], "grid": {}},
        {"datasets": [{"path": "x"}], "grid": {"folds": 2, "shuffle": True}},
        {"datasets": [{"path": "x"}], "backends": [{"kind": "knn", "gpu": 0}]},
    ):
        with pytest.raises(UsageError):
            parse_config(bad)


def test_config_validation_messages(tmp_path):
    with pytest.raises(UsageError):
        parse_config({"grid": {}})
    with pytest.raises(UsageError):
        parse_config({"datasets": [], "grid": {}})
    with pytest.raises(UsageError):
        parse_config({"datasets": [{"path": "x", "missing_policy": "drop_table"}]})
    with pytest.raises(UsageError):
        parse_config({"datasets": [{"path": "x"}], "grid": {"folds": 1}})
    with pytest.raises(UsageError):
        parse_config({"datasets": [{"path": "x"}],
                      "backends": [{"kind": "bridge"}]})


def test_bad_config_file_is_usage_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["bench", "--config", str(cfg)]) == 1
    assert main(["bench", "--config", str(tmp_path / "absent.json")]) == 1


def test_console_help_runs():
    proc = subprocess.run([sys.executable, "-m", "tabsketch.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "summarize" in proc.stdout and "bench" in proc.stdout

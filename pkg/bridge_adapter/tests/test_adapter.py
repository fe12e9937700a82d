"""Adapter protocol behavior: framing, validation, exit codes, models."""

import importlib.util
import io
import json
import struct
import subprocess
import sys

import pytest

from tabbridge import ModelError, RequestError, parse_request, serve_once
from tabbridge.adapter import _checked_labels


def valid_request(**overrides):
    payload = {
        "op": "predict",
        "num_classes": 2,
        "train_x": [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]],
        "train_y": [0, 1, 0],
        "test_x": [[0.1, 0.9], [0.9, 0.1], [0.4, 0.6], [0.6, 0.4]],
        "config": {},
    }
    payload.update(overrides)
    return payload


def serve_line(model, line):
    out = io.StringIO()
    code = serve_once(model, stdin=io.StringIO(line), stdout=out)
    text = out.getvalue()
    assert text.endswith("\n") and text.count("\n") == 1
    return code, json.loads(text)


def run_process(model, line):
    proc = subprocess.run([sys.executable, "-m", "tabbridge", model],
                          input=line, capture_output=True, text=True,
                          timeout=60)
    return proc


def test_echo_round_trip_in_process():
    code, response = serve_line("echo", json.dumps(valid_request()))
    assert code == 0
    assert response["labels"] == [0, 0, 0, 0]
    assert response["model_version"].startswith("echo/")


def test_echo_handles_empty_test_matrix():
    code, response = serve_line("echo", json.dumps(valid_request(test_x=[])))
    assert code == 0
    assert response["labels"] == []


def test_echo_round_trip_subprocess():
    proc = run_process("echo", json.dumps(valid_request()) + "\n")
    assert proc.returncode == 0
    response = json.loads(proc.stdout)
    assert response["labels"] == [0, 0, 0, 0]


def test_config_key_is_optional():
    payload = valid_request()
    del payload["config"]
    code, response = serve_line("echo", json.dumps(payload))
    assert code == 0
    assert response["labels"] == [0, 0, 0, 0]


@pytest.mark.parametrize("mutate", [
    lambda p: p.update(op="train"),
    lambda p: p.pop("op"),
    lambda p: p.pop("num_classes"),
    lambda p: p.update(num_classes=0),
    lambda p: p.update(num_classes=True),
    lambda p: p.update(num_classes=2.0),
    lambda p: p.update(surprise=1),
    lambda p: p.update(train_x=[]),
    lambda p: p.update(train_x=[[0.0, 1.0], [1.0]]),
    lambda p: p.update(train_x=[[0.0, "x"], [1.0, 0.0]]),
    lambda p: p.update(test_x=[[0.0, 1.0, 2.0]]),
    lambda p: p.update(train_y=[0, 1]),
    lambda p: p.update(train_y=[0, 1, 2]),
    lambda p: p.update(train_y=[0, 1, 0.0]),
    lambda p: p.update(train_y=[0, 1, -1]),
    lambda p: p.update(config=[1, 2]),
])
def test_malformed_requests_exit_two(mutate):
    payload = valid_request()
    mutate(payload)
    code, response = serve_line("echo", json.dumps(payload))
    assert code == 2
    assert "malformed request" in response["error"]


def test_garbage_and_blank_lines_exit_two():
    for line in ("not json at all\n", "\n", "", "[1, 2, 3]\n",
                 '{"op": "predict", "train_x": [[Infinity]]}\n'):
        code, response = serve_line("echo", line)
        assert code == 2
        assert "error" in response


def test_garbage_line_subprocess_exit_two():
    proc = run_process("echo", "{{{\n")
    assert proc.returncode == 2
    assert "error" in json.loads(proc.stdout)


def test_unknown_model_name_is_a_usage_error():
    proc = run_process("oracle", json.dumps(valid_request()) + "\n")
    assert proc.returncode == 2
    assert proc.stdout == ""


def test_floats_survive_parsing_bit_for_bit():
    exotic = [0.1, 1.0 / 3.0, 1e300, 5e-324, -0.0, 123456789.123456789]
    payload = valid_request(train_x=[exotic], train_y=[0],
                            test_x=[exotic], num_classes=1)
    parsed = parse_request(json.dumps(payload))
    for got, sent in zip(parsed["train_x"][0], exotic):
        assert struct.pack("<d", got) == struct.pack("<d", sent)


def test_parse_request_rejects_nonfinite():
    line = json.dumps(valid_request()).replace("0.5", "NaN")
    with pytest.raises(RequestError, match="finite"):
        parse_request(line)


def test_checked_labels_guards_model_output():
    assert _checked_labels([0, 1, 1], 3, 2) == [0, 1, 1]
    with pytest.raises(ModelError, match="outside"):
        _checked_labels([0, 2], 2, 2)
    with pytest.raises(ModelError, match="3 labels for 2"):
        _checked_labels([0, 0, 0], 2, 2)


def test_missing_model_library_exits_three():
    absent = [name for name in ("tabpfn", "catboost")
              if importlib.util.find_spec(name) is None]
    if not absent:
        pytest.skip("both optional model libraries are installed")
    proc = run_process(absent[0], json.dumps(valid_request()) + "\n")
    assert proc.returncode == 3
    response = json.loads(proc.stdout)
    assert "not installed" in response["error"]


def test_catboost_separable_blobs():
    pytest.importorskip("catboost")
    train_x = [[float(i % 7) / 10.0, 0.0] for i in range(20)]
    train_x += [[float(i % 7) / 10.0 + 10.0, 10.0] for i in range(20)]
    train_y = [0] * 20 + [1] * 20
    test_x = [[0.3, 0.1], [10.3, 9.9], [0.2, -0.1], [10.1, 10.2]]
    payload = valid_request(train_x=train_x, train_y=train_y, test_x=test_x,
                            config={"iterations": 20, "random_seed": 4})
    proc = run_process("catboost", json.dumps(payload) + "\n")
    assert proc.returncode == 0
    response = json.loads(proc.stdout)
    assert response["labels"] == [0, 1, 0, 1]
    assert response["model_version"].startswith("catboost/")


def test_catboost_rejects_bad_config_as_model_error():
    pytest.importorskip("catboost")
    payload = valid_request(config={"no_such_parameter": 1})
    proc = run_process("catboost", json.dumps(payload) + "\n")
    assert proc.returncode == 3
    assert "failed" in json.loads(proc.stdout)["error"]

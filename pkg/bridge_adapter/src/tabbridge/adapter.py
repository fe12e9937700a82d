"""One-shot prediction adapter speaking line-delimited JSON over stdio.

Request line:
  {"op": "predict", "num_classes": m, "train_x": [[...]], "train_y": [...],
   "test_x": [[...]], "config": {...}}
Response line:
  {"labels": [...], "model_version": "..."}  or  {"error": "..."}

One request, one response, then the process exits. Exit codes: 0 success,
2 malformed request, 3 model library missing or model failure. All numbers
are finite doubles; labels are integers in [0, num_classes). The adapter
never preprocesses: rows are handed to the model exactly as received, so a
benchmark measures the caller's summarization and nothing else.
"""

import json
import math
import sys

VERSION = "0.1.0"

_REQUEST_KEYS = {"op", "num_classes", "train_x", "train_y", "test_x", "config"}


class RequestError(ValueError):
    """Request line absent, unparseable, or shaped wrong; exit code 2."""


class ModelError(RuntimeError):
    """Model library missing or prediction failed; exit code 3."""


def _matrix(rows, name, width=None):
    if not isinstance(rows, list):
        raise RequestError(f"{name} must be a list of rows")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise RequestError(f"{name}[{i}] must be a list")
        if width is None:
            width = len(row)
        if len(row) != width or width == 0:
            raise RequestError(f"{name}[{i}] has {len(row)} values, expected "
                               f"{width or 'at least 1'}")
        vals = []
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise RequestError(f"{name}[{i}][{j}] is not a number")
            f = float(v)
            if not math.isfinite(f):
                raise RequestError(f"{name}[{i}][{j}] is not finite")
            vals.append(f)
        out.append(vals)
    return out, width


def parse_request(line):
    """Validate one request line into a plain dict; floats survive bit-exact
    because JSON decoding yields the nearest double of the shortest repr the
    sender emitted."""
    if not line or not line.strip():
        raise RequestError("empty request line")
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RequestError(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise RequestError("request must be a JSON object")
    unknown = sorted(set(payload) - _REQUEST_KEYS)
    if unknown:
        raise RequestError(f"unknown key {unknown[0]!r}")
    if payload.get("op") != "predict":
        raise RequestError("op must be 'predict'")
    for key in ("num_classes", "train_x", "train_y", "test_x"):
        if key not in payload:
            raise RequestError(f"missing key {key!r}")
    m = payload["num_classes"]
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise RequestError("num_classes must be a positive integer")
    train_x, width = _matrix(payload["train_x"], "train_x")
    if not train_x:
        raise RequestError("train_x needs at least one row")
    test_x, _ = _matrix(payload["test_x"], "test_x", width=width)
    raw_y = payload["train_y"]
    if not isinstance(raw_y, list) or len(raw_y) != len(train_x):
        raise RequestError("train_y must list one label per train_x row")
    train_y = []
    for i, v in enumerate(raw_y):
        if isinstance(v, bool) or not isinstance(v, int):
            raise RequestError(f"train_y[{i}] is not an integer")
        if v < 0 or v >= m:
            raise RequestError(f"train_y[{i}] = {v} outside [0, {m})")
        train_y.append(v)
    config = payload.get("config", {})
    if not isinstance(config, dict):
        raise RequestError("config must be an object")
    return {"num_classes": m, "train_x": train_x, "train_y": train_y,
            "test_x": test_x, "config": config}


def _predict_echo(request):
    return [0] * len(request["test_x"]), f"echo/{VERSION}"


def _predict_tabpfn(request):
    try:
        import tabpfn
        from tabpfn import TabPFNClassifier
    except ImportError as exc:
        raise ModelError(f"tabpfn is not installed: {exc}") from exc
    try:
        clf = TabPFNClassifier()
        clf.fit(request["train_x"], request["train_y"])
        out = clf.predict(request["test_x"])
    except Exception as exc:
        raise ModelError(f"tabpfn prediction failed: {exc}") from exc
    version = getattr(tabpfn, "__version__", "unknown")
    return [int(v) for v in out], f"tabpfn/{version}"


def _predict_catboost(request):
    try:
        import catboost
        from catboost import CatBoostClassifier
    except ImportError as exc:
        raise ModelError(f"catboost is not installed: {exc}") from exc
    params = {"verbose": False}
    params.update(request["config"])
    try:
        clf = CatBoostClassifier(**params)
        clf.fit(request["train_x"], request["train_y"])
        out = clf.predict(request["test_x"])
    except Exception as exc:
        raise ModelError(f"catboost prediction failed: {exc}") from exc
    import numpy as np

    labels = [int(v) for v in np.asarray(out).reshape(-1)]
    version = getattr(catboost, "__version__", "unknown")
    return labels, f"catboost/{version}"


MODELS = {
    "echo": _predict_echo,
    "tabpfn": _predict_tabpfn,
    "catboost": _predict_catboost,
}


def _checked_labels(labels, n_test, num_classes):
    out = []
    for v in labels:
        iv = int(v)
        if iv < 0 or iv >= num_classes:
            raise ModelError(f"model produced label {iv} outside "
                             f"[0, {num_classes})")
        out.append(iv)
    if len(out) != n_test:
        raise ModelError(f"model produced {len(out)} labels for "
                         f"{n_test} test rows")
    return out


def _emit(stream, payload):
    stream.write(json.dumps(payload, allow_nan=False) + "\n")
    stream.flush()


def serve_once(model, stdin=None, stdout=None):
    """Read one request line, answer one response line, return the exit code."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    handler = MODELS.get(model)
    if handler is None:
        _emit(stdout, {"error": f"unknown model {model!r}"})
        return 2
    try:
        request = parse_request(stdin.readline())
    except RequestError as exc:
        _emit(stdout, {"error": f"malformed request: {exc}"})
        return 2
    try:
        labels, version = handler(request)
        labels = _checked_labels(labels, len(request["test_x"]),
                                 request["num_classes"])
    except ModelError as exc:
        _emit(stdout, {"error": str(exc)})
        return 3
    _emit(stdout, {"labels": labels, "model_version": version})
    return 0

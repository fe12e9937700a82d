"""Pluggable classifiers over a compact context.

The built-in k-nearest-neighbor backend keeps the whole suite runnable with no
external models; the bridge backend ships the context to a child process over
a one-line JSON protocol and reads one line back. Bridge failures are typed
(launch, timeout, malformed response, bad labels, remote error) so a harness
can record them without guessing.
"""

from __future__ import annotations

import json
import subprocess
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    BackendError,
    BridgeLabelError,
    BridgeLaunchError,
    BridgeProtocolError,
    BridgeRemoteError,
    BridgeTimeoutError,
    DataError,
)
from .summarize import CompactContext

BACKEND_KINDS = ("knn", "bridge")

DEFAULT_KNN_K = 5
DEFAULT_BRIDGE_TIMEOUT = 600.0


@dataclass(frozen=True)
class BackendSpec:
    """How to reach one classifier."""

    id: str
    kind: str
    knn_k: int = DEFAULT_KNN_K
    bridge_command: tuple[str, ...] = ()
    bridge_timeout: float = DEFAULT_BRIDGE_TIMEOUT
    passthrough_config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("backend id must be nonempty")
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"backend kind must be one of {BACKEND_KINDS}")
        if self.knn_k < 1:
            raise ValueError("knn_k must be at least 1")
        if self.kind == "bridge" and not self.bridge_command:
            raise ValueError("bridge backend needs a command line")
        object.__setattr__(self, "bridge_command", tuple(self.bridge_command))


@dataclass(frozen=True)
class Prediction:
    labels: np.ndarray
    elapsed: float

    def __post_init__(self):
        labels = np.array(self.labels, dtype=int)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


def predict_knn(ctx: CompactContext, test_rows, k: int = DEFAULT_KNN_K) -> Prediction:
    """Majority vote of the k nearest context rows per test row.

    Distance ties go to the lower context-row index (stable sort), vote ties
    to the lowest class index.
    """
    start = time.perf_counter()
    test = np.asarray(test_rows, dtype=float)
    if ctx.n_rows == 0:
        raise BackendError("empty compact context")
    if k > ctx.n_rows:
        raise BackendError(f"k={k} exceeds the {ctx.n_rows} context rows")
    if test.ndim != 2 or test.shape[1] != ctx.n_cols:
        raise DataError("test rows must match the compact context's columns")
    d2 = cdist(test, ctx.x_compact, "sqeuclidean")
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
    out = np.empty(test.shape[0], dtype=int)
    for i, row in enumerate(neighbors):
        votes = np.bincount(ctx.y_compact[row], minlength=ctx.num_classes)
        out[i] = int(votes.argmax())
    return Prediction(labels=out, elapsed=time.perf_counter() - start)


def _encode_request(ctx: CompactContext, test: np.ndarray, spec: BackendSpec) -> str:
    request = {
        "op": "predict",
        "num_classes": int(ctx.num_classes),
        "train_x": [[float(v) for v in row] for row in ctx.x_compact],
        "train_y": [int(v) for v in ctx.y_compact],
        "test_x": [[float(v) for v in row] for row in test],
        "config": dict(spec.passthrough_config),
    }
    try:
        return json.dumps(request, allow_nan=False)
    except ValueError as exc:
        raise BridgeProtocolError(f"request contains non-finite numbers: {exc}") from exc


def _decode_response(raw: str, n_test: int, num_classes: int) -> np.ndarray:
    line = next((ln for ln in raw.splitlines() if ln.strip()), "")
    if not line:
        raise BridgeProtocolError("bridge produced no response line")
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise BridgeProtocolError(f"bridge response is not JSON: {line[:200]!r}") from exc
    if not isinstance(payload, dict):
        raise BridgeProtocolError("bridge response must be a JSON object")
    if "error" in payload:
        raise BridgeRemoteError(str(payload["error"]))
    labels = payload.get("labels")
    if not isinstance(labels, list) or len(labels) != n_test:
        got = len(labels) if isinstance(labels, list) else "none"
        raise BridgeProtocolError(f"expected {n_test} labels, got {got}")
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in labels):
        raise BridgeLabelError("labels must be integers")
    if any(v < 0 or v >= num_classes for v in labels):
        raise BridgeLabelError(f"label outside 0..{num_classes - 1}")
    return np.array(labels, dtype=int)


def predict_bridge(ctx: CompactContext, test_rows, spec: BackendSpec) -> Prediction:
    """One-shot request/response cycle with an external model process."""
    start = time.perf_counter()
    test = np.asarray(test_rows, dtype=float)
    if test.ndim != 2 or test.shape[1] != ctx.n_cols:
        raise DataError("test rows must match the compact context's columns")
    line = _encode_request(ctx, test, spec)
    try:
        proc = subprocess.run(list(spec.bridge_command), input=line + "\n",
                              capture_output=True, text=True,
                              timeout=spec.bridge_timeout)
    except (OSError, FileNotFoundError) as exc:
        raise BridgeLaunchError(f"cannot launch {spec.bridge_command[0]!r}: {exc}") from exc
    except subprocess.TimeoutExpired as exc:
        raise BridgeTimeoutError(
            f"bridge exceeded {spec.bridge_timeout}s and was killed") from exc
    try:
        labels = _decode_response(proc.stdout, test.shape[0], ctx.num_classes)
    except BridgeProtocolError:
        if proc.returncode != 0 and not proc.stdout.strip():
            stderr = proc.stderr.strip().splitlines()
            tail = stderr[-1] if stderr else "no stderr"
            raise BridgeProtocolError(
                f"bridge exited with code {proc.returncode}: {tail}") from None
        raise
    return Prediction(labels=labels, elapsed=time.perf_counter() - start)


def predict(ctx: CompactContext, test_rows, spec: BackendSpec) -> Prediction:
    """Dispatch to the backend named by the spec."""
    if spec.kind == "knn":
        return predict_knn(ctx, test_rows, k=spec.knn_k)
    return predict_bridge(ctx, test_rows, spec)


def accuracy(pred, truth) -> float:
    """Fraction of exact label matches."""
    labels = pred.labels if isinstance(pred, Prediction) else np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if labels.shape != truth.shape:
        raise DataError("prediction and truth lengths differ")
    if labels.size == 0:
        raise DataError("cannot score an empty prediction")
    return float((labels == truth).mean())

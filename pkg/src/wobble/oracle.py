"""Black-box classifier access: batches of input vectors in, top-1 labels
(optionally soft outputs) out.

Three transports share one newline-delimited JSON body format:

- handshake (oracle -> client, first line / GET /hello):
    {"hello": {"classes": k, "input_dim": d, "probs": bool}}
- request:  {"id": u64, "inputs": [[f64, ...], ...]}
- response: {"id": u64, "labels": [u32, ...], "probs": [[f64, ...], ...]?}

plus an in-process reference model (dense layers, softmax head) stored as a
JSON manifest referencing WOBT weight tensors. Protocol violations (wrong
label range, mismatched lengths, bad id echo) are hard errors: a wrong-k
oracle would corrupt every downstream statistic.
"""

import json
import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field

import numpy as np

from .io import load_tensor, save_tensor

DEFAULT_TIMEOUT = 30.0


def _timeout() -> float:
    return float(os.environ.get("WOBBLE_TIMEOUT_SECS", DEFAULT_TIMEOUT))


class OracleError(Exception):
    pass


class ProtocolError(OracleError):
    pass


class OracleTimeoutError(OracleError):
    pass


@dataclass(frozen=True)
class OracleSpec:
    """transport: model path, "cmd:<command line>" or an http(s) base URL."""

    transport: str
    max_batch: int = 256

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")


@dataclass
class PredictionBatch:
    labels: np.ndarray
    probs: np.ndarray | None = None


# ---------------------------------------------------------------------------
# Reference in-process model


@dataclass
class MlpModel:
    """Dense layers (weights [in, out], bias [out], activation) + softmax head."""

    layers: list = field(default_factory=list)

    def __post_init__(self):
        for i, (w, b, act) in enumerate(self.layers):
            if act not in ("relu", "none"):
                raise ValueError(f"unknown activation {act!r}")
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight/bias shapes {w.shape}/{b.shape} inconsistent")
            if i > 0 and self.layers[i - 1][0].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: input dim does not chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def classes(self) -> int:
        return self.layers[-1][0].shape[1]


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Softmax probabilities for one input vector."""
    return mlp_forward_batch(model, np.asarray(x, dtype=np.float64)[None, :])[0]


def mlp_forward_batch(model: MlpModel, X) -> np.ndarray:
    h = np.asarray(X, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != model.input_dim:
        raise ValueError(f"expected inputs of shape [B, {model.input_dim}], got {h.shape}")
    for w, b, act in model.layers:
        h = h @ w.astype(np.float64) + b.astype(np.float64)
        if act == "relu":
            np.maximum(h, 0.0, out=h)
    h -= h.max(axis=1, keepdims=True)  # stable softmax
    np.exp(h, out=h)
    h /= h.sum(axis=1, keepdims=True)
    return h


def load_model(manifest_path: str) -> MlpModel:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(manifest_path))
    layers = []
    for layer in manifest["layers"]:
        w = load_tensor(os.path.join(base, layer["weights_path"]))
        b = load_tensor(os.path.join(base, layer["bias_path"]))
        layers.append((w, b.ravel(), layer["activation"]))
    return MlpModel(layers=layers)


def save_model(model: MlpModel, manifest_path: str, stem: str | None = None) -> None:
    base = os.path.dirname(os.path.abspath(manifest_path))
    os.makedirs(base, exist_ok=True)
    if stem is None:
        stem = os.path.splitext(os.path.basename(manifest_path))[0]
    entries = []
    for i, (w, b, act) in enumerate(model.layers):
        wname, bname = f"{stem}_w{i}.wobt", f"{stem}_b{i}.wobt"
        save_tensor(w, os.path.join(base, wname))
        save_tensor(b, os.path.join(base, bname))
        entries.append({"weights_path": wname, "bias_path": bname, "activation": act})
    with open(manifest_path, "w") as fh:
        json.dump({"layers": entries}, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Handles


class OracleHandle:
    """Batch classification access to one classifier. Confine to one worker;
    open additional handles for concurrency."""

    classes: int
    input_dim: int
    supports_probs: bool
    max_batch: int
    fingerprint: str

    def _classify_chunk(self, X: np.ndarray):
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class InProcessOracle(OracleHandle):
    def __init__(self, model: MlpModel, max_batch: int = 4096, fingerprint: str = "in-process"):
        self.model = model
        self.classes = model.classes
        self.input_dim = model.input_dim
        self.supports_probs = True
        self.max_batch = max_batch
        self.fingerprint = fingerprint

    def _classify_chunk(self, X):
        probs = mlp_forward_batch(self.model, X)
        return np.argmax(probs, axis=1), probs


class FunctionOracle(OracleHandle):
    """In-process handle around an arbitrary batch function; the workhorse for
    constructed test oracles (memorizers, planted-trigger linear models)."""

    def __init__(self, fn, classes: int, input_dim: int, supports_probs: bool = True,
                 max_batch: int = 4096, fingerprint: str = "function"):
        self.fn = fn
        self.classes = classes
        self.input_dim = input_dim
        self.supports_probs = supports_probs
        self.max_batch = max_batch
        self.fingerprint = fingerprint

    def _classify_chunk(self, X):
        out = np.asarray(self.fn(X))
        if out.ndim == 2:
            return np.argmax(out, axis=1), (out if self.supports_probs else None)
        return out.astype(np.int64), None


class SubprocessOracle(OracleHandle):
    def __init__(self, command: str, max_batch: int = 256):
        argv = shlex.split(command)
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
            )
        except OSError as exc:
            raise OracleError(f"failed to spawn oracle {argv[0]!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._next_id = 0
        self.max_batch = max_batch
        self.fingerprint = f"cmd:{command}"
        hello = self._read_json()
        _apply_handshake(self, hello)

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _read_json(self):
        try:
            line = self._lines.get(timeout=_timeout())
        except queue.Empty:
            raise OracleTimeoutError(
                f"oracle produced no output within {_timeout():g}s"
            ) from None
        if line is None:
            raise OracleError("oracle closed its output stream")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed oracle line: {line!r}") from exc

    def _classify_chunk(self, X):
        req_id = self._next_id
        self._next_id += 1
        request = {"id": req_id, "inputs": X.tolist()}
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise OracleError("oracle process went away") from exc
        response = self._read_json()
        if "error" in response:
            raise OracleError(f"oracle error: {response['error']}")
        if response.get("id") != req_id:
            raise ProtocolError(f"response id {response.get('id')} does not echo request {req_id}")
        labels = np.asarray(response["labels"], dtype=np.int64)
        probs = response.get("probs")
        return labels, (np.asarray(probs, dtype=np.float64) if probs is not None else None)

    def close(self):
        if self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class HttpOracle(OracleHandle):
    def __init__(self, base_url: str, max_batch: int = 256):
        import requests

        self._requests = requests
        self._base = base_url.rstrip("/")
        self._session = requests.Session()
        self._next_id = 0
        self.max_batch = max_batch
        self.fingerprint = self._base
        try:
            r = self._session.get(f"{self._base}/hello", timeout=_timeout())
        except requests.Timeout as exc:
            raise OracleTimeoutError(str(exc)) from exc
        except requests.RequestException as exc:
            raise OracleError(f"handshake failed: {exc}") from exc
        if r.status_code != 200:
            raise OracleError(f"handshake returned status {r.status_code}")
        _apply_handshake(self, r.json())

    def _classify_chunk(self, X):
        req_id = self._next_id
        self._next_id += 1
        try:
            r = self._session.post(
                f"{self._base}/classify",
                json={"id": req_id, "inputs": X.tolist()},
                timeout=_timeout(),
            )
        except self._requests.Timeout as exc:
            raise OracleTimeoutError(str(exc)) from exc
        except self._requests.RequestException as exc:
            raise OracleError(f"classify request failed: {exc}") from exc
        if r.status_code != 200:
            raise OracleError(f"classify returned status {r.status_code}")
        response = r.json()
        if response.get("id") != req_id:
            raise ProtocolError(f"response id {response.get('id')} does not echo request {req_id}")
        labels = np.asarray(response["labels"], dtype=np.int64)
        probs = response.get("probs")
        return labels, (np.asarray(probs, dtype=np.float64) if probs is not None else None)

    def close(self):
        self._session.close()


def _apply_handshake(handle: OracleHandle, hello) -> None:
    try:
        body = hello["hello"]
        handle.classes = int(body["classes"])
        handle.input_dim = int(body["input_dim"])
        handle.supports_probs = bool(body["probs"])
    except (TypeError, KeyError) as exc:
        raise ProtocolError(f"malformed handshake: {hello!r}") from exc
    if handle.classes < 2 or handle.input_dim < 1:
        raise ProtocolError(
            f"handshake declares k={handle.classes}, d={handle.input_dim}"
        )


def open_oracle(spec, max_batch: int | None = None) -> OracleHandle:
    """Open a handle from an OracleSpec or its transport string."""
    if isinstance(spec, str):
        spec = OracleSpec(transport=spec, max_batch=max_batch or 256)
    elif max_batch is not None:
        spec = OracleSpec(transport=spec.transport, max_batch=max_batch)
    t = spec.transport
    if t.startswith("cmd:"):
        return SubprocessOracle(t[4:], max_batch=spec.max_batch)
    if t.startswith("http://") or t.startswith("https://"):
        return HttpOracle(t, max_batch=spec.max_batch)
    model = load_model(t)
    return InProcessOracle(model, max_batch=spec.max_batch, fingerprint=t)


def classify_batch(handle: OracleHandle, inputs) -> PredictionBatch:
    """Classify a batch, splitting internally by handle.max_batch.

    Order-preserving; a transport failure mid-batch fails the whole call.
    """
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != handle.input_dim:
        raise ValueError(f"expected inputs of shape [B, {handle.input_dim}], got {X.shape}")
    if X.shape[0] < 1:
        raise ValueError("batch must contain at least one input")
    label_chunks, prob_chunks = [], []
    for start in range(0, X.shape[0], handle.max_batch):
        chunk = X[start:start + handle.max_batch]
        labels, probs = handle._classify_chunk(chunk)
        if len(labels) != len(chunk):
            raise ProtocolError(f"oracle returned {len(labels)} labels for {len(chunk)} inputs")
        if labels.size and (labels.min() < 0 or labels.max() >= handle.classes):
            raise ProtocolError(f"oracle returned label outside [0, {handle.classes})")
        label_chunks.append(labels)
        if probs is not None:
            if probs.shape != (len(chunk), handle.classes):
                raise ProtocolError(f"oracle returned probs of shape {probs.shape}")
            sums = probs.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 1e-5):
                raise ProtocolError("oracle probs do not sum to 1")
            prob_chunks.append(probs)
    labels = np.concatenate(label_chunks)
    probs = np.concatenate(prob_chunks) if len(prob_chunks) == len(label_chunks) else None
    return PredictionBatch(labels=labels, probs=probs)

"""Wobbliness measures over perturbation clouds.

For each test point x we draw a cloud x' ~ N(x, sigma^2 I), classify it, and
summarize how unstable the decision surface is around x:

- entropy kind (the default): W_e(x) = sum_i -A(x)_i log(A(x)_i + c), where
  A(x) is the class histogram of top-1 predictions over the cloud and c a
  small smoothing constant against log(0);
- variance kind: W_v(x) = per-class population variance of the outputs summed
  over classes, applied to one-hot vectors (top-1) or soft outputs.

All logarithms are natural. Histograms are computed from integer counts so
they sum to 1 exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .oracle import OracleError, OracleHandle, classify_batch
from .sampling import NoiseConfig, sample_cloud

KINDS = ("entropy", "variance")
PROB_SOURCES = ("top1_onehot", "soft")


@dataclass(frozen=True)
class MeasureConfig:
    noise: NoiseConfig
    c: float = 1e-5
    kind: str = "entropy"
    prob_source: str = "top1_onehot"

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("smoothing constant c must be positive")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.prob_source not in PROB_SOURCES:
            raise ValueError(f"prob_source must be one of {PROB_SOURCES}")


@dataclass
class WobblinessDistribution:
    """The set {W(x^1), ..., W(x^n)} plus everything needed to compare it."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"meta": dict(self.meta), "values": [float(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj) -> "WobblinessDistribution":
        return cls(values=np.asarray(obj["values"], dtype=np.float64), meta=dict(obj["meta"]))


@dataclass
class DecompositionReport:
    bias_sq: float
    var_f: float
    var_y: float
    total: float


def class_histogram(labels, k: int) -> np.ndarray:
    """A(x): fraction of cloud points per top-1 class, from exact counts."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("labels must be non-empty")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    counts = np.bincount(labels, minlength=k)
    return counts / labels.size


def wobbliness_entropy(hist, c: float = 1e-5) -> float:
    """W_e = sum_i -a_i log(a_i + c); slightly negative near one-hot."""
    a = np.asarray(hist, dtype=np.float64)
    return float(-(a * np.log(a + c)).sum())


def wobbliness_variance(outputs) -> float:
    """W_v: sum over classes of the per-class population variance of outputs."""
    out = np.asarray(outputs, dtype=np.float64)
    if out.ndim != 2 or out.shape[0] == 0:
        raise ValueError("outputs must be a non-empty [n, k] matrix")
    centered = out - out.mean(axis=0)
    return float((centered * centered).mean(axis=0).sum())


def _one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    eye = np.zeros((labels.size, k))
    eye[np.arange(labels.size), labels] = 1.0
    return eye


def measure_point(handle: OracleHandle, x, cfg: MeasureConfig, point_index: int) -> float:
    cloud = sample_cloud(x, cfg.noise, point_index)
    batch = classify_batch(handle, cloud.points)
    if cfg.prob_source == "soft":
        if batch.probs is None:
            raise ValueError("oracle does not provide soft outputs")
        outputs = batch.probs
    else:
        outputs = None
    if cfg.kind == "entropy":
        hist = class_histogram(batch.labels, handle.classes)
        return wobbliness_entropy(hist, cfg.c)
    if outputs is None:
        outputs = _one_hot(batch.labels, handle.classes)
    return wobbliness_variance(outputs)


def measure_points(handle: OracleHandle, points, cfg: MeasureConfig,
                   point_indices=None, class_filter: int | None = None,
                   meta_extra: dict | None = None) -> WobblinessDistribution:
    """Measure every row of `points`, in order.

    `point_indices` pins the per-point noise streams (defaults to row
    position); passing the same indices for clean and triggered variants of
    the same points yields paired clouds.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"points must be [N, d], got shape {X.shape}")
    if X.shape[1] != handle.input_dim:
        raise ValueError(f"points have d={X.shape[1]}, oracle expects {handle.input_dim}")
    if cfg.prob_source == "soft" and not handle.supports_probs:
        raise ValueError("prob_source='soft' requires an oracle with soft outputs")
    if point_indices is None:
        point_indices = range(X.shape[0])
    values = np.empty(X.shape[0], dtype=np.float64)
    try:
        for row, idx in zip(range(X.shape[0]), point_indices):
            values[row] = measure_point(handle, X[row], cfg, idx)
    except OracleError as exc:
        raise MeasurementAborted(row, values[:row].copy()) from exc
    meta = {
        "sigma": cfg.noise.sigma,
        "n_samples": cfg.noise.n_samples,
        "seed": cfg.noise.seed,
        "clip": cfg.noise.clip,
        "kind": cfg.kind,
        "c": cfg.c,
        "prob_source": cfg.prob_source,
        "oracle": handle.fingerprint,
        "point_count": int(X.shape[0]),
    }
    if class_filter is not None:
        meta["class_filter"] = int(class_filter)
    if meta_extra:
        meta.update(meta_extra)
    return WobblinessDistribution(values=values, meta=meta)


class MeasurementAborted(RuntimeError):
    """Oracle failure mid-run; carries the partial progress."""

    def __init__(self, completed: int, partial_values: np.ndarray):
        super().__init__(f"measurement aborted after {completed} points")
        self.completed = completed
        self.partial_values = partial_values


def ce_decomposition(handle: OracleHandle, x, label: int, cfg: MeasureConfig) -> DecompositionReport:
    """Bias/variance decomposition of the local cross-entropy loss.

    L = E_{x'} H(y, F(x')), Var(F) = H(E F(x')) (Shannon entropy of the mean
    soft prediction), Var(y) = 0 for one-hot y, and bias^2 is the leftover
    expectation term; bias^2 + Var(F) + Var(y) = L within 1e-6.
    """
    if not handle.supports_probs:
        raise ValueError("decomposition requires an oracle with soft outputs")
    cloud = sample_cloud(x, cfg.noise, 0)
    probs = classify_batch(handle, cloud.points).probs
    mean_f = probs.mean(axis=0)
    # H(E F): 0 log 0 = 0.
    var_f = float(-(mean_f * np.log(np.where(mean_f > 0, mean_f, 1.0))).sum())
    loss = float(-np.log(probs[:, label]).mean())
    # Term-by-term: E[H(y, F) - H(F, E F)] - H(y, E y); the middle term's
    # expectation reduces to H(E F) analytically but is computed per sample.
    cross = -(probs * np.log(np.where(mean_f > 0, mean_f, 1.0))).sum(axis=1)
    bias_sq = float((-np.log(probs[:, label]) - cross).mean())
    return DecompositionReport(bias_sq=bias_sq, var_f=var_f, var_y=0.0, total=loss)


def degenerate_entropy(c: float = 1e-5) -> float:
    """W_e of a single-class cloud: -ln(1 + c)."""
    return -math.log1p(c)


def compatible_metas(m1: dict, m2: dict) -> bool:
    """Distributions are comparable when measured under the same knobs."""
    keys = ("sigma", "n_samples", "kind", "c", "clip")
    return all(m1.get(k) == m2.get(k) for k in keys)

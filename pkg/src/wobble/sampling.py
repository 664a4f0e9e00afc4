"""Perturbation clouds: n samples x' ~ N(x, sigma^2 I) around each test point.

Randomness is counter-based (see _accel): the pair (seed, point_index) fully
determines a cloud, independent of generation order or worker count.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel

CLIP_MODES = ("none", "unit_interval")


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float
    n_samples: int
    seed: int = 0
    clip: str = "none"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.clip not in CLIP_MODES:
            raise ValueError(f"clip must be one of {CLIP_MODES}, got {self.clip!r}")


@dataclass
class PerturbationCloud:
    center: np.ndarray
    points: np.ndarray


def sample_cloud(x, cfg: NoiseConfig, point_index: int) -> PerturbationCloud:
    """Draw the deterministic Gaussian cloud around one test point.

    sigma=0 degenerates to n_samples copies of x. With clip="unit_interval"
    every coordinate is moved to the nearest bound of [0, 1] if outside.
    """
    center = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(center)):
        raise ValueError("test point must be finite")
    n, d = cfg.n_samples, center.size
    if cfg.sigma == 0.0:
        points = np.tile(center, (n, 1))
    else:
        z = _accel.standard_normals(cfg.seed, point_index, n * d).reshape(n, d)
        points = center + cfg.sigma * z
    if cfg.clip == "unit_interval":
        np.clip(points, 0.0, 1.0, out=points)
    return PerturbationCloud(center=center, points=points)

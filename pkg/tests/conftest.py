import numpy as np
import pytest

from wobble.oracle import InProcessOracle, MlpModel


def random_mlp(rng, d, k, hidden=None, scale=1.0):
    """Small random dense model with softmax head."""
    dims = [d] + (hidden or []) + [k]
    layers = []
    for i in range(len(dims) - 1):
        w = rng.normal(0.0, scale / np.sqrt(dims[i]), size=(dims[i], dims[i + 1]))
        b = rng.normal(0.0, 0.1, size=dims[i + 1])
        act = "relu" if i < len(dims) - 2 else "none"
        layers.append((w.astype(np.float32), b.astype(np.float32), act))
    return MlpModel(layers=layers)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_oracle(model, max_batch=4096):
    return InProcessOracle(model, max_batch=max_batch)

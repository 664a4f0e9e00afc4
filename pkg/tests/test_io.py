import io as stdio
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wobble.detect import apply_trigger
from wobble.io import (
    BadMagicError,
    Dataset,
    TriggerSpec,
    TruncatedTensorError,
    VersionMismatchError,
    load_dataset,
    load_tensor,
    load_trigger,
    save_dataset,
    save_tensor,
    save_trigger,
)


def roundtrip(arr):
    buf = stdio.BytesIO()
    save_tensor(arr, buf)
    buf.seek(0)
    return load_tensor(buf)


def test_single_element_file_size(tmp_path):
    # 4 magic + 4 version + 4 ndim + 4 extent + 4 payload
    path = tmp_path / "t.wobt"
    n = save_tensor(np.array([0.0], dtype=np.float32), str(path))
    assert n == 20
    assert path.stat().st_size == 20
    out = load_tensor(str(path))
    assert out.shape == (1,)
    assert out[0] == 0.0


def test_roundtrip_2x3():
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    out = roundtrip(arr)
    assert out.shape == (2, 3)
    assert out.dtype == np.float32
    assert np.array_equal(out.view(np.uint32), arr.view(np.uint32))


def test_roundtrip_large_random(rng):
    arr = rng.normal(size=(250, 784)).astype(np.float32)
    out = roundtrip(arr)
    assert np.array_equal(out.view(np.uint32), arr.view(np.uint32))


@settings(max_examples=60, deadline=None)
@given(
    dims=st.lists(st.integers(1, 6), min_size=1, max_size=3),
    seed=st.integers(0, 2**32 - 1),
)
def test_roundtrip_property(dims, seed):
    rng = np.random.default_rng(seed)
    arr = rng.normal(size=dims).astype(np.float32)
    out = roundtrip(arr)
    assert out.shape == tuple(dims)
    assert np.array_equal(out.view(np.uint32), arr.view(np.uint32))


def test_bad_magic():
    blob = b"XXXX" + b"\x00" * 20
    with pytest.raises(BadMagicError):
        load_tensor(stdio.BytesIO(blob))


def test_version_mismatch():
    buf = stdio.BytesIO()
    save_tensor(np.array([1.0]), buf)
    blob = bytearray(buf.getvalue())
    blob[4] = 9
    with pytest.raises(VersionMismatchError):
        load_tensor(stdio.BytesIO(bytes(blob)))


def test_truncated_payload():
    buf = stdio.BytesIO()
    save_tensor(np.arange(6, dtype=np.float32), buf)
    blob = buf.getvalue()[:-4]  # declares 6 elements, holds 5
    with pytest.raises(TruncatedTensorError):
        load_tensor(stdio.BytesIO(blob))


def test_extra_payload_rejected():
    buf = stdio.BytesIO()
    save_tensor(np.arange(6, dtype=np.float32), buf)
    with pytest.raises(TruncatedTensorError):
        load_tensor(stdio.BytesIO(buf.getvalue() + b"\x00\x00\x00\x00"))


def test_scalar_rejected():
    with pytest.raises(ValueError):
        save_tensor(np.float32(1.0), stdio.BytesIO())


def test_trigger_roundtrip(tmp_path):
    mask = np.zeros(16, dtype=np.float32)
    mask[:4] = 1.0
    pattern = np.ones(16, dtype=np.float32)
    trig = TriggerSpec(mask=mask, pattern=pattern, mode="overlay", target_class=3)
    path = tmp_path / "trig.json"
    save_trigger(trig, str(path))
    loaded = load_trigger(str(path))
    assert loaded.mode == "overlay"
    assert loaded.target_class == 3
    assert np.array_equal(loaded.mask, mask)
    assert np.array_equal(loaded.pattern, pattern)


def test_zero_mask_trigger_is_identity(rng):
    trig = TriggerSpec(mask=np.zeros(8), pattern=rng.normal(size=8), mode="overlay")
    x = rng.uniform(size=(5, 8))
    assert np.array_equal(apply_trigger(x, trig), x)


def test_mask_out_of_range_rejected():
    with pytest.raises(ValueError):
        TriggerSpec(mask=np.array([1.5]), pattern=np.array([0.0]))


def test_mismatched_trigger_dims_rejected():
    with pytest.raises(ValueError):
        TriggerSpec(mask=np.zeros(4), pattern=np.zeros(5))


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        TriggerSpec(mask=np.zeros(4), pattern=np.zeros(4), mode="xor")


def test_dataset_roundtrip(tmp_path):
    ds = Dataset(inputs=np.random.default_rng(0).uniform(size=(10, 4)).astype(np.float32),
                 classes=3, labels=np.array([0, 1, 2, 0, 1, 2, 0, 1, 2, 0]))
    path = tmp_path / "ds.json"
    save_dataset(ds, str(path))
    loaded = load_dataset(str(path))
    assert loaded.classes == 3
    assert np.array_equal(loaded.inputs, ds.inputs)
    assert np.array_equal(loaded.labels, ds.labels)


def test_dataset_label_validation():
    with pytest.raises(ValueError):
        Dataset(inputs=np.zeros((3, 2), dtype=np.float32), classes=2,
                labels=np.array([0, 1, 5]))
    with pytest.raises(ValueError):
        Dataset(inputs=np.zeros((3, 2), dtype=np.float32), classes=2,
                labels=np.array([0, 1]))


def test_trigger_manifest_missing_fields(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"mask_path": "nope.wobt"}))
    with pytest.raises((KeyError, FileNotFoundError)):
        load_trigger(str(path))

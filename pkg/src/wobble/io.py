"""Bit-exact tensor / dataset / trigger container formats.

Tensors travel as little-endian float32 in a tiny self-describing binary
("WOBT"): 4-byte magic, u32 version, u32 ndim, u32 extents, raw payload.
Datasets and triggers are JSON manifests referencing tensor files. Inputs are
conventionally scaled to [0, 1] (documented, not enforced); triggers are
applied in that normalized space.
"""

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"WOBT"
VERSION = 1

__all__ = [
    "Dataset",
    "TriggerSpec",
    "TensorFormatError",
    "BadMagicError",
    "VersionMismatchError",
    "TruncatedTensorError",
    "save_tensor",
    "load_tensor",
    "load_trigger",
    "save_trigger",
    "load_dataset",
    "save_dataset",
]


class TensorFormatError(ValueError):
    """Base error for malformed tensor files."""


class BadMagicError(TensorFormatError):
    pass


class VersionMismatchError(TensorFormatError):
    pass


class TruncatedTensorError(TensorFormatError):
    pass


def save_tensor(t: np.ndarray, destination) -> int:
    """Write a float32 tensor; returns the byte count written.

    `t` may be any real-valued array; it is cast to float32. Scalars are
    rejected (dims must be non-empty).
    """
    arr = np.asarray(t, dtype=np.float32)
    if arr.ndim == 0:
        raise ValueError("tensor must have at least one dimension")
    arr = np.ascontiguousarray(arr)
    for extent in arr.shape:
        if extent < 1:
            raise ValueError(f"all extents must be >= 1, got shape {arr.shape}")
        if extent > 0xFFFFFFFF:
            raise ValueError(f"extent {extent} overflows u32")
    header = MAGIC + struct.pack("<II", VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = arr.tobytes(order="C")
    if arr.dtype.byteorder == ">":  # pragma: no cover - LE platforms only
        payload = arr.byteswap().tobytes(order="C")
    blob = header + payload
    if hasattr(destination, "write"):
        destination.write(blob)
    else:
        with open(destination, "wb") as fh:
            fh.write(blob)
    return len(blob)


def load_tensor(source) -> np.ndarray:
    """Inverse of save_tensor; validates magic, version and payload length."""
    if hasattr(source, "read"):
        blob = source.read()
    else:
        with open(source, "rb") as fh:
            blob = fh.read()
    if blob[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {blob[:4]!r}")
    if len(blob) < 12:
        raise TruncatedTensorError("file shorter than fixed header")
    version, ndim = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported version {version}")
    if ndim < 1:
        raise TensorFormatError("ndim must be >= 1")
    if len(blob) < 12 + 4 * ndim:
        raise TruncatedTensorError("file shorter than declared header")
    dims = struct.unpack_from(f"<{ndim}I", blob, 12)
    if any(e < 1 for e in dims):
        raise TensorFormatError(f"all extents must be >= 1, got {dims}")
    count = 1
    for e in dims:
        count *= e
    offset = 12 + 4 * ndim
    expected = count * 4
    if len(blob) - offset != expected:
        raise TruncatedTensorError(
            f"payload holds {(len(blob) - offset) // 4} elements, header declares {count}"
        )
    data = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
    return data.reshape(dims).copy()


@dataclass
class Dataset:
    """Flattened inputs [N, d] with optional integer labels and a class count."""

    inputs: np.ndarray
    classes: int
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float32)
        if self.inputs.ndim != 2:
            raise ValueError(f"inputs must be [N, d], got shape {self.inputs.shape}")
        if self.classes < 2:
            raise ValueError("class count must be >= 2")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.inputs.shape[0],):
                raise ValueError(
                    f"labels length {self.labels.shape} does not match N={self.inputs.shape[0]}"
                )
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.classes):
                raise ValueError("labels must lie in [0, classes)")

    @property
    def n_points(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass
class TriggerSpec:
    """Mask + pattern perturbation; mask in [0,1], dims equal the dataset's d."""

    mask: np.ndarray
    pattern: np.ndarray
    mode: str = "overlay"
    target_class: int | None = None

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.float32).ravel()
        self.pattern = np.asarray(self.pattern, dtype=np.float32).ravel()
        if self.mode not in ("overlay", "additive"):
            raise ValueError(f"unknown trigger mode {self.mode!r}")
        if self.mask.shape != self.pattern.shape:
            raise ValueError(
                f"mask dims {self.mask.shape} do not match pattern dims {self.pattern.shape}"
            )
        if self.mask.size and (self.mask.min() < 0.0 or self.mask.max() > 1.0):
            raise ValueError("mask values must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return self.mask.shape[0]


def load_trigger(source) -> TriggerSpec:
    """Read a trigger manifest (JSON referencing WOBT mask/pattern files)."""
    if hasattr(source, "read"):
        manifest = json.load(source)
        base = "."
    else:
        with open(source) as fh:
            manifest = json.load(fh)
        base = os.path.dirname(os.path.abspath(source))
    mask = load_tensor(os.path.join(base, manifest["mask_path"]))
    pattern = load_tensor(os.path.join(base, manifest["pattern_path"]))
    return TriggerSpec(
        mask=mask,
        pattern=pattern,
        mode=manifest["mode"],
        target_class=manifest.get("target_class"),
    )


def save_trigger(t: TriggerSpec, manifest_path: str, stem: str | None = None) -> None:
    """Write mask/pattern tensors next to a JSON manifest."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    os.makedirs(base, exist_ok=True)
    if stem is None:
        stem = os.path.splitext(os.path.basename(manifest_path))[0]
    mask_name = f"{stem}_mask.wobt"
    pattern_name = f"{stem}_pattern.wobt"
    save_tensor(t.mask, os.path.join(base, mask_name))
    save_tensor(t.pattern, os.path.join(base, pattern_name))
    manifest = {"mask_path": mask_name, "pattern_path": pattern_name, "mode": t.mode}
    if t.target_class is not None:
        manifest["target_class"] = int(t.target_class)
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_dataset(source) -> Dataset:
    """Read a dataset manifest (JSON referencing WOBT input/label files)."""
    with open(source) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(source))
    inputs = load_tensor(os.path.join(base, manifest["inputs_path"]))
    labels = None
    if manifest.get("labels_path"):
        raw = load_tensor(os.path.join(base, manifest["labels_path"]))
        labels = np.rint(raw.ravel()).astype(np.int64)
    return Dataset(inputs=inputs, classes=int(manifest["classes"]), labels=labels)


def save_dataset(ds: Dataset, manifest_path: str, stem: str | None = None) -> None:
    base = os.path.dirname(os.path.abspath(manifest_path))
    os.makedirs(base, exist_ok=True)
    if stem is None:
        stem = os.path.splitext(os.path.basename(manifest_path))[0]
    inputs_name = f"{stem}_inputs.wobt"
    save_tensor(ds.inputs, os.path.join(base, inputs_name))
    manifest = {"inputs_path": inputs_name, "classes": int(ds.classes)}
    if ds.labels is not None:
        labels_name = f"{stem}_labels.wobt"
        save_tensor(ds.labels.astype(np.float32), os.path.join(base, labels_name))
        manifest["labels_path"] = labels_name
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

"""Binary file formats and synthetic feature sets.

All integers and floats on disk are little-endian.

Feature file (``.sdcf``)::

    magic "SDCF" | version u32 (=1) | n u32 | d u32 | flags u32
    n*d float32 row-major
    labels: n u32 (flags bit0) or n u64 bitmasks (flags bit0|bit1)

Code file (``.sdcb``)::

    magic "SDCB" | version u32 | n u32 | k_bits u32
    n * ceil(k/64) uint64 words

Model checkpoint (``.sdcm``)::

    magic "SDCM" | version u32 | d u32 | k u32
    weights d*k float64 row-major | bias k float64

ITQ checkpoint uses the same layout with magic "SDCI" and payload
mean (d), projection (d*k), rotation (k*k).
"""

import csv
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .hashing import HashModel, PackedCodes, n_words

FEATURE_MAGIC = b"SDCF"
CODE_MAGIC = b"SDCB"
MODEL_MAGIC = b"SDCM"
ITQ_MAGIC = b"SDCI"
VERSION = 1

FLAG_LABELS = 1
FLAG_MULTILABEL = 2

_HEADER = struct.Struct("<4sIIII")
_SHORT_HEADER = struct.Struct("<4sIII")


@dataclass
class FeatureMatrix:
    """Dense features with optional labels.

    Single-label sets carry integer class ids; multi-label sets carry uint64
    bitmasks and set ``multilabel``.
    """

    x: np.ndarray
    labels: np.ndarray | None = None
    multilabel: bool = False

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.labels is not None:
            dtype = np.uint64 if self.multilabel else np.int64
            self.labels = np.asarray(self.labels, dtype=dtype).reshape(-1)
            if self.labels.shape[0] != self.x.shape[0]:
                raise ValueError(
                    f"{self.labels.shape[0]} labels for {self.x.shape[0]} feature rows"
                )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "FeatureMatrix":
        labels = None if self.labels is None else self.labels[idx]
        return FeatureMatrix(self.x[idx], labels, self.multilabel)


def _read_bytes(path) -> bytes:
    return Path(path).read_bytes()


def _check_magic(raw: bytes, magic: bytes, header: struct.Struct):
    if len(raw) < header.size:
        raise FormatError(
            f"file is {len(raw)} bytes, shorter than the {header.size}-byte header", len(raw)
        )
    fields = header.unpack_from(raw, 0)
    if fields[0] != magic:
        raise FormatError(f"bad magic {fields[0]!r}, expected {magic!r}", 0)
    if fields[1] != VERSION:
        raise FormatError(f"unsupported version {fields[1]}", 4)
    return fields


def _check_length(raw: bytes, expected: int, what: str):
    if len(raw) != expected:
        kind = "truncated" if len(raw) < expected else "trailing bytes after"
        raise FormatError(
            f"{kind} {what}: expected {expected} bytes, got {len(raw)}", min(len(raw), expected)
        )


def write_features(path, fm: FeatureMatrix):
    flags = 0
    if fm.labels is not None:
        flags |= FLAG_LABELS
        if fm.multilabel:
            flags |= FLAG_MULTILABEL
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, VERSION, fm.n, fm.d, flags))
        fh.write(np.ascontiguousarray(fm.x, dtype="<f4").tobytes())
        if fm.labels is not None:
            dtype = "<u8" if fm.multilabel else "<u4"
            fh.write(np.ascontiguousarray(fm.labels, dtype=dtype).tobytes())


def read_features(path, label_column: bool = False) -> FeatureMatrix:
    """Read an ``.sdcf`` file, or a numeric CSV when the suffix is ``.csv``.

    For CSV input, ``label_column`` marks the final column as integer labels.
    """
    if Path(path).suffix.lower() == ".csv":
        return read_features_csv(path, label_column=label_column)
    raw = _read_bytes(path)
    _, _, n, d, flags = _check_magic(raw, FEATURE_MAGIC, _HEADER)
    if flags & ~(FLAG_LABELS | FLAG_MULTILABEL):
        raise FormatError(f"unknown flag bits {flags:#x}", 16)
    if flags & FLAG_MULTILABEL and not flags & FLAG_LABELS:
        raise FormatError("multi-label flag set without label flag", 16)
    has_labels = bool(flags & FLAG_LABELS)
    multilabel = bool(flags & FLAG_MULTILABEL)
    payload = n * d * 4
    label_bytes = (n * (8 if multilabel else 4)) if has_labels else 0
    _check_length(raw, _HEADER.size + payload + label_bytes, "feature file")
    offset = _HEADER.size
    x = np.frombuffer(raw, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    labels = None
    if has_labels:
        dtype = "<u8" if multilabel else "<u4"
        labels = np.frombuffer(raw, dtype=dtype, count=n, offset=offset + payload)
    return FeatureMatrix(x.astype(np.float64), labels, multilabel)


def read_features_csv(path, label_column: bool = False) -> FeatureMatrix:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise FormatError("empty CSV feature file", 0)
    try:
        table = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise FormatError(f"non-numeric CSV entry: {exc}") from None
    if label_column:
        labels = table[:, -1]
        if not np.all(labels == np.round(labels)) or np.any(labels < 0):
            raise FormatError("label column must hold nonnegative integers")
        return FeatureMatrix(table[:, :-1], labels.astype(np.int64))
    return FeatureMatrix(table)


def write_codes(path, codes: PackedCodes):
    with open(path, "wb") as fh:
        fh.write(_SHORT_HEADER.pack(CODE_MAGIC, VERSION, codes.n, codes.k_bits))
        fh.write(np.ascontiguousarray(codes.words, dtype="<u8").tobytes())


def read_codes(path) -> PackedCodes:
    raw = _read_bytes(path)
    _, _, n, k = _check_magic(raw, CODE_MAGIC, _SHORT_HEADER)
    if k < 1:
        raise FormatError("k_bits must be at least 1", 12)
    width = n_words(k)
    _check_length(raw, _SHORT_HEADER.size + n * width * 8, "code file")
    words = np.frombuffer(raw, dtype="<u8", count=n * width, offset=_SHORT_HEADER.size)
    words = words.reshape(n, width).astype(np.uint64)
    if k % 64:
        pad_mask = np.uint64(~((1 << (k % 64)) - 1) & 0xFFFFFFFFFFFFFFFF)
        if np.any(words[:, -1] & pad_mask):
            raise FormatError("nonzero padding bits in final word")
    return PackedCodes(words, k)


def _write_side_car(path, config):
    if config is not None:
        side = Path(str(path) + ".json")
        side.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def write_model(path, model: HashModel, config: dict | None = None):
    """Write a hash-layer checkpoint; ``config`` goes to ``<path>.json``."""
    with open(path, "wb") as fh:
        fh.write(_SHORT_HEADER.pack(MODEL_MAGIC, VERSION, model.dim, model.k_bits))
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())
    _write_side_car(path, config)


def read_model(path) -> HashModel:
    raw = _read_bytes(path)
    _, _, d, k = _check_magic(raw, MODEL_MAGIC, _SHORT_HEADER)
    if d < 1 or k < 1:
        raise FormatError("model dimensions must be positive", 8)
    _check_length(raw, _SHORT_HEADER.size + (d * k + k) * 8, "model file")
    off = _SHORT_HEADER.size
    w = np.frombuffer(raw, dtype="<f8", count=d * k, offset=off).reshape(d, k)
    b = np.frombuffer(raw, dtype="<f8", count=k, offset=off + d * k * 8)
    return HashModel(w.astype(np.float64), b.astype(np.float64))


def write_itq(path, model, config: dict | None = None):
    d, k = model.projection.shape
    with open(path, "wb") as fh:
        fh.write(_SHORT_HEADER.pack(ITQ_MAGIC, VERSION, d, k))
        for arr in (model.mean, model.projection, model.rotation):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    _write_side_car(path, config)


def read_itq(path):
    from .baselines import ItqModel

    raw = _read_bytes(path)
    _, _, d, k = _check_magic(raw, ITQ_MAGIC, _SHORT_HEADER)
    if d < 1 or k < 1:
        raise FormatError("model dimensions must be positive", 8)
    _check_length(raw, _SHORT_HEADER.size + (d + d * k + k * k) * 8, "ITQ model file")
    flat = np.frombuffer(raw, dtype="<f8", offset=_SHORT_HEADER.size).astype(np.float64)
    mean = flat[:d]
    projection = flat[d : d + d * k].reshape(d, k)
    rotation = flat[d + d * k :].reshape(k, k)
    return ItqModel(mean, projection, rotation)


def read_any_model(path):
    """Load either checkpoint type, dispatching on the magic bytes."""
    head = _read_bytes(path)[:4]
    if head == ITQ_MAGIC:
        return read_itq(path)
    return read_model(path)


@dataclass
class SyntheticSpec:
    n_clusters: int = 4
    points_per_cluster: int = 250
    dim: int = 128
    center_scale: float = 1.0
    within_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.n_clusters, self.points_per_cluster, self.dim) < 1:
            raise ValueError("cluster count, cluster size and dimension must be at least 1")
        if self.within_std < 0:
            raise ValueError("within_std must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


def generate_synthetic(spec: SyntheticSpec) -> FeatureMatrix:
    """Gaussian clusters: centres ~ N(0, center_scale^2 I), points ~ centre + N(0, within_std^2 I)."""
    rng = np.random.default_rng(spec.seed)
    centers = spec.center_scale * rng.standard_normal((spec.n_clusters, spec.dim))
    labels = np.repeat(np.arange(spec.n_clusters), spec.points_per_cluster)
    noise = spec.within_std * rng.standard_normal((labels.size, spec.dim))
    return FeatureMatrix(centers[labels] + noise, labels)

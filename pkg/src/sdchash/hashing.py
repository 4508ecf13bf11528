"""Linear hash layer, sign thresholding and bit packing.

Codes are packed least-significant-bit first into little-endian uint64
words; bit ``j`` of a row lives in word ``j // 64`` at position ``j % 64``
and is set iff the code entry is +1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EncodingError, ShapeError
from .linalg import as_matrix

WORD_BITS = 64


@dataclass
class HashModel:
    weights: np.ndarray  # (d, K)
    bias: np.ndarray  # (K,)

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.bias.shape[0] != self.weights.shape[1]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != weight columns {self.weights.shape[1]}"
            )

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def k_bits(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "HashModel":
        return HashModel(self.weights.copy(), self.bias.copy())


def init_model(d: int, k: int, seed=0) -> HashModel:
    """Gaussian weights with standard deviation 1/sqrt(d) and zero bias."""
    if d < 1 or k < 1:
        raise DomainError(f"dimensions must be positive, got d={d}, k={k}")
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal((d, k)) / np.sqrt(d)
    return HashModel(weights, np.zeros(k))


def forward(model: HashModel, x) -> np.ndarray:
    """Continuous codes ``x @ W + bias``."""
    x = as_matrix(x)
    if x.shape[1] != model.dim:
        raise ShapeError(f"features have {x.shape[1]} columns, model expects {model.dim}")
    return x @ model.weights + model.bias


def sign_codes(f) -> np.ndarray:
    """Entrywise sign with sign(0) = +1."""
    f = np.asarray(f, dtype=np.float64)
    return np.where(f >= 0, 1.0, -1.0)


@dataclass
class PackedCodes:
    words: np.ndarray  # (n, ceil(K / 64)) uint64
    k_bits: int

    def __post_init__(self):
        self.words = np.ascontiguousarray(self.words, dtype=np.uint64)
        if self.words.ndim != 2 or self.words.shape[1] != n_words(self.k_bits):
            raise ShapeError(
                f"expected (n, {n_words(self.k_bits)}) words for {self.k_bits} bits, "
                f"got {self.words.shape}"
            )

    @property
    def n(self) -> int:
        return self.words.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, idx) -> "PackedCodes":
        rows = self.words[idx]
        if rows.ndim == 1:
            rows = rows[None, :]
        return PackedCodes(rows, self.k_bits)

    def __eq__(self, other):
        if not isinstance(other, PackedCodes):
            return NotImplemented
        return self.k_bits == other.k_bits and np.array_equal(self.words, other.words)


def n_words(k_bits: int) -> int:
    if k_bits < 1:
        raise DomainError("k_bits must be at least 1")
    return (k_bits + WORD_BITS - 1) // WORD_BITS


def pack(codes) -> PackedCodes:
    codes = np.asarray(codes)
    if codes.ndim == 1:
        codes = codes[None, :]
    bad = np.argwhere((codes != 1) & (codes != -1))
    if bad.size:
        r, c = bad[0]
        raise EncodingError(f"entry ({r}, {c}) = {codes[r, c]!r} is not +1 or -1")
    n, k = codes.shape
    width = n_words(k)
    bits = np.zeros((n, width * WORD_BITS), dtype=np.uint8)
    bits[:, :k] = codes > 0
    as_bytes = np.packbits(bits, axis=1, bitorder="little")
    words = as_bytes.view("<u8").astype(np.uint64)
    return PackedCodes(words, k)


def unpack(packed: PackedCodes) -> np.ndarray:
    as_bytes = packed.words.astype("<u8").view(np.uint8).reshape(packed.n, -1)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")[:, : packed.k_bits]
    return np.where(bits == 1, 1.0, -1.0)


def encode(model: HashModel, x, batch_size: int = 4096) -> PackedCodes:
    """pack(sign(forward(x))) computed in row batches."""
    x = as_matrix(x)
    if x.shape[1] != model.dim:
        raise ShapeError(f"features have {x.shape[1]} columns, model expects {model.dim}")
    parts = [
        pack(sign_codes(forward(model, x[start : start + batch_size]))).words
        for start in range(0, x.shape[0], batch_size)
    ]
    if not parts:
        return PackedCodes(np.zeros((0, n_words(model.k_bits)), dtype=np.uint64), model.k_bits)
    return PackedCodes(np.vstack(parts), model.k_bits)

"""Classic unsupervised baselines: iterative quantization and random hyperplanes."""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataio import FeatureMatrix
from .errors import DegenerateInputError, DomainError, InsufficientDataError, ShapeError
from .hashing import HashModel, PackedCodes, pack, sign_codes
from .linalg import as_matrix

log = logging.getLogger(__name__)


@dataclass
class ItqModel:
    mean: np.ndarray  # (d,)
    projection: np.ndarray  # (d, K), orthonormal columns
    rotation: np.ndarray  # (K, K), orthogonal
    # quantization error ||B - VR||_F^2 after initialisation and each round
    errors: list = field(default_factory=list, compare=False)

    @property
    def k_bits(self) -> int:
        return self.rotation.shape[0]

    @property
    def dim(self) -> int:
        return self.projection.shape[0]


def _features(features) -> np.ndarray:
    return as_matrix(features.x if isinstance(features, FeatureMatrix) else features)


def random_rotation(k: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def fit_itq(features, k: int, iters: int = 50, seed=0, on_rank_deficient: str = "error",
            rank_tol: float = 1e-10, callback=None) -> ItqModel:
    """Fit ITQ (PCA to k dims, then alternate sign assignment and Procrustes rotation).

    ``on_rank_deficient`` controls what happens when the covariance has fewer
    than ``k`` non-negligible eigenvalues: ``"error"`` raises, ``"warn"``
    drops to the available rank. ``callback(round, rotation, error)`` is
    invoked after initialisation (round 0) and after every update.
    """
    x = _features(features)
    n, d = x.shape
    if k < 1:
        raise DomainError("k must be at least 1")
    if n <= k:
        raise InsufficientDataError(f"need more than {k} samples, got {n}")
    if d < k:
        raise ShapeError(f"cannot project {d}-dimensional features onto {k} bits")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / n
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval)[::-1]
    eigval, eigvec = eigval[order], eigvec[:, order]
    usable = int(np.sum(eigval > rank_tol * max(eigval[0], np.finfo(float).tiny)))
    if usable < k:
        msg = f"covariance rank {usable} is below the requested {k} bits"
        if on_rank_deficient == "warn" and usable >= 1:
            warnings.warn(msg + f"; reducing to {usable} bits", RuntimeWarning, stacklevel=2)
            k = usable
        else:
            raise DegenerateInputError(msg)
    projection = eigvec[:, :k]
    v = centered @ projection
    rotation = random_rotation(k, np.random.default_rng(seed))
    errors = [float(np.sum((sign_codes(v @ rotation) - v @ rotation) ** 2))]
    if callback is not None:
        callback(0, rotation, errors[0])
    for _ in range(iters):
        b = sign_codes(v @ rotation)
        u, _, vt = np.linalg.svd(b.T @ v)
        rotation = (u @ vt).T
        errors.append(float(np.sum((b - v @ rotation) ** 2)))
        if callback is not None:
            callback(len(errors) - 1, rotation, errors[-1])
    log.debug("ITQ quantization error %.6g -> %.6g", errors[0], errors[-1])
    return ItqModel(mean, projection, rotation, errors)


def itq_project(model: ItqModel, features) -> np.ndarray:
    x = _features(features)
    if x.shape[1] != model.dim:
        raise ShapeError(f"features have {x.shape[1]} columns, model expects {model.dim}")
    return (x - model.mean) @ model.projection @ model.rotation


def encode_itq(model: ItqModel, features) -> PackedCodes:
    return pack(sign_codes(itq_project(model, features)))


def fit_lsh(d: int, k: int, seed=0) -> HashModel:
    """Random Gaussian hyperplanes through the origin."""
    if d < 1 or k < 1:
        raise DomainError(f"dimensions must be positive, got d={d}, k={k}")
    rng = np.random.default_rng(seed)
    return HashModel(rng.standard_normal((d, k)), np.zeros(k))

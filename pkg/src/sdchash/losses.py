"""Training objectives over continuous codes, each returning value and gradient.

All gradients are with respect to the continuous code batch ``f`` (B x K).
Pair similarities are cosines between rows, so every pairwise loss shares
the same backward pass through row normalisation (``_pair_grad_to_f``).
"""

from dataclasses import dataclass, field

import numpy as np

from .calibration import BetaDistribution, calibration_targets
from .errors import DomainError, InsufficientDataError, ShapeError
from .linalg import as_matrix, row_norms


@dataclass
class LossValueAndGrad:
    value: float
    grad_f: np.ndarray
    # filled by total_loss only
    components: dict = field(default_factory=dict)
    grad_views: tuple | None = None

    def __add__(self, other):
        return LossValueAndGrad(self.value + other.value, self.grad_f + other.grad_f)

    def scaled(self, weight: float) -> "LossValueAndGrad":
        return LossValueAndGrad(weight * self.value, weight * self.grad_f)


@dataclass
class SimilarityBatch:
    """Feature similarities ``t`` and code similarities ``s`` for all i < j pairs.

    ``unit_f`` and ``norms_f`` are kept so losses can back-propagate into f.
    """

    t: np.ndarray
    s: np.ndarray
    pair_index: np.ndarray  # (P, 2), rows (i, j) with i < j
    unit_f: np.ndarray
    norms_f: np.ndarray

    def __len__(self):
        return self.t.shape[0]

    @property
    def batch_size(self) -> int:
        return self.unit_f.shape[0]


def _upper_pairs(b: int) -> np.ndarray:
    i, j = np.triu_indices(b, k=1)
    return np.stack([i, j], axis=1)


def build_pair_batch(x_batch, f_batch) -> SimilarityBatch:
    x = as_matrix(x_batch)
    f = as_matrix(f_batch)
    if x.shape[0] != f.shape[0]:
        raise ShapeError(f"row count mismatch: {x.shape[0]} features vs {f.shape[0]} codes")
    b = x.shape[0]
    if b < 2:
        raise InsufficientDataError(f"need at least 2 rows to form pairs, got {b}")
    pairs = _upper_pairs(b)
    ux = x / row_norms(x)[:, None]
    nf = row_norms(f)
    uf = f / nf[:, None]
    i, j = pairs[:, 0], pairs[:, 1]
    t = np.clip(np.einsum("pk,pk->p", ux[i], ux[j]), -1.0, 1.0)
    s = np.clip(np.einsum("pk,pk->p", uf[i], uf[j]), -1.0, 1.0)
    return SimilarityBatch(t=t, s=s, pair_index=pairs, unit_f=uf, norms_f=nf)


def _pair_grad_to_f(batch: SimilarityBatch, grad_s: np.ndarray) -> np.ndarray:
    b = batch.batch_size
    sym = np.zeros((b, b))
    i, j = batch.pair_index[:, 0], batch.pair_index[:, 1]
    sym[i, j] = grad_s
    sym[j, i] = grad_s
    return _unit_grad_to_raw(sym @ batch.unit_f, batch.unit_f, batch.norms_f)


def _unit_grad_to_raw(grad_u, unit, norms):
    # d(f/|f|)/df = (I - u u^T) / |f|
    radial = np.einsum("ik,ik->i", grad_u, unit)
    return (grad_u - radial[:, None] * unit) / norms[:, None]


def _abs_subgradient(r):
    return np.sign(r)  # sign(0) = 0


def sdc_loss(batch: SimilarityBatch, calib: BetaDistribution | None = None) -> LossValueAndGrad:
    """Mean absolute gap between t-sorted code similarities and calibration quantiles."""
    n = len(batch)
    if n < 1:
        raise InsufficientDataError("empty pair batch")
    calib = calib or BetaDistribution()
    order = np.argsort(batch.t, kind="stable")
    targets = calibration_targets(n, calib)
    residual = batch.s[order] - targets
    value = float(np.mean(np.abs(residual)))
    grad_s = np.empty(n)
    grad_s[order] = _abs_subgradient(residual) / n
    return LossValueAndGrad(value, _pair_grad_to_f(batch, grad_s))


def preservation_loss(batch: SimilarityBatch, p: int = 2) -> LossValueAndGrad:
    if p not in (1, 2):
        raise DomainError(f"exponent must be 1 or 2, got {p}")
    n = len(batch)
    if n < 1:
        raise InsufficientDataError("empty pair batch")
    residual = batch.s - batch.t
    if p == 2:
        value = float(np.mean(residual**2))
        grad_s = 2.0 * residual / n
    else:
        value = float(np.mean(np.abs(residual)))
        grad_s = _abs_subgradient(residual) / n
    return LossValueAndGrad(value, _pair_grad_to_f(batch, grad_s))


def quantization_loss(f_batch) -> LossValueAndGrad:
    """Mean of 1 - cos(f_i, sign(f_i)); sign(f) is held constant."""
    f = as_matrix(f_batch)
    n, k = f.shape
    norms = row_norms(f)
    b = np.where(f >= 0, 1.0, -1.0)
    b_norm = np.sqrt(k)
    dots = np.einsum("ik,ik->i", f, b)
    cos = dots / (norms * b_norm)
    value = float(np.mean(1.0 - cos))
    grad_cos = b / (norms[:, None] * b_norm) - (cos / norms**2)[:, None] * f
    return LossValueAndGrad(value, -grad_cos / n)


def contrastive_loss(f_view1, f_view2, temperature: float = 0.2) -> LossValueAndGrad:
    """NT-Xent over the 2B normalised codes of two views.

    ``grad_f`` is stacked: the first B rows belong to view 1, the rest to view 2.
    """
    a = as_matrix(f_view1)
    b = as_matrix(f_view2)
    if a.shape != b.shape:
        raise ShapeError(f"view shapes differ: {a.shape} vs {b.shape}")
    if temperature <= 0:
        raise DomainError("temperature must be positive")
    n = a.shape[0]
    if n < 2:
        raise InsufficientDataError("contrastive loss needs at least 2 samples for negatives")
    f = np.vstack([a, b])
    norms = row_norms(f)
    z = f / norms[:, None]
    m = 2 * n
    logits = (z @ z.T) / temperature
    np.fill_diagonal(logits, -np.inf)
    positive = np.concatenate([np.arange(n, m), np.arange(0, n)])
    row_max = np.max(logits, axis=1, keepdims=True)
    exp = np.exp(logits - row_max)
    denom = exp.sum(axis=1, keepdims=True)
    log_prob_pos = logits[np.arange(m), positive] - (row_max[:, 0] + np.log(denom[:, 0]))
    value = float(-np.mean(log_prob_pos))

    grad_logits = exp / denom
    grad_logits[np.arange(m), positive] -= 1.0
    grad_logits /= m
    grad_z = (grad_logits + grad_logits.T) @ z / temperature
    return LossValueAndGrad(value, _unit_grad_to_raw(grad_z, z, norms))


def total_loss(
    f_batch,
    x_batch,
    calib: BetaDistribution | None = None,
    lambda_q: float = 1.0,
    lambda_cl: float = 1.0,
    views=None,
    temperature: float = 0.2,
    objective: str = "sdc",
    p: int = 2,
) -> LossValueAndGrad:
    """Weighted objective ``main + lambda_q * quant + lambda_cl * contrastive``.

    ``main`` is the SDC loss, or the preservation loss when
    ``objective="preservation"``. ``views`` is a pair of continuous-code
    batches for the contrastive term; it is skipped when ``lambda_cl == 0``.
    The contrastive gradient w.r.t. each view is returned in ``grad_views``
    and the unweighted component values in ``components``.
    """
    if lambda_q < 0 or lambda_cl < 0:
        raise DomainError("loss weights must be nonnegative")
    batch = build_pair_batch(x_batch, f_batch)
    if objective == "sdc":
        main = sdc_loss(batch, calib)
    elif objective == "preservation":
        main = preservation_loss(batch, p)
    else:
        raise DomainError(f"unknown objective {objective!r}")
    components = {objective: main.value}
    total = LossValueAndGrad(main.value, main.grad_f.copy())
    if lambda_q > 0:
        q = quantization_loss(f_batch)
        components["quantization"] = q.value
        total = total + q.scaled(lambda_q)
    grad_views = None
    if lambda_cl > 0:
        if views is None:
            raise DomainError("lambda_cl > 0 requires two views")
        cl = contrastive_loss(views[0], views[1], temperature)
        components["contrastive"] = cl.value
        total = LossValueAndGrad(total.value + lambda_cl * cl.value, total.grad_f)
        half = cl.grad_f.shape[0] // 2
        grad_views = (lambda_cl * cl.grad_f[:half], lambda_cl * cl.grad_f[half:])
    total.components = components
    total.grad_views = grad_views
    return total

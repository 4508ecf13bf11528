"""Mini-batch Adam training of the linear hash layer."""

import logging
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .calibration import BetaDistribution
from .dataio import FeatureMatrix
from .errors import DomainError, InsufficientDataError, NumericalError
from .hashing import HashModel, PackedCodes, encode, forward, init_model
from .linalg import AdamState, adam_update, as_matrix
from .losses import total_loss

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-4
    k_bits: int = 64
    lambda_q: float = 1.0
    lambda_cl: float = 1.0
    calib_alpha: float = 5.0
    calib_beta: float = 5.0
    seed: int = 0
    shuffle: bool = True
    # "sdc" or "preservation" (similarity-preservation baseline)
    objective: str = "sdc"
    preservation_p: int = 2
    temperature: float = 0.2
    # view noise std as a fraction of the global feature std
    view_noise: float = 0.1
    view_dropout: float = 0.1
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise DomainError("epochs and batch_size must be at least 1")
        if self.lr <= 0:
            raise DomainError("lr must be positive")
        if self.calib_alpha <= 0 or self.calib_beta <= 0:
            raise DomainError("calibration shapes must be positive")
        if self.k_bits < 1:
            raise DomainError("k_bits must be at least 1")
        if self.objective not in ("sdc", "preservation"):
            raise DomainError(f"unknown objective {self.objective!r}")

    @classmethod
    def from_dict(cls, values: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in known})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    total: float
    components: dict
    wall_time: float = field(compare=False, default=0.0)


@dataclass
class TrainReport:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list, compare=False)

    def to_dict(self, include_time: bool = False) -> dict:
        out = []
        for r in self.records:
            row = {"epoch": r.epoch, "total": r.total, "components": dict(r.components)}
            if include_time:
                row["wall_time"] = r.wall_time
            out.append(row)
        return {"epochs": out}


def _make_view(x, rng, noise_std, dropout):
    noisy = x + noise_std * rng.standard_normal(x.shape)
    if dropout > 0:
        noisy = noisy * (rng.random(x.shape) >= dropout)
    # an all-dropped row would have no direction
    dead = ~np.any(noisy != 0.0, axis=1)
    if np.any(dead):
        noisy[dead] = x[dead]
    return noisy


def train(features, cfg: TrainConfig, model: HashModel | None = None):
    """Fit a hash layer; returns ``(model, report)``.

    Deterministic for a fixed ``cfg.seed``: initialisation, shuffling and
    view noise draw from separate generators spawned from that seed.
    """
    x = as_matrix(features.x if isinstance(features, FeatureMatrix) else features)
    n, d = x.shape
    if n < cfg.batch_size or n < 2:
        raise InsufficientDataError(f"{n} samples is fewer than batch size {cfg.batch_size}")
    init_seq, shuffle_seq, noise_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    noise_rng = np.random.default_rng(noise_seq)
    if model is None:
        model = init_model(d, cfg.k_bits, np.random.default_rng(init_seq))
    else:
        model = model.copy()
    calib = BetaDistribution(cfg.calib_alpha, cfg.calib_beta)
    w_state = AdamState.for_param(model.weights, lr=cfg.lr)
    b_state = AdamState.for_param(model.bias, lr=cfg.lr)
    noise_std = cfg.view_noise * float(np.std(x))
    use_views = cfg.lambda_cl > 0

    report = TrainReport()
    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        sums: dict = {}
        total_sum = 0.0
        n_batches = 0
        for batch_no, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            if idx.size < 2:
                continue
            xb = x[idx]
            fb = forward(model, xb)
            views = None
            view_inputs = None
            if use_views:
                view_inputs = (
                    _make_view(xb, noise_rng, noise_std, cfg.view_dropout),
                    _make_view(xb, noise_rng, noise_std, cfg.view_dropout),
                )
                views = (forward(model, view_inputs[0]), forward(model, view_inputs[1]))
            loss = total_loss(
                fb,
                xb,
                calib,
                lambda_q=cfg.lambda_q,
                lambda_cl=cfg.lambda_cl,
                views=views,
                temperature=cfg.temperature,
                objective=cfg.objective,
                p=cfg.preservation_p,
            )
            if not np.isfinite(loss.value) or not np.all(np.isfinite(loss.grad_f)):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch {batch_no}")
            grad_w = xb.T @ loss.grad_f
            grad_b = loss.grad_f.sum(axis=0)
            if loss.grad_views is not None:
                for vx, vg in zip(view_inputs, loss.grad_views):
                    grad_w += vx.T @ vg
                    grad_b += vg.sum(axis=0)
            model.weights = adam_update(model.weights, grad_w, w_state)
            model.bias = adam_update(model.bias, grad_b, b_state)
            if not (np.all(np.isfinite(model.weights)) and np.all(np.isfinite(model.bias))):
                raise NumericalError(f"non-finite parameters at epoch {epoch}, batch {batch_no}")
            total_sum += loss.value
            for key, value in loss.components.items():
                sums[key] = sums.get(key, 0.0) + value
            n_batches += 1
        record = EpochRecord(
            epoch=epoch,
            total=total_sum / n_batches,
            components={k: v / n_batches for k, v in sums.items()},
            wall_time=time.perf_counter() - started,
        )
        report.records.append(record)
        if cfg.keep_snapshots:
            report.snapshots.append(model.copy())
        log.debug("epoch %d loss %.6f (%.2fs)", epoch, record.total, record.wall_time)
    return model, report


def encode_dataset(model: HashModel, features, batch_size: int = 4096) -> PackedCodes:
    x = features.x if isinstance(features, FeatureMatrix) else features
    return encode(model, x, batch_size=batch_size)

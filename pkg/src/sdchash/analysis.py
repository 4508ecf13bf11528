"""Similarity-collapse diagnostics: positive/negative pair histograms and their overlap.

Labels enter the package only here and in retrieval evaluation; the trainer
never sees them.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, InsufficientDataError
from .hashing import HashModel, PackedCodes, encode, pack
from .retrieval import relevance_matrix

DEFAULT_BINS = 200


def _pairs_exist(labels, multilabel):
    """Return (positive_exists, negative_exists) by grouping identical labels."""
    uniq, counts = np.unique(labels, return_counts=True)
    if not multilabel:
        return bool(np.any(counts >= 2)), uniq.size >= 2
    rel = relevance_matrix(uniq, uniq, multilabel=True)
    pos = bool(np.any(np.diag(rel) & (counts >= 2))) or bool(np.any(np.triu(rel, 1)))
    neg = bool(np.any(~rel))
    return pos, neg


def sample_pairs(labels, n_pos: int, n_neg: int, seed=0, multilabel: bool = False,
                 block: int = 65536):
    """Uniformly sample distinct-index pairs split by label agreement.

    Pairs are drawn with replacement by rejection until each quota is met.
    Returns two (m, 2) int arrays: positives then negatives.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least two items to form pairs")
    pos_exists, neg_exists = _pairs_exist(labels, multilabel)
    if n_pos > 0 and not pos_exists:
        raise InsufficientDataError("no positive pairs available: no two items share a label")
    if n_neg > 0 and not neg_exists:
        raise InsufficientDataError("no negative pairs available: every pair shares a label")
    rng = np.random.default_rng(seed)
    pos, neg = [], []
    got_pos = got_neg = 0
    while got_pos < n_pos or got_neg < n_neg:
        i = rng.integers(0, n, size=block)
        j = rng.integers(0, n - 1, size=block)
        j = j + (j >= i)  # uniform over j != i
        if multilabel:
            same = (labels[i].astype(np.uint64) & labels[j].astype(np.uint64)) != 0
        else:
            same = labels[i] == labels[j]
        cand = np.stack([i, j], axis=1)
        if got_pos < n_pos:
            take = cand[same][: n_pos - got_pos]
            pos.append(take)
            got_pos += take.shape[0]
        if got_neg < n_neg:
            take = cand[~same][: n_neg - got_neg]
            neg.append(take)
            got_neg += take.shape[0]
    empty = np.zeros((0, 2), dtype=np.int64)
    return (np.vstack(pos) if pos else empty), (np.vstack(neg) if neg else empty)


@dataclass
class SimilarityHistogram:
    bin_edges: np.ndarray
    positive_mass: np.ndarray
    negative_mass: np.ndarray
    sample_counts: tuple

    @property
    def bins(self) -> int:
        return self.positive_mass.size


def _masses(values, edges):
    counts, _ = np.histogram(values, bins=edges)
    return counts / counts.sum()


def build_histogram(sims_pos, sims_neg, bins: int = DEFAULT_BINS) -> SimilarityHistogram:
    sims_pos = np.asarray(sims_pos, dtype=np.float64).ravel()
    sims_neg = np.asarray(sims_neg, dtype=np.float64).ravel()
    if sims_pos.size == 0 or sims_neg.size == 0:
        raise InsufficientDataError("both similarity arrays must be nonempty")
    if bins < 2:
        raise DomainError("need at least two bins")
    for name, arr in (("positive", sims_pos), ("negative", sims_neg)):
        if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) > 1.0):
            raise DomainError(f"{name} similarities must lie in [-1, 1]")
    edges = np.linspace(-1.0, 1.0, bins + 1)
    return SimilarityHistogram(
        edges, _masses(sims_pos, edges), _masses(sims_neg, edges), (sims_pos.size, sims_neg.size)
    )


def intersection_score(h: SimilarityHistogram) -> float:
    """Sum of bin-wise minima of the two normalised histograms (1 = full collapse)."""
    return float(np.minimum(h.positive_mass, h.negative_mass).sum())


def code_pair_similarity(codes, pairs) -> np.ndarray:
    """Cosine similarity of sign codes, computed exactly as 1 - 2*hamming/K."""
    if not isinstance(codes, PackedCodes):
        codes = pack(codes)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    xor = codes.words[pairs[:, 0]] ^ codes.words[pairs[:, 1]]
    dist = np.bitwise_count(xor).sum(axis=1, dtype=np.int64)
    return (codes.k_bits - 2 * dist) / codes.k_bits


def feature_pair_similarity(x, pairs) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    a, b = x[pairs[:, 0]], x[pairs[:, 1]]
    cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
    return np.clip(cos, -1.0, 1.0)


@dataclass
class CollapseReport:
    score: float
    histogram: SimilarityHistogram
    pos_pairs: np.ndarray
    neg_pairs: np.ndarray
    pos_sims: np.ndarray
    neg_sims: np.ndarray
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "intersection": self.score,
            "n_pos": int(self.pos_sims.size),
            "n_neg": int(self.neg_sims.size),
            "bins": self.histogram.bins,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def write_csvs(self, out_dir, prefix: str = "collapse"):
        """Write ``<prefix>_histogram.csv`` and ``<prefix>_pairs.csv``; returns both paths."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        hist_path = out_dir / f"{prefix}_histogram.csv"
        pairs_path = out_dir / f"{prefix}_pairs.csv"
        h = self.histogram
        with open(hist_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_low", "bin_high", "pos_mass", "neg_mass"])
            for lo, hi, p, q in zip(h.bin_edges[:-1], h.bin_edges[1:], h.positive_mass, h.negative_mass):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(p)), repr(float(q))])
        with open(pairs_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "i", "j", "similarity"])
            for kind, pairs, sims in (("pos", self.pos_pairs, self.pos_sims), ("neg", self.neg_pairs, self.neg_sims)):
                for (i, j), s in zip(pairs, sims):
                    w.writerow([kind, int(i), int(j), repr(float(s))])
        return hist_path, pairs_path


def collapse_report(source, labels, features=None, n_pos: int = 10_000, n_neg: int = 100_000,
                    bins: int = DEFAULT_BINS, seed=0, multilabel: bool = False) -> CollapseReport:
    """Histogram-intersection report for sign codes.

    ``source`` is a HashModel (then ``features`` is required), packed codes,
    or a +-1 code matrix. Pass ``source=None`` with ``features`` to analyse
    raw feature cosines instead.
    """
    pos_pairs, neg_pairs = sample_pairs(labels, n_pos, n_neg, seed=seed, multilabel=multilabel)
    if source is None:
        if features is None:
            raise DomainError("either codes, a model or features are required")
        x = getattr(features, "x", features)
        sim = lambda pairs: feature_pair_similarity(x, pairs)  # noqa: E731
        kind = "features"
    else:
        if isinstance(source, HashModel):
            if features is None:
                raise DomainError("a model source needs features to encode")
            codes = encode(source, getattr(features, "x", features))
        elif isinstance(source, PackedCodes):
            codes = source
        else:
            codes = pack(np.asarray(source))
        sim = lambda pairs: code_pair_similarity(codes, pairs)  # noqa: E731
        kind = f"codes{codes.k_bits}"
    pos_sims, neg_sims = sim(pos_pairs), sim(neg_pairs)
    hist = build_histogram(pos_sims, neg_sims, bins)
    config = {"n_pos": n_pos, "n_neg": n_neg, "bins": bins, "seed": seed, "source": kind}
    return CollapseReport(intersection_score(hist), hist, pos_pairs, neg_pairs, pos_sims, neg_sims, config)

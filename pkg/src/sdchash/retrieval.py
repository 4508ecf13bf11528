"""Exhaustive Hamming search over packed codes, mAP@k and PR curves."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDataError, ShapeError
from .hashing import PackedCodes


def _check_compatible(a: PackedCodes, b: PackedCodes):
    if a.k_bits != b.k_bits:
        raise ShapeError(f"code lengths differ: {a.k_bits} vs {b.k_bits}")


def hamming_distance(a: PackedCodes, b: PackedCodes) -> int:
    """Distance between the first row of ``a`` and the first row of ``b``."""
    _check_compatible(a, b)
    return int(np.bitwise_count(a.words[0] ^ b.words[0]).sum())


_XOR_BUDGET_WORDS = 1 << 22


def hamming_matrix(queries: PackedCodes, gallery: PackedCodes) -> np.ndarray:
    """All query-gallery distances as an int64 matrix."""
    _check_compatible(queries, gallery)
    out = np.empty((queries.n, gallery.n), dtype=np.int64)
    g = gallery.words
    chunk = max(1, _XOR_BUDGET_WORDS // max(1, g.size))
    for start in range(0, queries.n, chunk):
        q = queries.words[start : start + chunk]
        xor = q[:, None, :] ^ g[None, :, :]
        out[start : start + chunk] = np.bitwise_count(xor).sum(axis=2, dtype=np.int64)
    return out


@dataclass
class RetrievalResult:
    query_index: int
    indices: np.ndarray
    distances: np.ndarray


def _rank_rows(dist: np.ndarray, k: int) -> np.ndarray:
    # distance-major, gallery-index-minor composite key makes every key unique
    n_gallery = dist.shape[1]
    keys = dist * n_gallery + np.arange(n_gallery)
    if k < n_gallery:
        part = np.argpartition(keys, k - 1, axis=1)[:, :k]
        sub = np.take_along_axis(keys, part, axis=1)
        return np.take_along_axis(part, np.argsort(sub, axis=1), axis=1)
    return np.argsort(keys, axis=1)


def search_topk(queries: PackedCodes, gallery: PackedCodes, k: int, chunk: int = 256):
    """Exact k nearest gallery items per query, ties by ascending gallery index."""
    _check_compatible(queries, gallery)
    if gallery.n == 0:
        raise InsufficientDataError("empty gallery")
    if k < 1:
        raise DomainError("k must be at least 1")
    k = min(k, gallery.n)
    results = []
    for start in range(0, queries.n, chunk):
        dist = hamming_matrix(queries[start : start + chunk], gallery)
        ranked = _rank_rows(dist, k)
        for row, order in enumerate(ranked):
            results.append(RetrievalResult(start + row, order, dist[row, order]))
    return results


def average_precision(flags, total_relevant: int, k: int, normalization: str = "min") -> float:
    """AP@k = sum_{i<=k} P@i * rel_i / Z.

    ``normalization="min"`` uses Z = min(total_relevant, k);
    ``"retrieved"`` uses Z = number of relevant items in the top k.
    """
    rel = np.asarray(flags, dtype=np.float64)[:k]
    if total_relevant <= 0 or rel.size == 0:
        return 0.0
    hits = np.cumsum(rel)
    precision = hits / np.arange(1, rel.size + 1)
    if normalization == "min":
        denom = min(total_relevant, k)
    elif normalization == "retrieved":
        denom = hits[-1]
        if denom == 0:
            return 0.0
    else:
        raise DomainError(f"unknown AP normalization {normalization!r}")
    return float(np.sum(precision * rel) / denom)


def relevance_matrix(query_labels, gallery_labels, multilabel: bool = False) -> np.ndarray:
    q = np.asarray(query_labels)
    g = np.asarray(gallery_labels)
    if multilabel:
        return (q.astype(np.uint64)[:, None] & g.astype(np.uint64)[None, :]) != 0
    return q[:, None] == g[None, :]


@dataclass
class EvalSummary:
    map_at_k: float
    k: int
    per_query_ap: np.ndarray
    # one row per Hamming radius 0..K: (radius, precision, recall)
    pr_curve: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "map_at_k": self.map_at_k,
            "k": self.k,
            "n_queries": int(self.per_query_ap.size),
            "per_query_ap": [float(v) for v in self.per_query_ap],
            "pr_curve": [
                {"radius": int(r), "precision": _json_float(p), "recall": _json_float(c)}
                for r, p, c in self.pr_curve
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def write_pr_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["radius", "precision", "recall"])
            for r, p, c in self.pr_curve:
                writer.writerow([int(r), repr(float(p)), repr(float(c))])


def _json_float(v):
    v = float(v)
    return None if np.isnan(v) else v


def pr_curve_by_radius(dist: np.ndarray, relevant: np.ndarray, k_bits: int) -> np.ndarray:
    """Mean precision and recall over queries for every Hamming radius.

    Precision at a radius averages only over queries that retrieve at least
    one item; recall averages over queries with at least one relevant item.
    A radius where no query retrieves anything reports NaN precision.
    """
    n_q = dist.shape[0]
    total_rel = relevant.sum(axis=1)
    rows = []
    retrieved_cum = np.zeros(n_q, dtype=np.int64)
    hits_cum = np.zeros(n_q, dtype=np.int64)
    for r in range(k_bits + 1):
        at_r = dist == r
        retrieved_cum += at_r.sum(axis=1)
        hits_cum += (at_r & relevant).sum(axis=1)
        has_any = retrieved_cum > 0
        precision = float(np.mean(hits_cum[has_any] / retrieved_cum[has_any])) if has_any.any() else np.nan
        has_rel = total_rel > 0
        recall = float(np.mean(hits_cum[has_rel] / total_rel[has_rel])) if has_rel.any() else np.nan
        rows.append((r, precision, recall))
    return np.array(rows, dtype=np.float64)


def evaluate(
    queries: PackedCodes,
    gallery: PackedCodes,
    query_labels,
    gallery_labels,
    k: int = 1000,
    multilabel: bool = False,
    exclude_self: bool = False,
    normalization: str = "min",
) -> EvalSummary:
    """mAP@k and radius PR curve.

    ``exclude_self`` assumes queries and gallery are the same collection and
    drops gallery item ``i`` from query ``i``'s ranking.
    """
    _check_compatible(queries, gallery)
    if query_labels is None or gallery_labels is None:
        raise DomainError("labels are required for evaluation")
    query_labels = np.asarray(query_labels)
    gallery_labels = np.asarray(gallery_labels)
    if query_labels.shape[0] != queries.n or gallery_labels.shape[0] != gallery.n:
        raise ShapeError("label count does not match code count")
    if exclude_self and queries.n != gallery.n:
        raise ShapeError("exclude_self requires queries and gallery of equal size")
    if gallery.n == 0:
        raise InsufficientDataError("empty gallery")

    dist = hamming_matrix(queries, gallery)
    relevant = relevance_matrix(query_labels, gallery_labels, multilabel)
    if exclude_self:
        dist = dist.copy()
        # push self-matches past every real distance and mark them irrelevant
        idx = np.arange(queries.n)
        dist[idx, idx] = gallery.k_bits + 1
        relevant = relevant.copy()
        relevant[idx, idx] = False
        n_candidates = gallery.n - 1
    else:
        n_candidates = gallery.n
    depth = min(k, n_candidates)
    ranked = _rank_rows(dist, depth) if depth > 0 else np.zeros((queries.n, 0), dtype=np.int64)
    flags = np.take_along_axis(relevant, ranked, axis=1)
    total_rel = relevant.sum(axis=1)
    aps = np.array(
        [average_precision(flags[i], int(total_rel[i]), k, normalization) for i in range(queries.n)]
    )

    if exclude_self:
        dist = np.where(dist > gallery.k_bits, -1, dist)  # never counted at any radius
    pr = pr_curve_by_radius(dist, relevant, gallery.k_bits)
    return EvalSummary(float(np.mean(aps)) if aps.size else 0.0, k, aps, pr)

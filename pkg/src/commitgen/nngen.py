"""Nearest-neighbour message retrieval (NNGen).

A query diff is compared with every training diff by cosine similarity of
bag-of-words vectors; the ``k`` most similar candidates are re-ranked by
sentence BLEU-4 between candidate diff and query diff and the winner's
message is returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse

from .corpus import CorpusSplit
from .evaluation import sentence_bleu

log = logging.getLogger(__name__)

DEFAULT_K = 5


@dataclass(frozen=True)
class BowIndex:
    term_index: Dict[str, int]
    vectors: sparse.csr_matrix
    messages: List[tuple]
    diffs: List[tuple]
    idf: Optional[np.ndarray] = None
    norms2: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.diffs)


class NNGenResult(NamedTuple):
    message: tuple
    train_id: int
    degenerate: bool = False


def build_index(train: CorpusSplit, use_idf: bool = False) -> BowIndex:
    """Index a training split.  Term dimensions follow first appearance and
    vectors hold raw term counts (optionally idf-weighted)."""
    if not train.commits:
        raise ValueError("cannot index an empty training split")
    term_index: Dict[str, int] = {}
    rows, cols, vals = [], [], []
    for r, c in enumerate(train.commits):
        counts: Dict[int, int] = {}
        for tok in c.diff_tokens:
            j = term_index.setdefault(tok, len(term_index))
            counts[j] = counts.get(j, 0) + 1
        rows.extend([r] * len(counts))
        cols.extend(counts)
        vals.extend(counts.values())
    n = len(train.commits)
    mat = sparse.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=(n, len(term_index)))
    idf = None
    if use_idf:
        df = np.bincount(mat.indices, minlength=len(term_index))
        idf = np.log((1 + n) / (1 + df)) + 1.0
        mat = mat.multiply(idf[np.newaxis, :]).tocsr()
    norms2 = np.asarray(mat.multiply(mat).sum(axis=1)).ravel()
    return BowIndex(term_index, mat, [c.msg_tokens for c in train.commits], [c.diff_tokens for c in train.commits], idf, norms2)


def _query_vector(index: BowIndex, query_diff: Sequence[str]) -> Dict[int, int]:
    q: Dict[int, int] = {}
    for tok in query_diff:
        j = index.term_index.get(tok)
        if j is not None:
            q[j] = q.get(j, 0) + 1
    return q


def _similarities(index: BowIndex, q: Dict[int, int]):
    """Return (dot products, squared row norms, float cosines)."""
    dense = np.zeros(index.vectors.shape[1], dtype=index.vectors.dtype)
    for j, c in q.items():
        dense[j] = c if index.idf is None else c * index.idf[j]
    dots = index.vectors @ dense
    norms2 = index.norms2
    qnorm = math.sqrt(float(dense @ dense))
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(norms2 > 0, dots / (np.sqrt(norms2.astype(float)) * qnorm), 0.0)
    return dots, norms2, cos


def _top_k(index: BowIndex, dots, norms2, cos, k: int) -> List[int]:
    """Ids of the k most similar rows, ties to the lower id.

    Floats pick a shortlist; with raw counts the final order is exact, since
    ranking by cosine equals ranking by dot**2 / |row|**2 over integers.
    """
    n = len(cos)
    order = np.lexsort((np.arange(n), -cos))
    cutoff = cos[order[k - 1]]
    shortlist = np.nonzero(cos >= cutoff - 1e-9 * max(1.0, abs(cutoff)))[0]
    if index.idf is None:
        def key(i):
            return (-Fraction(int(dots[i]) ** 2, int(norms2[i])) if norms2[i] else Fraction(0), int(i))
    else:
        def key(i):
            return (-float(cos[i]), int(i))
    return sorted((int(i) for i in shortlist), key=key)[:k]


def nearest(index: BowIndex, query_diff: Sequence[str], k: int = DEFAULT_K) -> List[int]:
    """Cosine stage alone: ids of the k nearest training diffs."""
    q = _query_vector(index, query_diff)
    if not q:
        return list(range(min(k, len(index))))
    return _top_k(index, *_similarities(index, q), k)


def generate_nngen(index: BowIndex, query_diff: Sequence[str], k: int = DEFAULT_K) -> NNGenResult:
    if not 1 <= k <= len(index):
        raise ValueError(f"k must be in [1, {len(index)}], got {k}")
    q = _query_vector(index, query_diff)
    if not q:
        return NNGenResult(index.messages[0], 0, True)
    dots, norms2, cos = _similarities(index, q)
    if not np.any(dots > 0):
        return NNGenResult(index.messages[0], 0, True)
    candidates = _top_k(index, dots, norms2, cos, k)
    # rank position in `candidates` already encodes "higher cosine, then lower id"
    best = max(enumerate(candidates), key=lambda rc: (sentence_bleu(index.diffs[rc[1]], query_diff), -rc[0]))[1]
    return NNGenResult(index.messages[best], best)


def predict_split(index: BowIndex, test: CorpusSplit, k: int = DEFAULT_K) -> List[NNGenResult]:
    results = [generate_nngen(index, c.diff_tokens, k) for c in test.commits]
    degenerate = sum(r.degenerate for r in results)
    if degenerate:
        log.warning("%d of %d queries shared no token with the training diffs", degenerate, len(results))
    return results

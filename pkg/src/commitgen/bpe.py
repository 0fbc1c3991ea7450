"""Byte-pair-encoding subword segmentation.

Words are split into characters with the end-of-word marker fused onto the
last character (``low`` -> ``l o w</w>``), and adjacent symbol pairs are
merged greedily by frequency.  Merge tables are written one merge per line
as two space-separated symbols, the layout used by common subword tools.
"""

from __future__ import annotations

import heapq
import logging
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import TargetTooSmall

log = logging.getLogger(__name__)

EOW = "</w>"


@dataclass(frozen=True)
class BpeConfig:
    vocab_size: int
    max_diff: int
    enc_layers: int
    dec_layers: int


BPE_CONFIGS = {
    "bpe1": BpeConfig(5000, 185, 2, 2),
    "bpe2": BpeConfig(10000, 170, 4, 4),
    "bpe3": BpeConfig(32000, 160, 4, 4),
    # alternative reading of the second size
    "bpe2-1k": BpeConfig(1000, 170, 4, 4),
}


class DanglingSubunit(UserWarning):
    pass


@dataclass
class BpeModel:
    merges: List[Tuple[str, str]]
    target_vocab_size: int
    end_of_word_marker: str = EOW
    _ranks: Dict[Tuple[str, str], int] = field(default=None, init=False, repr=False, compare=False)
    _cache: Dict[str, Tuple[str, ...]] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.merges = [tuple(m) for m in self.merges]
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("#version: 0.2\n")
            for a, b in self.merges:
                fh.write(f"{a} {b}\n")

    @classmethod
    def load(cls, path, target_vocab_size=None, end_of_word_marker=EOW) -> "BpeModel":
        merges = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.startswith("#version") or not line.strip():
                continue
            a, b = line.split(" ")
            merges.append((a, b))
        return cls(merges, target_vocab_size or len(merges), end_of_word_marker)


def _check_token(token: str, marker: str) -> None:
    if not token:
        raise ValueError("empty token")
    if marker in token:
        raise ValueError(f"token {token!r} contains the end-of-word marker {marker!r}")


def _split_word(word: str, marker: str) -> Tuple[str, ...]:
    return tuple(word[:-1]) + (word[-1] + marker,)


def _pairs(symbols: Sequence[str]):
    return zip(symbols, symbols[1:])


def _merge_symbols(symbols: Tuple[str, ...], pair: Tuple[str, str]) -> Tuple[str, ...]:
    a, b = pair
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == a and symbols[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def learn_bpe(corpus: Iterable[Sequence[str]], target_vocab_size: int, marker: str = EOW) -> BpeModel:
    """Learn merges until the inventory (characters + merges) reaches
    ``target_vocab_size`` or no adjacent pair occurs at least twice.

    The most frequent pair wins; equal counts go to the lexicographically
    smallest pair.
    """
    word_freq: Counter = Counter()
    for seq in corpus:
        for tok in seq:
            _check_token(tok, marker)
            word_freq[tok] += 1
    if not word_freq:
        raise ValueError("cannot learn BPE from an empty corpus")
    chars = {ch for w in word_freq for ch in w}
    if target_vocab_size <= len(chars):
        raise TargetTooSmall(f"target {target_vocab_size} <= character inventory {len(chars)}")
    n_merges = target_vocab_size - len(chars)

    words = sorted(word_freq)
    segs = [_split_word(w, marker) for w in words]
    freqs = [word_freq[w] for w in words]

    stats: Counter = Counter()
    where: Dict[Tuple[str, str], set] = defaultdict(set)
    for wi, (seg, f) in enumerate(zip(segs, freqs)):
        for p in _pairs(seg):
            stats[p] += f
            where[p].add(wi)
    heap = [(-c, p) for p, c in stats.items()]
    heapq.heapify(heap)

    merges: List[Tuple[str, str]] = []
    while len(merges) < n_merges and heap:
        neg, pair = heapq.heappop(heap)
        if stats.get(pair, 0) != -neg:
            continue  # stale entry
        if -neg < 2:
            break
        merges.append(pair)
        touched = set()
        for wi in sorted(where.pop(pair, ())):
            seg = segs[wi]
            new = _merge_symbols(seg, pair)
            if new == seg:
                continue
            f = freqs[wi]
            for p in _pairs(seg):
                stats[p] -= f
                touched.add(p)
            for p in _pairs(new):
                stats[p] += f
                where[p].add(wi)
                touched.add(p)
            segs[wi] = new
        stats.pop(pair, None)
        touched.discard(pair)
        for p in touched:
            c = stats[p]
            if c > 0:
                heapq.heappush(heap, (-c, p))
            else:
                del stats[p]
    log.info("learned %d merges (%d characters, target %d)", len(merges), len(chars), target_vocab_size)
    return BpeModel(merges, target_vocab_size, marker)


def _segment(model: BpeModel, word: str) -> Tuple[str, ...]:
    cached = model._cache.get(word)
    if cached is not None:
        return cached
    symbols = _split_word(word, model.end_of_word_marker)
    ranks = model._ranks
    while len(symbols) > 1:
        best = min(_pairs(symbols), key=lambda p: ranks.get(p, float("inf")))
        if best not in ranks:
            break
        symbols = _merge_symbols(symbols, best)
    model._cache[word] = symbols
    return symbols


def apply_bpe(model: BpeModel, tokens: Sequence[str]) -> List[str]:
    out: List[str] = []
    for tok in tokens:
        _check_token(tok, model.end_of_word_marker)
        out.extend(_segment(model, tok))
    return out


def decode_bpe(subunits: Sequence[str], marker: str = EOW) -> List[str]:
    words: List[str] = []
    buf = []
    for unit in subunits:
        if unit.endswith(marker):
            buf.append(unit[: -len(marker)])
            words.append("".join(buf))
            buf = []
        else:
            buf.append(unit)
    if buf:
        warnings.warn(f"subunit sequence ends without {marker!r}; emitting partial word", DanglingSubunit)
        words.append("".join(buf))
    return words

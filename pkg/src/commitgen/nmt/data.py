from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import torch

from ..corpus import EOS_ID, PAD_ID, UNK_ID
from .config import ModelConfig


@dataclass
class EncodedExample:
    src_tokens: tuple
    src_ids: List[int]
    src_ext: List[int]
    oovs: List[str]
    tgt_ids: List[int]


def encode_example(config: ModelConfig, src_tokens: Sequence[str], tgt_tokens: Optional[Sequence[str]] = None) -> EncodedExample:
    """Map one (diff, message) pair to vocabulary ids.

    Both sides are truncated to the configured lengths and EOS is appended to
    the target.  With copying enabled, source tokens missing from the target
    vocabulary get extended ids ``len(tgt_vocab) + k`` and target tokens that
    can be copied use them instead of UNK.
    """
    src = tuple(src_tokens[: config.max_src_len])
    if not src:
        raise ValueError("empty source sequence")
    tv = config.tgt_vocab
    src_ids = config.src_vocab.encode(src)
    oovs: List[str] = []
    src_ext = []
    for tok in src:
        idx = tv.index(tok)
        if idx == UNK_ID:
            if tok not in oovs:
                oovs.append(tok)
            idx = len(tv) + oovs.index(tok)
        src_ext.append(idx)
    tgt_ids: List[int] = []
    if tgt_tokens is not None:
        for tok in tgt_tokens[: config.max_tgt_len]:
            idx = tv.index(tok)
            if idx == UNK_ID and config.copy_enabled and tok in oovs:
                idx = len(tv) + oovs.index(tok)
            tgt_ids.append(idx)
        tgt_ids.append(EOS_ID)
    return EncodedExample(src, src_ids, src_ext, oovs, tgt_ids)


def encode_pairs(config: ModelConfig, pairs) -> List[EncodedExample]:
    return [encode_example(config, s, t) for s, t in pairs]


def encode_split(config: ModelConfig, split) -> List[EncodedExample]:
    return [encode_example(config, c.diff_tokens, c.msg_tokens) for c in split.commits]


class Batch(NamedTuple):
    src: torch.Tensor
    src_mask: torch.Tensor
    src_ext: torch.Tensor
    n_ext: int
    tgt: torch.Tensor
    tgt_mask: torch.Tensor


def collate(examples: Sequence[EncodedExample]) -> Batch:
    B = len(examples)
    S = max(len(e.src_ids) for e in examples)
    T = max(len(e.tgt_ids) for e in examples)
    src = torch.full((B, S), PAD_ID, dtype=torch.long)
    src_ext = torch.full((B, S), PAD_ID, dtype=torch.long)
    tgt = torch.full((B, T), PAD_ID, dtype=torch.long)
    for i, e in enumerate(examples):
        src[i, : len(e.src_ids)] = torch.tensor(e.src_ids, dtype=torch.long)
        src_ext[i, : len(e.src_ext)] = torch.tensor(e.src_ext, dtype=torch.long)
        if e.tgt_ids:
            tgt[i, : len(e.tgt_ids)] = torch.tensor(e.tgt_ids, dtype=torch.long)
    lengths = torch.tensor([len(e.src_ids) for e in examples])
    src_mask = torch.arange(S).unsqueeze(0) < lengths.unsqueeze(1)
    tgt_lengths = torch.tensor([len(e.tgt_ids) for e in examples])
    tgt_mask = torch.arange(T).unsqueeze(0) < tgt_lengths.unsqueeze(1)
    n_ext = max(len(e.oovs) for e in examples)
    return Batch(src, src_mask, src_ext, n_ext, tgt, tgt_mask)

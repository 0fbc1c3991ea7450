"""Recurrent encoder-decoder translator."""

from typing import Optional, Sequence

import torch

from .checkpoint import Checkpoint, init_model
from .config import PRESETS, ModelConfig, preset
from .data import Batch, EncodedExample, collate, encode_example, encode_pairs, encode_split
from .decoding import (BeamHypothesis, beam_decode, beam_hypothesis, beam_search, decode, greedy_decode,
                       sequence_log_prob)
from .model import Seq2Seq, additive_attention
from .training import evaluate_loss, gradient_check, loss_and_gradients, train, train_pairs


@torch.no_grad()
def forward(ckpt: Checkpoint, src_tokens: Sequence[str], tgt_tokens: Sequence[str], force_gate: Optional[float] = None):
    """Teacher-forced per-step output distributions for one pair.

    Returns (probs (T, V+n_ext), alignments (T, S)); T counts the final EOS.
    """
    ex = encode_example(ckpt.config, src_tokens, tgt_tokens)
    b = collate([ex])
    probs, _, align = ckpt.module().forward(b.src, b.src_mask, b.tgt, b.tgt_mask, b.src_ext, b.n_ext, force_gate)
    return probs[0], align[0]


__all__ = [
    "Batch", "BeamHypothesis", "Checkpoint", "EncodedExample", "ModelConfig", "PRESETS", "Seq2Seq",
    "additive_attention", "beam_decode", "beam_hypothesis", "beam_search", "collate", "decode",
    "encode_example", "encode_pairs", "encode_split", "evaluate_loss", "forward", "gradient_check",
    "greedy_decode", "init_model", "loss_and_gradients", "preset", "sequence_log_prob", "train", "train_pairs",
]

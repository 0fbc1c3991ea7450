"""GRU encoder-decoder with additive attention and an optional copy gate.

Shapes use B for batch, S for source length, T for target length, H for the
hidden size and E for the embedding size.  With residual connections every
layer from the second one up adds its input to its output, in both the
encoder and the decoder.  The attention query at step t is the top decoder
output of step t-1.

With copying enabled the output distribution is

    p = (1 - g) * softmax(logits) + g * attention scattered onto source ids

over the target vocabulary extended with the example's out-of-vocabulary
source tokens, where g is a learned scalar gate per step.
"""

from __future__ import annotations

from typing import List, NamedTuple, Optional

import torch
from torch import nn

from ..corpus import BOS_ID, PAD_ID, UNK_ID
from ..errors import IndexOutOfVocab
from .config import ModelConfig


class GRULayer(nn.Module):
    def __init__(self, input_dim: int, hidden_dim: int):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.weight_ih = nn.Parameter(torch.empty(3 * hidden_dim, input_dim))
        self.weight_hh = nn.Parameter(torch.empty(3 * hidden_dim, hidden_dim))
        self.bias_ih = nn.Parameter(torch.empty(3 * hidden_dim))
        self.bias_hh = nn.Parameter(torch.empty(3 * hidden_dim))

    def cell(self, x, h, gi=None):
        if gi is None:
            gi = x @ self.weight_ih.T + self.bias_ih
        gh = h @ self.weight_hh.T + self.bias_hh
        i_r, i_z, i_n = gi.chunk(3, dim=-1)
        h_r, h_z, h_n = gh.chunk(3, dim=-1)
        r = torch.sigmoid(i_r + h_r)
        z = torch.sigmoid(i_z + h_z)
        n = torch.tanh(i_n + r * h_n)
        return (1 - z) * n + z * h

    def run(self, xs, mask, reverse=False):
        """Run over (B, S, I) inputs; padded steps carry the state through."""
        B, S, _ = xs.shape
        gi_all = xs @ self.weight_ih.T + self.bias_ih
        h = xs.new_zeros(B, self.hidden_dim)
        outs = [None] * S
        steps = range(S - 1, -1, -1) if reverse else range(S)
        m = mask.unsqueeze(-1).to(xs.dtype)
        for t in steps:
            h_new = self.cell(None, h, gi_all[:, t])
            h = m[:, t] * h_new + (1 - m[:, t]) * h
            outs[t] = h
        return torch.stack(outs, dim=1)


class BiGRULayer(nn.Module):
    def __init__(self, input_dim: int, hidden_dim: int):
        super().__init__()
        self.fwd = GRULayer(input_dim, hidden_dim // 2)
        self.bwd = GRULayer(input_dim, hidden_dim // 2)

    def run(self, xs, mask):
        return torch.cat([self.fwd.run(xs, mask), self.bwd.run(xs, mask, reverse=True)], dim=-1)


def additive_attention(query, keys_proj, values, mask, w_query, v):
    """Bahdanau scores ``v . tanh(W_q q + K_j)`` softmaxed over valid positions.

    ``keys_proj`` holds the precomputed key projections (B, S, H).  Returns
    (alignment (B, S), context (B, H)).
    """
    scores = torch.tanh(keys_proj + (query @ w_query.T).unsqueeze(1)) @ v
    scores = scores.masked_fill(~mask, float("-inf"))
    alpha = torch.softmax(scores, dim=-1)
    context = torch.bmm(alpha.unsqueeze(1), values).squeeze(1)
    return alpha, context


class DecoderState(NamedTuple):
    hidden: List[torch.Tensor]
    top: torch.Tensor


class StepOutput(NamedTuple):
    probs: torch.Tensor
    target_log_prob: Optional[torch.Tensor]
    state: DecoderState
    alignment: torch.Tensor
    gate: Optional[torch.Tensor]


class EncoderOutput(NamedTuple):
    outputs: torch.Tensor
    keys_proj: torch.Tensor
    mask: torch.Tensor
    src_ext: torch.Tensor
    n_ext: int


class Seq2Seq(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        E, H = config.embedding_dim, config.hidden_dim
        self.src_vocab_size = len(config.src_vocab)
        self.tgt_vocab_size = len(config.tgt_vocab)

        self.src_embedding = nn.Parameter(torch.empty(self.src_vocab_size, E))
        self.tgt_embedding = nn.Parameter(torch.empty(self.tgt_vocab_size, E))

        enc = []
        for layer in range(config.enc_layers):
            in_dim = E if layer == 0 else H
            enc.append(BiGRULayer(in_dim, H) if layer == 0 and config.bidirectional else GRULayer(in_dim, H))
        self.encoder = nn.ModuleList(enc)

        self.bridge = nn.ModuleList(nn.Linear(H, H) for _ in range(config.dec_layers))
        self.att_query = nn.Parameter(torch.empty(H, H))
        self.att_key = nn.Linear(H, H)
        self.att_v = nn.Parameter(torch.empty(H))
        self.decoder = nn.ModuleList(GRULayer(E + H if layer == 0 else H, H) for layer in range(config.dec_layers))
        self.out_hidden = nn.Linear(2 * H + E, H)
        self.out_proj = nn.Linear(H, self.tgt_vocab_size)
        self.copy_gate = nn.Linear(2 * H + E, 1) if config.copy_enabled else None

    def reset_parameters(self, generator: torch.Generator):
        s = self.config.init_scale
        with torch.no_grad():
            for _, p in sorted(self.named_parameters()):
                p.copy_(torch.rand(p.shape, generator=generator, dtype=torch.float64).mul_(2 * s).sub_(s).to(p.dtype))

    # -- encoder ---------------------------------------------------------

    def encode(self, src, src_mask, src_ext=None, n_ext=0) -> EncoderOutput:
        if src.numel() and (int(src.max()) >= self.src_vocab_size or int(src.min()) < 0):
            raise IndexOutOfVocab(f"source index out of range [0, {self.src_vocab_size})")
        out = self.src_embedding[src]
        for layer, rnn in enumerate(self.encoder):
            h = rnn.run(out, src_mask)
            out = h + out if self.config.residual and layer >= 1 else h
        keys_proj = self.att_key(out)
        if src_ext is None:
            src_ext = torch.zeros_like(src)
        return EncoderOutput(out, keys_proj, src_mask, src_ext, n_ext)

    def _stack_output(self, hidden: List[torch.Tensor]) -> torch.Tensor:
        out = hidden[0]
        for h in hidden[1:]:
            out = h + out if self.config.residual else h
        return out

    def initial_state(self, enc: EncoderOutput) -> DecoderState:
        m = enc.mask.unsqueeze(-1).to(enc.outputs.dtype)
        pooled = (enc.outputs * m).sum(1) / m.sum(1).clamp(min=1)
        hidden = [torch.tanh(b(pooled)) for b in self.bridge]
        return DecoderState(hidden, self._stack_output(hidden))

    # -- decoder ---------------------------------------------------------

    def step(self, enc: EncoderOutput, state: DecoderState, prev, targets=None, force_gate=None) -> StepOutput:
        """One decoder step for previous tokens ``prev`` (B,).

        Extended (copied) ids in ``prev`` are fed back as UNK.  When
        ``targets`` is given the log-probability of each target is returned
        as well.
        """
        V = self.tgt_vocab_size
        prev = torch.where(prev >= V, torch.full_like(prev, UNK_ID), prev)
        emb = self.tgt_embedding[prev]
        alpha, ctx = additive_attention(state.top, enc.keys_proj, enc.outputs, enc.mask, self.att_query, self.att_v)
        out = torch.cat([emb, ctx], dim=-1)
        hidden = []
        for layer, rnn in enumerate(self.decoder):
            h = rnn.cell(out, state.hidden[layer])
            out = h + out if self.config.residual and layer >= 1 else h
            hidden.append(h)
        feats = torch.cat([out, ctx, emb], dim=-1)
        logits = self.out_proj(torch.tanh(self.out_hidden(feats)))
        logits = logits.clone()
        logits[:, PAD_ID] = float("-inf")
        logits[:, BOS_ID] = float("-inf")

        gate = None
        target_lp = None
        if self.copy_gate is None and force_gate is None:
            log_probs = torch.log_softmax(logits, dim=-1)
            probs = log_probs.exp()
            if targets is not None:
                target_lp = log_probs.gather(1, targets.unsqueeze(1)).squeeze(1)
        else:
            if force_gate is not None:
                gate = torch.full((prev.shape[0], 1), float(force_gate), dtype=logits.dtype)
            else:
                gate = torch.sigmoid(self.copy_gate(feats))
            p_gen = torch.softmax(logits, dim=-1)
            if enc.n_ext:
                p_gen = torch.cat([p_gen, p_gen.new_zeros(p_gen.shape[0], enc.n_ext)], dim=-1)
            p_copy = torch.zeros_like(p_gen).scatter_add(1, enc.src_ext, alpha)
            probs = (1 - gate) * p_gen + gate * p_copy
            if targets is not None:
                target_lp = probs.gather(1, targets.unsqueeze(1)).squeeze(1).log()
        new_state = DecoderState(hidden, out)
        return StepOutput(probs, target_lp, new_state, alpha, gate)

    def forward(self, src, src_mask, tgt, tgt_mask, src_ext=None, n_ext=0, force_gate=None):
        """Teacher-forced pass.  ``tgt`` (B, T) holds the targets including
        EOS; returns (probs (B, T, V+n_ext), target log-probs (B, T),
        alignments (B, T, S))."""
        if not (self.config.copy_enabled or force_gate is not None):
            n_ext = 0
        limit = self.tgt_vocab_size + n_ext
        if tgt.numel() and (int(tgt.max()) >= limit or int(tgt.min()) < 0):
            raise IndexOutOfVocab(f"target index out of range [0, {limit})")
        enc = self.encode(src, src_mask, src_ext, n_ext)
        state = self.initial_state(enc)
        B, T = tgt.shape
        prev = torch.full((B,), BOS_ID, dtype=torch.long)
        # padded positions score a harmless target so no log(0) enters the graph
        safe_tgt = tgt.masked_fill(~tgt_mask, UNK_ID)
        probs, lps, aligns = [], [], []
        for t in range(T):
            o = self.step(enc, state, prev, safe_tgt[:, t], force_gate)
            probs.append(o.probs)
            lps.append(o.target_log_prob)
            aligns.append(o.alignment)
            state = o.state
            prev = tgt[:, t]
        if T == 0:
            width = self.tgt_vocab_size + enc.n_ext
            empty = src.new_zeros(B, 0, dtype=self.src_embedding.dtype)
            return empty.new_zeros(B, 0, width), empty, empty.new_zeros(B, 0, src.shape[1])
        return torch.stack(probs, 1), torch.stack(lps, 1), torch.stack(aligns, 1)

    def loss(self, batch) -> torch.Tensor:
        """Mean token cross-entropy over non-padded target positions."""
        _, lps, _ = self.forward(batch.src, batch.src_mask, batch.tgt, batch.tgt_mask, batch.src_ext, batch.n_ext)
        n_tokens = batch.tgt_mask.sum()
        if n_tokens == 0:
            return sum(p.sum() for p in self.parameters()) * 0.0
        lps = lps.masked_fill(~batch.tgt_mask, 0.0)
        return -lps.sum() / n_tokens

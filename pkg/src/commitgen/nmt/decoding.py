"""Greedy and beam-search decoding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
import torch

from ..corpus import BOS_ID, EOS_ID
from .checkpoint import Checkpoint
from .data import EncodedExample, collate, encode_example


@dataclass
class BeamHypothesis:
    tokens: Tuple[int, ...]
    log_prob: float
    finished: bool = False
    state: Any = None

    def score(self, length_penalty: float) -> float:
        length = max(len(self.tokens) + (1 if self.finished else 0), 1)
        if length_penalty == 0:
            return self.log_prob
        return self.log_prob / (length ** length_penalty)


StepFn = Callable[[Any, int], Tuple[np.ndarray, Any]]


def beam_search(initial_state, step_fn: StepFn, width: int, max_len: int, length_penalty: float = 0.0,
                eos_id: int = EOS_ID, bos_id: int = BOS_ID) -> BeamHypothesis:
    """Generic beam search.

    ``step_fn(state, last_token)`` returns (log-probabilities over the output
    vocabulary, next state).  At each step the ``width`` best expansions of
    the live hypotheses are kept; those ending in ``eos_id`` are finished.
    Hypotheses still alive after ``max_len`` tokens are finished as they are.
    The winner maximises ``log_prob / length**length_penalty`` (``length``
    counts EOS); ties go to the shorter output, then the smaller token ids.
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    if length_penalty < 0:
        raise ValueError("length penalty must be non-negative")
    alive = [BeamHypothesis((), 0.0, False, initial_state)]
    done: List[BeamHypothesis] = []
    for _ in range(max_len):
        totals, steps, states = [], [], []
        for hyp in alive:
            lp, st = step_fn(hyp.state, hyp.tokens[-1] if hyp.tokens else bos_id)
            lp = np.asarray(lp, dtype=np.float64)
            steps.append(lp)
            totals.append(hyp.log_prob + lp)
            states.append(st)
        V = len(steps[0])
        total = np.concatenate(totals)
        step_lp = np.concatenate(steps)
        # best total first, then the locally more probable token, then position
        order = np.lexsort((np.arange(total.size), -step_lp, -total))
        nxt = []
        for j in order[:width]:
            if not np.isfinite(total[j]):
                break
            h, tok = divmod(int(j), V)
            parent = alive[h]
            if tok == eos_id:
                done.append(BeamHypothesis(parent.tokens, float(total[j]), True))
            else:
                nxt.append(BeamHypothesis(parent.tokens + (tok,), float(total[j]), False, states[h]))
        alive = nxt
        if not alive:
            break
    done.extend(BeamHypothesis(h.tokens, h.log_prob, False) for h in alive)
    return min(done, key=lambda h: (-h.score(length_penalty), len(h.tokens), h.tokens))


class _Session:
    """Encoder output plus a step function for one source sequence."""

    def __init__(self, ckpt: Checkpoint, src_tokens: Sequence[str]):
        self.ckpt = ckpt
        self.model = ckpt.module()
        cfg = ckpt.config
        self.example: EncodedExample = encode_example(cfg, src_tokens)
        batch = collate([self.example])
        n_ext = batch.n_ext if cfg.copy_enabled else 0
        with torch.no_grad():
            self.enc = self.model.encode(batch.src, batch.src_mask, batch.src_ext, n_ext)
            self.state0 = self.model.initial_state(self.enc)

    def step(self, state, last: int):
        with torch.no_grad():
            prev = torch.tensor([last], dtype=torch.long)
            out = self.model.step(self.enc, state, prev)
            lp = torch.log(out.probs[0]).to(torch.float64).numpy()
        return lp, out.state

    def surface(self, ids: Sequence[int]) -> List[str]:
        tv = self.ckpt.config.tgt_vocab
        V = len(tv)
        return [tv.token(i) if i < V else self.example.oovs[i - V] for i in ids]


def greedy_ids(ckpt: Checkpoint, src_tokens: Sequence[str]) -> List[int]:
    sess = _Session(ckpt, src_tokens)
    state, last, out = sess.state0, BOS_ID, []
    for _ in range(ckpt.config.max_tgt_len):
        lp, state = sess.step(state, last)
        last = int(np.argmax(lp))
        if last == EOS_ID:
            break
        out.append(last)
    return out


def greedy_decode(ckpt: Checkpoint, src_tokens: Sequence[str]) -> List[str]:
    """Argmax token per step until EOS or ``max_tgt_len`` tokens."""
    sess = _Session(ckpt, src_tokens)
    return sess.surface(greedy_ids(ckpt, src_tokens))


def beam_hypothesis(ckpt: Checkpoint, src_tokens: Sequence[str], width: int = 10, length_penalty: float = 1.0) -> Tuple[BeamHypothesis, List[str]]:
    sess = _Session(ckpt, src_tokens)
    best = beam_search(sess.state0, sess.step, width, ckpt.config.max_tgt_len, length_penalty)
    return best, sess.surface(best.tokens)


def beam_decode(ckpt: Checkpoint, src_tokens: Sequence[str], width: int = 10, length_penalty: float = 1.0) -> List[str]:
    return beam_hypothesis(ckpt, src_tokens, width, length_penalty)[1]


def decode(ckpt: Checkpoint, src_tokens: Sequence[str], width: int = 1, length_penalty: float = 0.0) -> List[str]:
    """Greedy when ``width == 1`` and no length penalty, beam search otherwise."""
    if width == 1 and length_penalty == 0:
        return greedy_decode(ckpt, src_tokens)
    return beam_decode(ckpt, src_tokens, width, length_penalty)


def sequence_log_prob(ckpt: Checkpoint, src_tokens: Sequence[str], ids: Sequence[int], finished: bool) -> float:
    """Log-probability of emitting ``ids`` (plus EOS if ``finished``)."""
    sess = _Session(ckpt, src_tokens)
    state, last, total = sess.state0, BOS_ID, 0.0
    for tok in list(ids) + ([EOS_ID] if finished else []):
        lp, state = sess.step(state, last)
        total += float(lp[tok])
        last = tok
    return total

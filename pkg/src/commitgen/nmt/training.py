from __future__ import annotations

import copy
import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np
import torch

from ..errors import NonFiniteLoss
from .checkpoint import Checkpoint, from_module
from .data import EncodedExample, collate, encode_example

log = logging.getLogger(__name__)

DEFAULT_LR = 1e-4
DEFAULT_BATCH_SIZE = 32


def _trainable_copy(ckpt: Checkpoint):
    model = copy.deepcopy(ckpt.module())
    model.train()
    for p in model.parameters():
        p.requires_grad_(True)
    return model


@torch.no_grad()
def evaluate_loss(model, data: Sequence[EncodedExample], batch_size: int = DEFAULT_BATCH_SIZE) -> float:
    """Token-weighted mean cross-entropy over ``data``."""
    total = 0.0
    tokens = 0
    for i in range(0, len(data), batch_size):
        batch = collate(data[i:i + batch_size])
        n = int(batch.tgt_mask.sum())
        total += float(model.loss(batch)) * n
        tokens += n
    return total / max(tokens, 1)


def train(ckpt: Checkpoint, train_data: Sequence[EncodedExample], valid_data: Sequence[EncodedExample] = (),
          steps: int = 5000, batch_size: int = DEFAULT_BATCH_SIZE, lr: float = DEFAULT_LR,
          seed: Optional[int] = None, eval_every: int = 100, patience: int = 10, clip_norm: float = 5.0,
          callback: Optional[Callable[[int, float], None]] = None) -> Checkpoint:
    """Minimise token cross-entropy with Adam.

    Batches are consecutive chunks of a seeded shuffle, reshuffled every
    epoch.  Validation loss is computed every ``eval_every`` steps; the best
    validation checkpoint is returned and training stops after ``patience``
    evaluations without improvement.  Without validation data the last
    state is returned.
    """
    if steps < 1 or batch_size < 1:
        raise ValueError("steps and batch_size must be positive")
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    if not train_data:
        raise ValueError("no training data")
    model = _trainable_copy(ckpt)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    rng = np.random.default_rng(ckpt.config.seed + ckpt.step if seed is None else seed)
    if ckpt.rng_state is not None and seed is None:
        rng.bit_generator.state = ckpt.rng_state

    order = rng.permutation(len(train_data))
    cursor = 0
    history: List[dict] = list(ckpt.history)
    best_loss = math.inf
    best_state = None
    best_step = ckpt.step
    stale = 0
    step = 0
    for step in range(1, steps + 1):
        if cursor >= len(order):
            order = rng.permutation(len(train_data))
            cursor = 0
        idx = order[cursor:cursor + batch_size]
        cursor += batch_size
        batch = collate([train_data[i] for i in idx])
        loss = model.loss(batch)
        if not torch.isfinite(loss):
            raise NonFiniteLoss(ckpt.step + step, loss.item())
        opt.zero_grad()
        loss.backward()
        if clip_norm:
            torch.nn.utils.clip_grad_norm_(model.parameters(), clip_norm)
        opt.step()
        if callback is not None:
            callback(ckpt.step + step, loss.item())

        if valid_data and (step % eval_every == 0 or step == steps):
            model.eval()
            vloss = evaluate_loss(model, valid_data, batch_size)
            model.train()
            history.append({"step": ckpt.step + step, "train_loss": loss.item(), "valid_loss": vloss})
            log.info("step %d train %.4f valid %.4f", ckpt.step + step, loss.item(), vloss)
            if vloss < best_loss:
                best_loss, best_step, stale = vloss, ckpt.step + step, 0
                best_state = copy.deepcopy(model.state_dict())
            else:
                stale += 1
                if stale >= patience:
                    log.info("early stop at step %d (best %d)", ckpt.step + step, best_step)
                    break

    rng_state = _jsonable(rng.bit_generator.state)
    if best_state is not None:
        model.load_state_dict(best_state)
        final_step = best_step
    else:
        final_step = ckpt.step + step
    model.eval()
    return from_module(ckpt.config, model, final_step, rng_state, history)


def _jsonable(state):
    if isinstance(state, dict):
        return {k: _jsonable(v) for k, v in state.items()}
    if isinstance(state, (np.integer,)):
        return int(state)
    return state


def train_pairs(ckpt: Checkpoint, pairs, valid_pairs=(), **kwargs) -> Checkpoint:
    cfg = ckpt.config
    return train(ckpt, [encode_example(cfg, s, t) for s, t in pairs], [encode_example(cfg, s, t) for s, t in valid_pairs], **kwargs)


def gradient_check(ckpt: Checkpoint, src: Sequence[str], tgt: Sequence[str], epsilon: float = 1e-5,
                   floor: float = 1e-6) -> float:
    """Largest relative error between autograd gradients and central finite
    differences of the loss, over every parameter entry.

    Runs in float64.  The relative error of an entry is
    ``|a - n| / max(|a|, |n|, floor)``.  The floor keeps entries whose
    gradients are smaller than central differences can resolve in float64
    (round-off about ``1e-16 * loss / epsilon``) from dominating the result.
    """
    model = _trainable_copy(ckpt).to(torch.float64)
    batch = collate([encode_example(ckpt.config, src, tgt)])
    if tgt is not None and len(tgt) == 0:
        batch = batch._replace(tgt=batch.tgt[:, :0], tgt_mask=batch.tgt_mask[:, :0])
    model.zero_grad()
    loss = model.loss(batch)
    loss.backward()
    worst = 0.0
    with torch.no_grad():
        for _, p in model.named_parameters():
            analytic = p.grad.detach().clone().reshape(-1) if p.grad is not None else torch.zeros(p.numel(), dtype=p.dtype)
            flat = p.data.view(-1)
            for i in range(flat.numel()):
                orig = float(flat[i])
                flat[i] = orig + epsilon
                up = float(model.loss(batch))
                flat[i] = orig - epsilon
                down = float(model.loss(batch))
                flat[i] = orig
                numeric = (up - down) / (2 * epsilon)
                a = float(analytic[i])
                err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
                worst = max(worst, err)
    return worst


def loss_and_gradients(ckpt: Checkpoint, src, tgt):
    """(loss, {name: grad}) for a single example in float64."""
    model = _trainable_copy(ckpt).to(torch.float64)
    batch = collate([encode_example(ckpt.config, src, tgt)])
    if len(tgt) == 0:
        batch = batch._replace(tgt=batch.tgt[:, :0], tgt_mask=batch.tgt_mask[:, :0])
    loss = model.loss(batch)
    loss.backward()
    return float(loss.detach()), {n: (p.grad if p.grad is not None else torch.zeros_like(p)) for n, p in model.named_parameters()}

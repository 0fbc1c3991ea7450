import math

import pytest
import torch

from commitgen.corpus import Vocabulary
from commitgen.errors import NonFiniteLoss
from commitgen.nmt import (
    Checkpoint, ModelConfig, encode_pairs, evaluate_loss, gradient_check, init_model, loss_and_gradients, train, train_pairs,
)

from nmt_helpers import WORDS, copy_pairs, tiny

# validation loss at steps 0, 50, 100, 150, 200 of the toy copy task below
COPY_CURVE = [3.464318, 3.254771, 3.155397, 2.93118, 2.890816]


def test_toy_copy_curve():
    v = Vocabulary(WORDS)
    ck = init_model(ModelConfig(v, v, embedding_dim=32, hidden_dim=32, seed=0))
    valid = copy_pairs(100, 1)
    start = evaluate_loss(ck.module(), encode_pairs(ck.config, valid))
    out = train_pairs(ck, copy_pairs(500, 0), valid, steps=200, lr=1e-3, seed=0, eval_every=50, patience=100)
    curve = [start] + [h["valid_loss"] for h in out.history]
    assert all(b < a for a, b in zip(curve, curve[1:]))
    assert curve == pytest.approx(COPY_CURVE, abs=2e-3)
    assert [h["step"] for h in out.history] == [50, 100, 150, 200]


@pytest.mark.parametrize("copy", [False, True])
def test_gradient_check_small(copy):
    ck = tiny(copy=copy)
    assert gradient_check(ck, ["w1", "w2", "oov"], ["w2", "oov"]) < 1e-4


def test_empty_target():
    ck = tiny(copy=True)
    loss, grads = loss_and_gradients(ck, ["w1", "w2"], [])
    assert loss == 0.0
    assert all(float(g.abs().max()) == 0.0 for g in grads.values())
    assert gradient_check(ck, ["w1"], []) == 0.0


def test_lr_zero_leaves_parameters():
    ck = tiny(dims=(8, 8))
    out = train_pairs(ck, copy_pairs(40, 0, WORDS[:10]), steps=15, batch_size=8, lr=0.0, seed=0)
    assert all(torch.equal(ck.parameters[k], out.parameters[k]) for k in ck.parameters)
    assert out.step == 15


def test_training_deterministic():
    ck = tiny(2, 2, residual=True, copy=True, dims=(8, 8))
    data = copy_pairs(60, 3, WORDS[:10])
    a = train_pairs(ck, data, data[:10], steps=20, batch_size=8, lr=1e-2, seed=5, eval_every=5)
    b = train_pairs(ck, data, data[:10], steps=20, batch_size=8, lr=1e-2, seed=5, eval_every=5)
    assert all(torch.equal(a.parameters[k], b.parameters[k]) for k in a.parameters)
    assert a.history == b.history and a.step == b.step and a.rng_state == b.rng_state


def test_best_checkpoint_retained_and_early_stop():
    ck = tiny(dims=(8, 8))
    data = copy_pairs(30, 0, WORDS[:10])
    valid = copy_pairs(10, 9, WORDS[10:20])
    # a huge learning rate makes validation loss wander; the best evaluation is kept
    out = train_pairs(ck, data, valid, steps=200, batch_size=8, lr=0.5, seed=0, eval_every=2, patience=3)
    best = min(out.history, key=lambda h: h["valid_loss"])
    assert out.step == best["step"]
    assert len(out.history) < 100
    model = out.module()
    assert evaluate_loss(model, encode_pairs(out.config, valid)) == pytest.approx(best["valid_loss"], rel=1e-5)


def test_non_finite_loss_aborts():
    ck = tiny()
    params = type(ck.parameters)((k, torch.full_like(v, float("nan"))) for k, v in ck.parameters.items())
    bad = Checkpoint(ck.config, params)
    with pytest.raises(NonFiniteLoss) as info:
        train_pairs(bad, copy_pairs(5, 0, WORDS[:10]), steps=3, seed=0)
    assert info.value.batch_id == 1


def test_bad_arguments():
    ck = tiny()
    with pytest.raises(ValueError):
        train(ck, [], steps=1)
    with pytest.raises(ValueError):
        train_pairs(ck, copy_pairs(2, 0, WORDS[:10]), steps=0)


def test_resume_continues_step_count(tmp_path):
    ck = tiny(dims=(8, 8))
    data = copy_pairs(20, 0, WORDS[:10])
    a = train_pairs(ck, data, steps=5, batch_size=4, lr=1e-2, seed=1)
    a.save(tmp_path / "a.ckpt")
    b = train_pairs(Checkpoint.load(tmp_path / "a.ckpt"), data, steps=5, batch_size=4, lr=1e-2)
    assert b.step == 10

import random

from commitgen.corpus import Vocabulary
from commitgen.nmt import ModelConfig, init_model

WORDS = [f"w{i}" for i in range(30)]


def vocab(n=30):
    return Vocabulary(WORDS[:n])


def tiny(enc=1, dec=1, residual=False, copy=False, dims=(4, 6), n=10, seed=0, **kw):
    v = vocab(n)
    return init_model(ModelConfig(v, v, enc_layers=enc, dec_layers=dec, embedding_dim=dims[0], hidden_dim=dims[1],
                                  residual=residual, copy_enabled=copy, seed=seed, **kw))


def copy_pairs(n, seed, words=WORDS, lo=3, hi=8):
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        s = [rng.choice(words) for _ in range(rng.randint(lo, hi))]
        out.append((s, list(s)))
    return out

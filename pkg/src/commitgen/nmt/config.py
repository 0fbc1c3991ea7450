from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from ..corpus import DEFAULT_MAX_DIFF, DEFAULT_MAX_MSG, Vocabulary
from ..errors import ConfigError


@dataclass
class ModelConfig:
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    enc_layers: int = 1
    dec_layers: int = 1
    embedding_dim: int = 64
    hidden_dim: int = 64
    residual: bool = False
    copy_enabled: bool = False
    bidirectional: bool = False
    max_src_len: int = DEFAULT_MAX_DIFF
    max_tgt_len: int = DEFAULT_MAX_MSG
    seed: int = 0
    init_scale: float = 0.08

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("enc_layers", "dec_layers", "embedding_dim", "hidden_dim", "max_src_len", "max_tgt_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.residual and (self.enc_layers < 2 or self.dec_layers < 2):
            raise ConfigError("residual connections need at least 2 encoder and 2 decoder layers")
        if self.bidirectional and self.hidden_dim % 2:
            raise ConfigError("a bidirectional encoder needs an even hidden_dim")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name not in ("src_vocab", "tgt_vocab")}
        d["src_vocab"] = self.src_vocab.tokens
        d["tgt_vocab"] = self.tgt_vocab.tokens
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["src_vocab"] = Vocabulary(d["src_vocab"])
        d["tgt_vocab"] = Vocabulary(d["tgt_vocab"])
        return cls(**d)


# name -> (enc_layers, dec_layers, embedding_dim, hidden_dim, residual) at full scale
PRESETS = {
    "nmt2": (1, 1, 1024, 1024, False),
    "nmt4": (2, 2, 1024, 1024, True),
    "nmt8": (4, 4, 1024, 1024, True),
}
DESK_DIMS = (64, 64)


def preset(name: str, src_vocab: Vocabulary, tgt_vocab: Vocabulary, desk_scale: bool = True,
           dims: Optional[tuple] = None, **overrides) -> ModelConfig:
    """Build a :class:`ModelConfig` from one of :data:`PRESETS`.

    ``desk_scale`` shrinks embedding and hidden sizes to 64 while keeping the
    layer structure.
    """
    try:
        enc, dec, emb, hid, residual = PRESETS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    if dims is not None:
        emb, hid = dims
    elif desk_scale:
        emb, hid = DESK_DIMS
    kwargs = dict(enc_layers=enc, dec_layers=dec, embedding_dim=emb, hidden_dim=hid, residual=residual)
    kwargs.update(overrides)
    return ModelConfig(src_vocab, tgt_vocab, **kwargs)

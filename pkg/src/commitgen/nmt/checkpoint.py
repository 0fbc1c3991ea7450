"""Checkpoints and their on-disk format.

Byte layout (all integers little-endian)::

    magic          8 bytes   b"CGNMTCKP"
    version        uint32    FORMAT_VERSION
    header_len     uint64
    header         header_len bytes of UTF-8 JSON:
                   {"config": ..., "step": int, "rng_state": ..., "history": [...]}
    n_params       uint32
    n_params times:
        name_len   uint16
        name       name_len bytes UTF-8
        dtype      uint8     0 = float32, 1 = float64
        ndim       uint8
        shape      ndim x uint64
        data       prod(shape) x itemsize bytes, C order, little-endian
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import torch

from ..errors import CheckpointFormatError
from .config import ModelConfig
from .model import Seq2Seq

log = logging.getLogger(__name__)

MAGIC = b"CGNMTCKP"
FORMAT_VERSION = 1
_DTYPES = {0: (torch.float32, "<f4"), 1: (torch.float64, "<f8")}
_DTYPE_CODES = {torch.float32: 0, torch.float64: 1}


@dataclass
class Checkpoint:
    config: ModelConfig
    parameters: "OrderedDict[str, torch.Tensor]"
    step: int = 0
    rng_state: Optional[dict] = None
    history: List[dict] = field(default_factory=list)
    _module: Optional[Seq2Seq] = field(default=None, init=False, repr=False, compare=False)

    def module(self) -> Seq2Seq:
        """The network holding these parameters (built once, then shared)."""
        if self._module is None:
            m = Seq2Seq(self.config)
            dtype = next(iter(self.parameters.values())).dtype
            m.to(dtype)
            m.load_state_dict(self.parameters)
            m.eval()
            self._module = m
        return self._module

    @property
    def dtype(self):
        return next(iter(self.parameters.values())).dtype

    def vocab_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.config.src_vocab.digest().encode())
        h.update(self.config.tgt_vocab.digest().encode())
        return h.hexdigest()

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters.values())

    def save(self, path) -> None:
        header = json.dumps(
            {"config": self.config.to_dict(), "step": self.step, "rng_state": self.rng_state, "history": self.history},
            sort_keys=True,
        ).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header)))
            fh.write(header)
            fh.write(struct.pack("<I", len(self.parameters)))
            for name, t in self.parameters.items():
                code = _DTYPE_CODES.get(t.dtype)
                if code is None:
                    raise CheckpointFormatError(f"unsupported dtype {t.dtype} for {name}")
                raw = name.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<BB", code, t.dim()))
                fh.write(struct.pack(f"<{t.dim()}Q", *t.shape))
                fh.write(t.detach().cpu().contiguous().numpy().astype(_DTYPES[code][1], copy=False).tobytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with open(path, "rb") as fh:
            data = fh.read()
        try:
            return cls._parse(data, path)
        except CheckpointFormatError:
            raise
        except (struct.error, ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
            raise CheckpointFormatError(f"{path}: corrupt checkpoint ({exc})") from exc

    @classmethod
    def _parse(cls, data: bytes, path) -> "Checkpoint":
        if data[:8] != MAGIC:
            raise CheckpointFormatError(f"{path}: not a checkpoint (bad magic)")
        version, header_len = struct.unpack_from("<IQ", data, 8)
        if version != FORMAT_VERSION:
            raise CheckpointFormatError(f"{path}: unsupported format version {version}")
        pos = 20
        header = json.loads(data[pos:pos + header_len].decode("utf-8"))
        pos += header_len
        (n_params,) = struct.unpack_from("<I", data, pos)
        pos += 4
        params: "OrderedDict[str, torch.Tensor]" = OrderedDict()
        for _ in range(n_params):
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos:pos + name_len].decode("utf-8")
            pos += name_len
            code, ndim = struct.unpack_from("<BB", data, pos)
            pos += 2
            shape = struct.unpack_from(f"<{ndim}Q", data, pos)
            pos += 8 * ndim
            torch_dtype, np_dtype = _DTYPES[code]
            count = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(data, dtype=np_dtype, count=count, offset=pos).reshape(shape)
            pos += count * arr.itemsize
            params[name] = torch.from_numpy(arr.copy()).to(torch_dtype)
        if pos != len(data):
            raise CheckpointFormatError(f"{path}: {len(data) - pos} trailing bytes")
        config = ModelConfig.from_dict(header["config"])
        return cls(config, params, header["step"], header.get("rng_state"), header.get("history", []))


def init_model(config: ModelConfig, dtype=torch.float32) -> Checkpoint:
    """Fresh checkpoint with parameters uniform in [-init_scale, init_scale]
    drawn from a generator seeded with ``config.seed``."""
    config.validate()
    model = Seq2Seq(config).to(dtype)
    gen = torch.Generator().manual_seed(config.seed)
    model.reset_parameters(gen)
    params = OrderedDict((k, v.detach().clone()) for k, v in model.state_dict().items())
    ckpt = Checkpoint(config, params)
    log.info("initialized model with %d parameters", ckpt.parameter_count())
    return ckpt


def from_module(config: ModelConfig, module: Seq2Seq, step: int, rng_state=None, history=None) -> Checkpoint:
    params = OrderedDict((k, v.detach().clone()) for k, v in module.state_dict().items())
    return Checkpoint(config, params, step, rng_state, list(history or []))

"""File-type ensembles: routing, end-to-end prediction and experiment runs."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from .corpus import SCENARIOS, UNK, CorpusSplit, Commit, FileType, load_prefix
from .errors import CheckpointMismatch, ConfigError
from .evaluation import BleuReport, per_type_bleu, write_tsv
from .nmt.checkpoint import Checkpoint
from .nmt.decoding import decode
from .sketch import decode_sketch, encode_sketch, example_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelDescriptor:
    """One ensemble member.  ``checkpoint`` is a path or a loaded checkpoint;
    ``vocab_hash``, when set, must match the checkpoint's vocabularies."""

    checkpoint: Union[str, Checkpoint]
    uses_sketch: bool = False
    beam: int = 1
    length_penalty: float = 0.0
    vocab_hash: Optional[str] = None

    @property
    def key(self):
        c = self.checkpoint
        return str(c) if not isinstance(c, Checkpoint) else id(c)

    def to_dict(self) -> dict:
        if isinstance(self.checkpoint, Checkpoint):
            raise ConfigError("cannot serialize a descriptor holding an in-memory checkpoint")
        d = {"checkpoint": str(self.checkpoint), "uses_sketch": self.uses_sketch, "beam": self.beam,
             "length_penalty": self.length_penalty}
        if self.vocab_hash:
            d["vocab_hash"] = self.vocab_hash
        return d

    @classmethod
    def from_dict(cls, d: dict, base: Optional[Path] = None) -> "ModelDescriptor":
        unknown = set(d) - {"checkpoint", "uses_sketch", "beam", "length_penalty", "vocab_hash"}
        if unknown or "checkpoint" not in d:
            raise ConfigError(f"bad model descriptor {d!r}")
        ckpt = d["checkpoint"]
        if base is not None and not Path(ckpt).is_absolute():
            ckpt = str(base / ckpt)
        return cls(ckpt, bool(d.get("uses_sketch", False)), int(d.get("beam", 1)),
                   float(d.get("length_penalty", 0.0)), d.get("vocab_hash"))


@dataclass
class EnsembleSpec:
    routes: Dict[FileType, ModelDescriptor]
    fallback: ModelDescriptor
    name: str = "ensemble"

    def __post_init__(self):
        self.routes = {FileType.parse(k) if not isinstance(k, FileType) else k: v for k, v in self.routes.items()}
        self.validate()

    def validate(self):
        for ft, desc in self.routes.items():
            if desc.uses_sketch and ft is not FileType.JAVA:
                raise ConfigError(f"sketching is only defined for Java, not {ft.value}")
            if desc.beam < 1 or desc.length_penalty < 0:
                raise ConfigError(f"bad decoding settings for {ft.value}")
        if self.fallback.uses_sketch:
            raise ConfigError("the fallback route cannot use sketching")

    def descriptors(self) -> List[ModelDescriptor]:
        out, seen = [], set()
        for d in [*self.routes.values(), self.fallback]:
            if d.key not in seen:
                seen.add(d.key)
                out.append(d)
        return out

    def to_dict(self) -> dict:
        return {"name": self.name, "routes": {ft.value: d.to_dict() for ft, d in self.routes.items()},
                "fallback": self.fallback.to_dict()}

    @classmethod
    def from_dict(cls, d: dict, base: Optional[Path] = None) -> "EnsembleSpec":
        if "fallback" not in d:
            raise ConfigError("ensemble spec needs a fallback model")
        routes = {FileType.parse(k): ModelDescriptor.from_dict(v, base) for k, v in (d.get("routes") or {}).items()}
        return cls(routes, ModelDescriptor.from_dict(d["fallback"], base), d.get("name", "ensemble"))


def single_model_spec(descriptor: ModelDescriptor) -> EnsembleSpec:
    return EnsembleSpec({}, descriptor, "single")


def route_example(spec: EnsembleSpec, commit: Commit) -> ModelDescriptor:
    return spec.routes.get(commit.file_type, spec.fallback)


def route_partition(spec: EnsembleSpec, test: CorpusSplit) -> Dict[object, List[int]]:
    """Positions of ``test`` handled by each descriptor, keyed by descriptor key."""
    parts: Dict[object, List[int]] = {}
    for pos, c in enumerate(test.commits):
        parts.setdefault(route_example(spec, c).key, []).append(pos)
    return parts


def load_checkpoints(spec: EnsembleSpec) -> Dict[object, Checkpoint]:
    """Load every referenced checkpoint once and check each descriptor's
    vocabulary hash against it."""
    loaded: Dict[object, Checkpoint] = {}
    for desc in [*spec.routes.values(), spec.fallback]:
        ckpt = loaded.get(desc.key)
        if ckpt is None:
            ckpt = desc.checkpoint if isinstance(desc.checkpoint, Checkpoint) else Checkpoint.load(desc.checkpoint)
            loaded[desc.key] = ckpt
        if desc.vocab_hash and desc.vocab_hash != ckpt.vocab_hash():
            raise CheckpointMismatch(f"{desc.key}: vocabulary hash {ckpt.vocab_hash()[:12]} does not match the route's {desc.vocab_hash[:12]}")
    return loaded


def predict_one(ckpt: Checkpoint, desc: ModelDescriptor, commit: Commit, seed: int = 0) -> List[str]:
    if desc.uses_sketch:
        ex = encode_sketch(commit)
        pred = decode(ckpt, ex.sketched_diff or [UNK], desc.beam, desc.length_penalty)
        return decode_sketch(pred, ex.dictionary, ex.names, example_seed(seed, commit.id))
    return decode(ckpt, list(commit.diff_tokens) or [UNK], desc.beam, desc.length_penalty)


def predict_ensemble(spec: EnsembleSpec, test: CorpusSplit, seed: int = 0) -> List[List[str]]:
    """Predict a message for every commit of ``test`` with its routed model.

    All checkpoints are loaded (and hash-checked) before any prediction.
    Output order follows ``test``.
    """
    loaded = load_checkpoints(spec)
    out = []
    for commit in test.commits:
        desc = route_example(spec, commit)
        out.append(predict_one(loaded[desc.key], desc, commit, seed))
    return out


# -- preset ensembles -------------------------------------------------------------

LARGE_TYPES = (FileType.GRADLE, FileType.JAVA, FileType.XML, FileType.OTHERS)

# name -> (scenario, model preset for the large types, sketch the Java route)
ENSEMBLE_PRESETS = {
    "NMT2-FT-S1": ("top5", "nmt2", False),
    "NMT2-FT-S2": ("top9", "nmt2", False),
    "NMT4-FT-S1": ("top5", "nmt4", False),
    "NMT4-FT-S2": ("top9", "nmt4", False),
    "NMT8-FT-S1": ("top5", "nmt8", False),
    "NMT8-FT-S2": ("top9", "nmt8", False),
    "NMT8-FT-JT": ("top9", "nmt8", True),
}


def ensemble_plan(name: str) -> Dict[FileType, str]:
    """Model preset per routed file type (``Others`` is the fallback)."""
    try:
        scenario, large, sketch_java = ENSEMBLE_PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown ensemble preset {name!r}") from None
    plan = {}
    for ft in [*sorted(SCENARIOS[scenario], key=lambda f: f.value), FileType.OTHERS]:
        plan[ft] = large if ft in LARGE_TYPES else "nmt2"
    return plan


def preset_spec(name: str, checkpoint_dir, beam: int = 10, length_penalty: float = 1.0) -> EnsembleSpec:
    """Ensemble spec with checkpoints at ``<checkpoint_dir>/<Type>.<preset>.ckpt``."""
    plan = ensemble_plan(name)
    sketch_java = ENSEMBLE_PRESETS[name][2]
    base = Path(checkpoint_dir)

    def desc(ft):
        tag = plan[ft] + ("-sketch" if sketch_java and ft is FileType.JAVA else "")
        return ModelDescriptor(str(base / f"{ft.value}.{tag}.ckpt"), sketch_java and ft is FileType.JAVA, beam, length_penalty)

    routes = {ft: desc(ft) for ft in plan if ft is not FileType.OTHERS}
    return EnsembleSpec(routes, desc(FileType.OTHERS), name)


# -- experiments ------------------------------------------------------------------

@dataclass
class ExperimentResult:
    report: BleuReport
    mean_seconds: float
    predictions: List[List[str]] = field(repr=False, default_factory=list)
    timing: dict = field(default_factory=dict)


def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith((".yaml", ".yml")):
        import yaml
        cfg = yaml.safe_load(text)
    else:
        cfg = json.loads(text)
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return cfg


def run_experiment(config_file, seed: Optional[int] = None) -> ExperimentResult:
    """Run one experiment described by a YAML or JSON file.

    Keys: ``approach`` (``ensemble`` or ``nngen``), ``test_prefix``,
    ``output_dir``, optional ``run_id`` and ``seed``; ``spec`` (an ensemble
    mapping) or ``preset`` plus ``checkpoint_dir`` for ensembles;
    ``train_prefix`` and ``nn_k`` for nngen.  Relative paths are taken from
    the config file's directory.  Writes ``predictions.msg``, ``bleu.tsv``
    and ``timing.json`` to ``output_dir``.
    """
    cfg = load_config(config_file)
    base = Path(config_file).resolve().parent

    def path(key):
        if key not in cfg:
            raise ConfigError(f"{config_file}: missing {key!r}")
        p = Path(cfg[key])
        return p if p.is_absolute() else base / p

    seed = int(cfg.get("seed", 0)) if seed is None else seed
    approach = cfg.get("approach", "ensemble")
    run_id = cfg.get("run_id", Path(config_file).stem)
    test = load_prefix(path("test_prefix"), "test")
    out_dir = path("output_dir")
    out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    if approach == "nngen":
        from .nngen import DEFAULT_K, build_index, predict_split
        index = build_index(load_prefix(path("train_prefix"), "train"))
        setup = time.perf_counter() - start
        start = time.perf_counter()
        preds = [list(r.message) for r in predict_split(index, test, int(cfg.get("nn_k", DEFAULT_K)))]
    elif approach == "ensemble":
        if "spec" in cfg:
            spec = EnsembleSpec.from_dict(cfg["spec"], base)
        elif "preset" in cfg:
            spec = preset_spec(cfg["preset"], path("checkpoint_dir"), int(cfg.get("beam", 10)), float(cfg.get("length_penalty", 1.0)))
        else:
            raise ConfigError(f"{config_file}: an ensemble needs 'spec' or 'preset'")
        loaded = load_checkpoints(spec)
        setup = time.perf_counter() - start
        start = time.perf_counter()
        preds = []
        for commit in test.commits:
            desc = route_example(spec, commit)
            preds.append(predict_one(loaded[desc.key], desc, commit, seed))
    else:
        raise ConfigError(f"unknown approach {approach!r}")
    elapsed = time.perf_counter() - start

    report = per_type_bleu(preds, [list(c.msg_tokens) for c in test.commits], [c.file_type for c in test.commits])
    report.run_id = run_id
    mean = elapsed / max(len(test), 1)
    timing = {"run_id": run_id, "approach": approach, "seed": seed, "examples": len(test),
              "bleu4": round(report.corpus_bleu, 4), "setup_seconds": setup, "total_seconds": elapsed,
              "mean_seconds_per_example": mean}
    with open(out_dir / "predictions.msg", "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(" ".join(p) + "\n" for p in preds)
    write_tsv(report, out_dir / "bleu.tsv")
    (out_dir / "timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("%s: BLEU-4 %.2f, %.1f ms per example", run_id, report.corpus_bleu, 1000 * mean)
    return ExperimentResult(report, mean, preds, timing)


# -- training from a config file -----------------------------------------------

_TRAIN_KEYS = {"steps", "batch_size", "lr", "eval_every", "patience", "clip_norm"}
_MODEL_KEYS = {"enc_layers", "dec_layers", "embedding_dim", "hidden_dim", "residual", "copy_enabled",
               "bidirectional", "max_src_len", "max_tgt_len", "init_scale"}


def sketch_split(split: CorpusSplit) -> CorpusSplit:
    """Replace every commit's diff and message by its sketch."""
    out = []
    for c in split.commits:
        ex = encode_sketch(c, diagnostics=split.diagnostics)
        out.append(Commit(c.id, ex.sketched_diff or [UNK], ex.sketched_msg, c.file_type))
    return CorpusSplit(split.name + ".sketch", out, split.diagnostics)


def train_from_config(cfg: dict, train_split: CorpusSplit, valid_split: Optional[CorpusSplit] = None,
                      seed: Optional[int] = None) -> Checkpoint:
    """Build vocabularies from ``train_split``, initialise and train a model.

    ``cfg`` takes a ``preset`` (nmt2/nmt4/nmt8, desk-scale dims unless
    ``desk_scale: false``) and/or explicit model fields, vocabulary options
    ``min_count`` and ``reduce`` (1 or 2), ``sketch`` and the training
    options of :func:`commitgen.nmt.train`.
    """
    from .corpus import build_vocabulary, reduce_vocabulary
    from .nmt import ModelConfig, init_model, preset, train
    from .nmt.data import encode_split

    unknown = set(cfg) - _TRAIN_KEYS - _MODEL_KEYS - {"preset", "desk_scale", "min_count", "reduce", "sketch", "seed"}
    if unknown:
        raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    if cfg.get("sketch"):
        train_split = sketch_split(train_split)
        valid_split = sketch_split(valid_split) if valid_split is not None else None
    min_count = int(cfg.get("min_count", 1))
    src_vocab = build_vocabulary(train_split, "diff", min_count)
    tgt_vocab = build_vocabulary(train_split, "msg", min_count)
    if cfg.get("reduce"):
        tgt_vocab, src_vocab = reduce_vocabulary(tgt_vocab, src_vocab, int(cfg["reduce"]))
    model_kw = {k: cfg[k] for k in _MODEL_KEYS if k in cfg}
    if "preset" in cfg:
        config = preset(cfg["preset"], src_vocab, tgt_vocab, desk_scale=cfg.get("desk_scale", True), seed=seed, **model_kw)
    else:
        config = ModelConfig(src_vocab, tgt_vocab, seed=seed, **model_kw)
    ckpt = init_model(config)
    train_kw = {k: cfg[k] for k in _TRAIN_KEYS if k in cfg}
    if "lr" in train_kw:
        train_kw["lr"] = float(train_kw["lr"])
    valid = encode_split(config, valid_split) if valid_split is not None else []
    return train(ckpt, encode_split(config, train_split), valid, seed=seed, **train_kw)

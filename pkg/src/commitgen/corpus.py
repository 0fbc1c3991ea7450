"""Parallel diff/message corpus: loading, file-type classification, per-type
splitting, vocabularies and truncation.

Corpus files are line aligned: line ``i`` of ``<split>.diff`` is the diff of
example ``i`` and line ``i`` of ``<split>.msg`` its message.  Tokens are
separated by whitespace and newlines inside a diff are encoded by the literal
token ``<nl>``.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import EmptyExample, EmptyVocabulary, LineCountMismatch

log = logging.getLogger(__name__)

NL = "<nl>"

DEFAULT_MAX_DIFF = 100
DEFAULT_MAX_MSG = 30


class FileType(str, enum.Enum):
    JAVA = "Java"
    GITREPO = "Gitrepo"
    XML = "Xml"
    GRADLE = "Gradle"
    MD = "Md"
    GITIGNORE = "Gitignore"
    PROPERTIES = "Properties"
    TXT = "Txt"
    YML = "Yml"
    OTHERS = "Others"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, label: str) -> "FileType":
        for ft in cls:
            if ft.value.lower() == label.lower():
                return ft
        raise ValueError(f"unknown file type {label!r}")


SCENARIOS = {
    "top5": frozenset({FileType.GITREPO, FileType.GRADLE, FileType.JAVA, FileType.MD, FileType.XML}),
    "top9": frozenset(ft for ft in FileType if ft is not FileType.OTHERS),
}

_EXTENSIONS = {
    "java": FileType.JAVA,
    "xml": FileType.XML,
    "gradle": FileType.GRADLE,
    "md": FileType.MD,
    "properties": FileType.PROPERTIES,
    "txt": FileType.TXT,
    "yml": FileType.YML,
    "yaml": FileType.YML,
}
_BASENAMES = {".gitignore": FileType.GITIGNORE, ".gitrepo": FileType.GITREPO}


@dataclass(frozen=True)
class Commit:
    id: int
    diff_tokens: tuple
    msg_tokens: tuple
    file_type: FileType = FileType.OTHERS

    def __post_init__(self):
        object.__setattr__(self, "diff_tokens", tuple(self.diff_tokens))
        object.__setattr__(self, "msg_tokens", tuple(self.msg_tokens))


@dataclass
class CorpusSplit:
    name: str
    commits: List[Commit]
    diagnostics: Counter = field(default_factory=Counter, compare=False)

    def __len__(self):
        return len(self.commits)

    def __iter__(self):
        return iter(self.commits)


def _read_lines(path) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def load_parallel_corpus(diff_path, msg_path, split_name: str, skip_empty: bool = False) -> CorpusSplit:
    """Load a line-aligned corpus into a :class:`CorpusSplit`.

    Blank lines are fatal unless ``skip_empty`` is set, in which case they
    are dropped and tallied under ``diagnostics["empty_example"]``.  Commit
    ids are ordinals of the returned split.
    """
    diffs = _read_lines(diff_path)
    msgs = _read_lines(msg_path)
    if len(diffs) != len(msgs):
        raise LineCountMismatch(f"{diff_path} has {len(diffs)} lines but {msg_path} has {len(msgs)}")

    diagnostics: Counter = Counter()
    commits = []
    for lineno, (d, m) in enumerate(zip(diffs, msgs), start=1):
        d_toks, m_toks = d.split(), m.split()
        if not d_toks or not m_toks:
            side = "diff" if not d_toks else "message"
            if not skip_empty:
                raise EmptyExample(f"blank {side} at line {lineno} of split {split_name!r}")
            log.warning("skipping blank %s at line %d", side, lineno)
            diagnostics["empty_example"] += 1
            continue
        ft = classify_file_type(d_toks, diagnostics)
        commits.append(Commit(len(commits), d_toks, m_toks, ft))
    return CorpusSplit(split_name, commits, diagnostics)


def load_prefix(prefix, split_name: Optional[str] = None, skip_empty: bool = False) -> CorpusSplit:
    """Load ``<prefix>.diff`` / ``<prefix>.msg``."""
    prefix = str(prefix)
    return load_parallel_corpus(prefix + ".diff", prefix + ".msg", split_name or Path(prefix).name, skip_empty)


def write_prefix(split: CorpusSplit, prefix) -> None:
    prefix = str(prefix)
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    with open(prefix + ".diff", "w", encoding="utf-8") as fd, open(prefix + ".msg", "w", encoding="utf-8") as fm:
        for c in split.commits:
            fd.write(" ".join(c.diff_tokens) + "\n")
            fm.write(" ".join(c.msg_tokens) + "\n")


# Joins tokenizer-split path pieces: "a / src / Main . java" -> "a/src/Main.java".
_PATH_GLUE = re.compile(r"\s*([/._\-])\s*")


def _header_path(diff_tokens: Sequence[str]) -> Optional[str]:
    tokens = list(diff_tokens)
    header = None
    for i in range(len(tokens) - 1):
        if tokens[i] == "diff" and tokens[i + 1] == "--git":
            header = tokens[i + 2:]
            break
    if header is None:
        # unified diff without a git header: take the "+++"/"ppp" line
        for i, tok in enumerate(tokens):
            if tok in ("+++", "ppp", "---", "mmm"):
                header = tokens[i + 1:]
                break
    if not header:
        return None
    if NL in header:
        header = header[:header.index(NL)]
    text = _PATH_GLUE.sub(r"\1", " ".join(header)).strip()
    if not text:
        return None
    path = text.split()[0]
    if path.startswith(("a/", "b/")):
        path = path[2:]
    return path or None


def classify_file_type(diff_tokens: Sequence[str], diagnostics: Optional[Counter] = None) -> FileType:
    """Map a diff to its :class:`FileType` using the path in its header.

    Headerless diffs classify as ``Others`` and bump
    ``diagnostics["missing_header"]``.
    """
    path = _header_path(diff_tokens)
    if path is None:
        if diagnostics is not None:
            diagnostics["missing_header"] += 1
        return FileType.OTHERS
    basename = path.rsplit("/", 1)[-1].lower()
    if basename in _BASENAMES:
        return _BASENAMES[basename]
    if "." not in basename.lstrip("."):
        return FileType.OTHERS
    ext = basename.rsplit(".", 1)[-1]
    return _EXTENSIONS.get(ext, FileType.OTHERS)


def split_by_file_type(split: CorpusSplit, scenario: str = "top9") -> Dict[FileType, CorpusSplit]:
    """Partition ``split`` into one split per kept type plus ``Others``.

    Only non-empty groups appear.  Commits keep their original ids so
    predictions can be re-interleaved.
    """
    try:
        kept = SCENARIOS[scenario]
    except KeyError:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}") from None
    groups: Dict[FileType, List[Commit]] = {}
    for c in split.commits:
        ft = c.file_type if c.file_type in kept else FileType.OTHERS
        groups.setdefault(ft, []).append(c)
    return {ft: CorpusSplit(f"{split.name}.{ft.value}", cs) for ft, cs in sorted(groups.items(), key=lambda kv: kv[0].value)}


# -- vocabulary --------------------------------------------------------------

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)
# Prefixed to corpus tokens that would otherwise collide with a special.
ESCAPE = "␛"


def escape_token(token: str) -> str:
    if token in SPECIALS or token.startswith(ESCAPE):
        return ESCAPE + token
    return token


def unescape_token(token: str) -> str:
    return token[1:] if token.startswith(ESCAPE) else token


class Vocabulary:
    """Frequency-ranked token table; indices 0-3 hold PAD, BOS, EOS, UNK.

    Tokens are stored escaped (see :func:`escape_token`), so ``encode`` and
    ``decode`` take and return raw corpus tokens.
    """

    def __init__(self, tokens: Iterable[str], counts: Optional[Dict[str, int]] = None):
        self.tokens = list(tokens)
        self.counts = dict(counts or {})
        self._index = {t: i + len(SPECIALS) for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        clash = set(SPECIALS) & self._index.keys()
        if clash:
            raise ValueError(f"unescaped special tokens in vocabulary: {sorted(clash)}")

    @classmethod
    def from_counts(cls, counts: Dict[str, int], min_count: int = 1) -> "Vocabulary":
        kept = [(t, c) for t, c in counts.items() if c >= min_count]
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        return cls([t for t, _ in kept], dict(kept))

    def __len__(self):
        return len(SPECIALS) + len(self.tokens)

    def __contains__(self, token):
        return escape_token(token) in self._index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def index(self, token: str) -> int:
        return self._index.get(escape_token(token), UNK_ID)

    def token(self, idx: int) -> str:
        if idx < len(SPECIALS):
            return SPECIALS[idx]
        return unescape_token(self.tokens[idx - len(SPECIALS)])

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.index(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.token(i) for i in ids]

    def restrict(self, min_count: int) -> "Vocabulary":
        return Vocabulary.from_counts(self.counts, min_count)

    def to_text(self) -> str:
        return "".join(t + "\n" for t in (*SPECIALS, *self.tokens))

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if tuple(lines[:4]) != SPECIALS:
            raise ValueError(f"{path}: first four lines must be {SPECIALS}")
        return cls(lines[4:])

    def __repr__(self):
        return f"Vocabulary({len(self.tokens)} tokens + {len(SPECIALS)} specials)"


def count_tokens(split: CorpusSplit, side: str) -> Counter:
    if side not in ("diff", "msg"):
        raise ValueError(f"side must be 'diff' or 'msg', not {side!r}")
    counts: Counter = Counter()
    for c in split.commits:
        counts.update(escape_token(t) for t in (c.diff_tokens if side == "diff" else c.msg_tokens))
    return counts


def build_vocabulary(split: CorpusSplit, side: str, min_count: int = 1, parent: Optional[Vocabulary] = None) -> Vocabulary:
    """Vocabulary of tokens seen at least ``min_count`` times on one side.

    With ``parent``, tokens absent from it are dropped before thresholding,
    which is how per-file-type vocabularies are derived from the joint one.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = count_tokens(split, side)
    if parent is not None:
        counts = Counter({t: c for t, c in counts.items() if t in parent._index})
    vocab = Vocabulary.from_counts(counts, min_count)
    if not vocab.tokens:
        raise EmptyVocabulary(f"no {side} token of split {split.name!r} occurs >= {min_count} times")
    return vocab


REDUCTION_THRESHOLDS = {1: (1, None), 2: (10, 10)}


def reduce_vocabulary(msg_vocab: Vocabulary, diff_vocab: Vocabulary, config: int):
    """Shrink vocabularies ahead of copy-mechanism training.

    Config 1 keeps every message token seen at least once and leaves the diff
    side alone; config 2 keeps tokens seen at least ten times on both sides.
    """
    try:
        msg_min, diff_min = REDUCTION_THRESHOLDS[config]
    except KeyError:
        raise ValueError(f"reduction config must be 1 or 2, not {config!r}") from None
    if not msg_vocab.counts or (diff_min and not diff_vocab.counts):
        raise ValueError("vocabulary reduction needs token counts; rebuild the vocabulary from the corpus")
    msg_out = msg_vocab.restrict(msg_min)
    diff_out = diff_vocab.restrict(diff_min) if diff_min else diff_vocab
    return msg_out, diff_out


def truncate_sequences(commit: Commit, max_diff: int = DEFAULT_MAX_DIFF, max_msg: int = DEFAULT_MAX_MSG) -> Commit:
    if max_diff < 1 or max_msg < 1:
        raise ValueError("truncation lengths must be positive")
    return dataclasses.replace(commit, diff_tokens=commit.diff_tokens[:max_diff], msg_tokens=commit.msg_tokens[:max_msg])

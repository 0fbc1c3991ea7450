"""Rule-based sketching of Java diffs.

A Java diff is reduced to a sketch in three steps:

1. keywords, annotations, import/package statements, numeric, string and
   char literals and comments are removed (diff metadata is kept);
2. the remaining identifiers are classified by naming convention into
   constants, classes, functions and variables;
3. each identifier is replaced by an indexed placeholder such as ``FUNC_0``
   and the mapping is saved in a per-example dictionary.  Message tokens equal
   to a replaced identifier get the same placeholder.

:func:`decode_sketch` reverses the substitution on generated messages.
"""

from __future__ import annotations

import enum
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .corpus import NL, Commit

KEYWORDS_VERSION = 1


def _load_keywords():
    text = resources.files("commitgen").joinpath("data/java_keywords.txt").read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#"))


JAVA_KEYWORDS = _load_keywords()


class IdentifierKind(str, enum.Enum):
    CONSTANT = "CONST"
    CLASS = "CLASS"
    FUNCTION = "FUNC"
    VARIABLE = "VAR"


PLACEHOLDER_RE = re.compile(r"^(CONST|CLASS|FUNC|VAR)(?:_(\d+))?$")
_IDENT_RE = re.compile(r"^[A-Za-z_$][A-Za-z0-9_$]*$")
_NUMBER_RE = re.compile(
    r"""^(
        0[xX][0-9a-fA-F_]+[lL]?
      | 0[bB][01_]+[lL]?
      | (\d[\d_]*\.?[\d_]*|\.\d[\d_]*)([eE][+-]?\d+)?[fFdDlL]?
    )$""",
    re.VERBOSE,
)
_HEX_RE = re.compile(r"^[0-9a-f]{5,}")
_LITERAL_FOLLOWERS = frozenset({";", ",", ")", "]", "}", NL})


def is_placeholder(token: str) -> bool:
    return PLACEHOLDER_RE.match(token) is not None


# -- lexeme stripping -----------------------------------------------------------

def _metadata_line_end(tokens: Sequence[str], i: int) -> Optional[int]:
    """If a diff metadata line starts at ``i``, return the index of its
    terminating ``<nl>`` (or ``len(tokens)``), else None."""
    def at(k):
        return tokens[i + k] if i + k < len(tokens) else None

    first, second = at(0), at(1)
    is_meta = (
        (first == "diff" and second == "--git")
        or (first == "index" and second is not None and _HEX_RE.match(second) is not None)
        or (first in ("---", "+++", "mmm", "ppp") and second is not None
            and (second in ("a", "b", "/dev/null") or second.startswith(("a/", "b/", "/"))))
        or (first in ("new", "deleted") and second == "file" and at(2) == "mode")
        or (first in ("old", "new") and second == "mode")
        or (first == "similarity" and second == "index")
        or (first == "rename" and second in ("from", "to"))
        or (first == "Binary" and second == "files")
        or (first == "\\" and second == "No")
    )
    if not is_meta:
        return None
    j = i
    while j < len(tokens) and tokens[j] != NL:
        j += 1
    return j


def _closes_quote(tok: str, quote: str) -> bool:
    return tok.endswith(quote) and not tok.endswith("\\" + quote)


def _strip(diff_tokens: Sequence[str], diagnostics: Optional[Counter] = None) -> List[Tuple[str, bool]]:
    """Core of :func:`strip_java_lexemes`; pairs each kept token with a flag
    telling whether it is code (True) or diff structure (False)."""
    tokens = list(diff_tokens)
    n = len(tokens)
    out: List[Tuple[str, bool]] = []
    i = 0
    line_start = True
    in_block = False

    def drop_literal(next_i):
        # an initializer reduced to nothing leaves a dangling "="
        if out and out[-1] == ("=", True) and (next_i >= n or tokens[next_i] in _LITERAL_FOLLOWERS):
            out.pop()

    while i < n:
        tok = tokens[i]
        if tok == NL:
            out.append((NL, False))
            line_start = True
            i += 1
            continue

        if line_start:
            line_start = False
            if not in_block:
                end = _metadata_line_end(tokens, i)
                if end is not None:
                    out.extend((t, False) for t in tokens[i:end])
                    i = end
                    continue
            if tok in ("+", "-"):
                out.append((tok, False))
                i += 1
                if i >= n:
                    break
                tok = tokens[i]
                if tok == NL:
                    continue
            elif len(tok) > 1 and tok[0] in "+-" and tok[1] not in "+-=":
                out.append((tok[0], False))
                tok = tokens[i] = tok[1:]
            if not in_block and (tok == "*" or tok.startswith("*/")):
                # continuation line of a comment opened before the hunk
                end = _line_end(tokens, i)
                close = next((k for k in range(i, end) if "*/" in tokens[k]), None)
                i = end if close is None else close + 1
                continue

        if in_block:
            if "*/" in tok:
                in_block = False
                i += 1
            elif tok == "*" and i + 1 < n and tokens[i + 1].startswith("/"):
                in_block = False
                i += 2
            else:
                i += 1
            continue

        nxt = tokens[i + 1] if i + 1 < n else None

        if tok == "@@":
            j = i + 1
            while j < n and tokens[j] not in ("@@", NL):
                j += 1
            if j < n and tokens[j] == "@@":
                j += 1
            out.extend((t, False) for t in tokens[i:j])
            i = j
            continue

        if tok.startswith("//") or (tok == "/" and nxt == "/"):
            while i < n and tokens[i] != NL:
                i += 1
            i += 1  # the comment swallows its newline
            line_start = True
            continue

        if tok.startswith("/*") or (tok == "/" and nxt is not None and nxt.startswith("*")):
            rest = tok[2:] if tok.startswith("/*") else nxt[1:]
            i += 1 if tok.startswith("/*") else 2
            if "*/" not in rest:
                in_block = True
            continue

        if tok in ("import", "package"):
            while i < n and tokens[i] not in (";", NL):
                i += 1
            if i < n and tokens[i] == ";":
                i += 1
            continue

        if tok[0] in "\"'":
            quote = tok[0]
            if len(tok) >= 2 and _closes_quote(tok, quote):
                i += 1
            else:
                i += 1
                while i < n and tokens[i] != NL and not _closes_quote(tokens[i], quote):
                    i += 1
                if i < n and tokens[i] != NL:
                    i += 1
                elif diagnostics is not None:
                    diagnostics["unterminated_span"] += 1
            drop_literal(i)
            continue

        if tok.startswith("@"):
            i += 1
            if tok == "@" and nxt is not None and _IDENT_RE.match(nxt):
                i += 1
            continue

        if tok in JAVA_KEYWORDS:
            i += 1
            continue

        if _NUMBER_RE.match(tok):
            i += 1
            drop_literal(i)
            continue

        out.append((tok, True))
        i += 1

    if in_block and diagnostics is not None:
        diagnostics["unterminated_span"] += 1
    return out


def _line_end(tokens: Sequence[str], i: int) -> int:
    while i < len(tokens) and tokens[i] != NL:
        i += 1
    return i


def strip_java_lexemes(diff_tokens: Sequence[str], diagnostics: Optional[Counter] = None) -> List[str]:
    """Remove keywords, annotations, import/package statements, literals and
    comments from a tokenized Java diff.

    Headers, hunk markers and the ``+``/``-`` line prefixes are kept.  A block
    comment that never closes is removed to the end of the diff and a string
    literal that never closes is removed to the end of its line; both bump
    ``diagnostics["unterminated_span"]``.
    """
    return [t for t, _ in _strip(diff_tokens, diagnostics)]


# -- identifier classification ----------------------------------------------

def classify_identifier(token: str, next_token: Optional[str] = None) -> Optional[IdentifierKind]:
    """Classify by Java naming convention, first matching rule wins:

    all upper case (digits and underscores allowed) -> constant; upper case
    start with some lower case -> class; lower case start followed by ``(``
    -> function; other lower case start -> variable.  Anything else is None.
    """
    if not _IDENT_RE.match(token) or token in JAVA_KEYWORDS:
        return None
    letters = [c for c in token if c.isalpha()]
    if letters and all(c.isupper() for c in letters):
        return IdentifierKind.CONSTANT
    first = token[0]
    if first.isupper():
        return IdentifierKind.CLASS
    if first.islower():
        return IdentifierKind.FUNCTION if next_token == "(" else IdentifierKind.VARIABLE
    return None


# -- encoding / decoding ------------------------------------------------------

@dataclass
class PlaceholderDictionary:
    entries: Dict[str, str] = field(default_factory=dict)
    example_id: int = 0

    def __len__(self):
        return len(self.entries)

    def get(self, placeholder: str) -> Optional[str]:
        return self.entries.get(placeholder)

    def inverse(self) -> Dict[str, str]:
        inv: Dict[str, str] = {}
        for ph, ident in self.entries.items():
            inv.setdefault(ident, ph)
        return inv


@dataclass
class SketchExample:
    sketched_diff: List[str]
    sketched_msg: List[str]
    dictionary: PlaceholderDictionary
    names: List[str] = field(default_factory=list)


def encode_sketch(commit: Commit, indexed: bool = True, diagnostics: Optional[Counter] = None) -> SketchExample:
    """Sketch one Java commit.

    With ``indexed=False`` every identifier of a kind shares one bare
    placeholder (``FUNC``); the dictionary then keeps only the first
    identifier seen per kind.
    """
    stripped = _strip(commit.diff_tokens, diagnostics)
    ident_to_ph: Dict[str, str] = {}
    entries: Dict[str, str] = {}
    names: List[str] = []
    per_kind = Counter()
    sketched: List[str] = []
    for pos, (tok, is_code) in enumerate(stripped):
        if not is_code:
            sketched.append(tok)
            continue
        ph = ident_to_ph.get(tok)
        if ph is None:
            nxt = stripped[pos + 1][0] if pos + 1 < len(stripped) else None
            kind = classify_identifier(tok, nxt)
            if kind is None:
                sketched.append(tok)
                continue
            if indexed:
                ph = f"{kind.value}_{per_kind[kind]}"
            else:
                ph = kind.value
            per_kind[kind] += 1
            ident_to_ph[tok] = ph
            entries.setdefault(ph, tok)
            names.append(tok)
        sketched.append(ph)
    msg = [ident_to_ph.get(t, t) for t in commit.msg_tokens]
    return SketchExample(sketched, msg, PlaceholderDictionary(entries, commit.id), names)


def decode_sketch(predicted_msg: Iterable[str], dictionary: PlaceholderDictionary, diff_names: Sequence[str], rng_seed: int = 0) -> List[str]:
    """Replace placeholders in a generated message.

    A placeholder resolves to its dictionary entry, else to a name drawn
    uniformly from ``diff_names`` (seeded by ``rng_seed``), else it is dropped.
    """
    rng = random.Random(rng_seed)
    out = []
    for tok in predicted_msg:
        if not is_placeholder(tok):
            out.append(tok)
            continue
        ident = dictionary.get(tok)
        if ident is not None:
            out.append(ident)
        elif diff_names:
            out.append(rng.choice(list(diff_names)))
    return out


def example_seed(seed: int, example_id: int) -> int:
    """Per-example fallback seed derived from a run seed."""
    return seed * 1_000_003 + example_id


# -- dictionary sidecar ---------------------------------------------------------

def write_dictionaries(dictionaries: Iterable[PlaceholderDictionary], path) -> None:
    """Write ``example_id<TAB>placeholder<TAB>identifier`` lines sorted by
    example id, then placeholder string."""
    rows = []
    for d in dictionaries:
        rows.extend((d.example_id, ph, ident) for ph, ident in d.entries.items())
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for eid, ph, ident in rows:
            fh.write(f"{eid}\t{ph}\t{ident}\n")


def read_dictionaries(path) -> Dict[int, PlaceholderDictionary]:
    out: Dict[int, PlaceholderDictionary] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                eid, ph, ident = line.split("\t")
                eid = int(eid)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed dictionary line {line!r}") from None
            out.setdefault(eid, PlaceholderDictionary({}, eid)).entries[ph] = ident
    return out

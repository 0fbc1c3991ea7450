"""Synthetic corpora for tests."""

import random
import string

from commitgen.corpus import NL, Commit, CorpusSplit, FileType, classify_file_type
from commitgen.sketch import JAVA_KEYWORDS

SYLLABLES = ["ba", "co", "de", "fi", "go", "hu", "ka", "lo", "mi", "nu", "po", "ra", "si", "tu", "ve", "xo", "ze"]

EXTENSIONS = {
    FileType.JAVA: "src/main/Foo.java",
    FileType.XML: "res/layout/main.xml",
    FileType.GRADLE: "app/build.gradle",
    FileType.MD: "README.md",
    FileType.GITIGNORE: ".gitignore",
    FileType.GITREPO: "lib/sub/.gitrepo",
    FileType.PROPERTIES: "gradle/wrapper.properties",
    FileType.TXT: "notes/CHANGES.txt",
    FileType.YML: "ci/.travis.yml",
    FileType.OTHERS: "web/app.js",
}


def header(path):
    """Tokenized ``diff --git`` header the way the corpus tokenizer splits it."""
    toks = []
    for side in ("a", "b"):
        parts = []
        for piece in (side + "/" + path).replace("/", " / ").replace(".", " . ").split():
            parts.append(piece)
        toks.extend(parts)
    return ["diff", "--git", *toks, NL]


def _word(rng, n=2):
    return "".join(rng.choice(SYLLABLES) for _ in range(n))


def identifier(rng, kind):
    while True:
        base = _word(rng, rng.randint(2, 3))
        if kind == "CONST":
            name = base.upper() + ("_" + _word(rng, 1).upper() if rng.random() < 0.5 else "")
        elif kind == "CLASS":
            name = base.capitalize() + _word(rng, 1).capitalize()
        else:
            name = base + _word(rng, 1).capitalize()
        if name not in JAVA_KEYWORDS:
            return name


def java_diff(rng, n_idents=None):
    """Random Java diff; returns (diff tokens, {identifier: kind})."""
    kinds = {}
    used = set()
    n_idents = n_idents or rng.randint(2, 8)
    for _ in range(n_idents):
        kind = rng.choice(["CONST", "CLASS", "FUNC", "VAR"])
        name = identifier(rng, kind)
        if name in used:
            continue
        used.add(name)
        kinds[name] = kind
    toks = header(f"src/{_word(rng).capitalize()}.java")
    toks += ["index", "3f2a9c1..b7e4d20", "100644", NL, "@@", "-10,7", "+10,8", "@@", NL]
    names = list(kinds)
    rng.shuffle(names)
    for name in names:
        kind = kinds[name]
        mark = rng.choice(["+", "-", ""])
        line = [mark] if mark else []
        if kind == "CONST":
            line += ["public", "static", "final", "int", name, "=", str(rng.randint(0, 999)), ";"]
        elif kind == "CLASS":
            line += ["private", name, "field", "=", "new", name, "(", ")", ";"] if rng.random() < 0.5 else ["import", "java", ".", "util", ".", name, ";", NL, mark or "+", name, "x", ";"]
        elif kind == "FUNC":
            line += ["return", name, "(", "\"some", "text\"", ")", ";"]
        else:
            line += ["int", name, "=", "0", ";", "//", "set", "up", name]
        if rng.random() < 0.3:
            line += [NL, "/*", "block", "comment", "*/"]
        toks += line + [NL]
    # "field" and "x" are also variables; register them under their first use
    return toks, kinds


def java_commit(rng, cid):
    toks, kinds = java_diff(rng)
    names = list(kinds)
    msg = [rng.choice(["fix", "add", "update", "remove"])]
    for _ in range(rng.randint(1, 4)):
        msg.append(rng.choice(names) if rng.random() < 0.6 else rng.choice(["bug", "in", "the", "for", "method"]))
    return Commit(cid, toks, msg, FileType.JAVA), kinds


def generic_diff(rng, ft, length=12):
    toks = header(EXTENSIONS[ft]) + ["@@", "-1", "+1", "@@", NL]
    vocab = [f"t{ft.value.lower()}{i}" for i in range(12)] + ["=", ":", "<", ">"]
    for _ in range(length):
        toks.append(rng.choice(vocab))
        if rng.random() < 0.2:
            toks.append(NL)
    return toks


def mixed_split(n, seed=0, types=tuple(FileType)):
    rng = random.Random(seed)
    commits = []
    for i in range(n):
        ft = rng.choice(types)
        diff = generic_diff(rng, ft) if ft is not FileType.JAVA else java_diff(rng)[0]
        msg = [rng.choice(["update", "fix", "bump", "add"]), rng.choice(["config", "docs", "deps", "build"])]
        assert classify_file_type(diff) is ft
        commits.append(Commit(i, diff, msg, ft))
    return CorpusSplit("test", commits)


def random_words(rng, n, alphabet=string.ascii_lowercase, max_len=8):
    return ["".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len))) for _ in range(n)]

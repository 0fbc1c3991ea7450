"""BLEU-4 scoring, per-file-type breakdowns and token frequency reports."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .corpus import CorpusSplit, FileType
from .errors import EmptyCorpus

MAX_ORDER = 4


@dataclass
class BleuReport:
    corpus_bleu: float
    brevity_penalty: float
    ngram_precisions: Tuple[float, ...]
    hyp_len: int = 0
    ref_len: int = 0
    per_type: Dict[FileType, Tuple[int, float]] = field(default_factory=dict)
    count: int = 0
    run_id: Optional[str] = None


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _match_counts(hyp: Sequence[str], ref: Sequence[str]):
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    for n in range(1, MAX_ORDER + 1):
        h = _ngrams(hyp, n)
        r = _ngrams(ref, n)
        matches[n - 1] = sum(min(c, r[g]) for g, c in h.items())
        totals[n - 1] = max(len(hyp) - n + 1, 0)
    return matches, totals


def _combine(matches, totals, hyp_len, ref_len):
    precisions = tuple(m / t if t else 0.0 for m, t in zip(matches, totals))
    if hyp_len == 0:
        return 0.0, 0.0, precisions
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    # orders the hypotheses are too short to contain do not count
    used = [(m, t) for m, t in zip(matches, totals) if t > 0]
    if any(m == 0 for m, _ in used):
        return 0.0, bp, precisions
    log_mean = sum(math.log(m / t) for m, t in used) / len(used)
    return 100.0 * bp * math.exp(log_mean), bp, precisions


def corpus_bleu(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]) -> BleuReport:
    """Unsmoothed corpus BLEU-4 with one reference per hypothesis.

    Clipped n-gram counts are summed over the corpus before the geometric
    mean; the brevity penalty uses total hypothesis and reference lengths.
    """
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise EmptyCorpus("cannot score an empty corpus")
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        m, t = _match_counts(hyp, ref)
        for k in range(MAX_ORDER):
            matches[k] += m[k]
            totals[k] += t[k]
        hyp_len += len(hyp)
        ref_len += len(ref)
    score, bp, precisions = _combine(matches, totals, hyp_len, ref_len)
    return BleuReport(score, bp, precisions, hyp_len, ref_len, count=len(hypotheses))


def sentence_bleu(hypothesis: Sequence[str], reference: Sequence[str], smooth: bool = False) -> float:
    """BLEU-4 of one pair.  ``smooth`` adds one to the matched and total
    counts of orders 2-4 (diagnostics only; reported scores are unsmoothed)."""
    m, t = _match_counts(hypothesis, reference)
    if smooth:
        m = [m[0]] + [x + 1 for x in m[1:]]
        t = [t[0]] + [x + 1 for x in t[1:]]
    return _combine(m, t, len(hypothesis), len(reference))[0]


def per_type_bleu(hypotheses, references, types: Sequence[FileType]) -> BleuReport:
    if not (len(hypotheses) == len(references) == len(types)):
        raise ValueError("hypotheses, references and types must be aligned")
    report = corpus_bleu(hypotheses, references)
    groups: Dict[FileType, List[int]] = {}
    for i, ft in enumerate(types):
        groups.setdefault(FileType(ft), []).append(i)
    for ft in sorted(groups, key=lambda f: f.value):
        idx = groups[ft]
        sub = corpus_bleu([hypotheses[i] for i in idx], [references[i] for i in idx])
        report.per_type[ft] = (len(idx), sub.corpus_bleu)
    return report


def format_table(report: BleuReport) -> str:
    lines = [f"{'type':<12}{'count':>8}{'BLEU-4':>10}"]
    for ft, (count, bleu) in report.per_type.items():
        lines.append(f"{ft.value:<12}{count:>8}{bleu:>10.2f}")
    lines.append(f"{'ALL':<12}{report.count:>8}{report.corpus_bleu:>10.2f}")
    lines.append("BP={:.4f} p1..p4={}".format(report.brevity_penalty, " ".join(f"{p:.4f}" for p in report.ngram_precisions)))
    return "\n".join(lines)


def write_tsv(report: BleuReport, path) -> None:
    """``type<TAB>count<TAB>bleu4`` rows with a final ``ALL`` row.  A run id,
    if set, goes on a leading ``#`` comment line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if report.run_id is not None:
            fh.write(f"# run_id={report.run_id}\n")
        for ft, (count, bleu) in report.per_type.items():
            fh.write(f"{ft.value}\t{count}\t{bleu:.4f}\n")
        fh.write(f"ALL\t{report.count}\t{report.corpus_bleu:.4f}\n")


def read_tsv(path) -> Dict[str, Tuple[int, float]]:
    rows = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        label, count, bleu = line.split("\t")
        rows[label] = (int(count), float(bleu))
    return rows


def aggregate(paths: Sequence) -> Dict[str, Tuple[int, float]]:
    """Mean BLEU per row label over several run reports."""
    if not paths:
        raise ValueError("nothing to aggregate")
    runs = [read_tsv(p) for p in paths]
    labels = []
    for run in runs:
        labels.extend(label for label in run if label not in labels)
    out = {}
    for label in labels:
        present = [run[label] for run in runs if label in run]
        out[label] = (present[0][0], sum(b for _, b in present) / len(present))
    return out


def token_frequency_report(split: CorpusSplit, side: str, top_n: int = 10) -> List[Tuple[str, int]]:
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    if side not in ("diff", "msg"):
        raise ValueError(f"side must be 'diff' or 'msg', not {side!r}")
    counts = Counter()
    for c in split.commits:
        counts.update(c.diff_tokens if side == "diff" else c.msg_tokens)
    ranked = sorted(counts.items(), key=lambda tc: (-tc[1], tc[0]))
    return ranked[:top_n]

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from commitgen.corpus import Commit, CorpusSplit, FileType
from commitgen.errors import EmptyCorpus
from commitgen.evaluation import (
    aggregate, corpus_bleu, format_table, per_type_bleu, read_tsv, sentence_bleu, token_frequency_report, write_tsv,
)

from oracles import bleu_oracle

WORDS = ["a", "b", "c", "d", "e", "f"]


def _rand_pairs(rng, n):
    hyps = [[rng.choice(WORDS) for _ in range(rng.randint(1, 12))] for _ in range(n)]
    refs = [[rng.choice(WORDS) for _ in range(rng.randint(1, 12))] for _ in range(n)]
    return hyps, refs


def test_identical_is_100():
    x = [["fix", "the", "bug", "in", "parser"], ["a", "b"]]
    assert corpus_bleu(x, x).corpus_bleu == pytest.approx(100.0)


def test_zero_4gram_overlap_is_0():
    hyps = [["a", "b", "c", "d", "e"]]
    refs = [["a", "b", "c", "x", "d", "e"]]
    assert corpus_bleu(hyps, refs).corpus_bleu == 0.0


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        corpus_bleu([], [])


def test_mismatched_lengths():
    with pytest.raises(ValueError):
        corpus_bleu([["a"]], [])


def test_hand_computed_value():
    # hyp 6 tokens, ref 7: p1=5/6 p2=3/5 p3=1/4 p4=0/3 -> 0; use a case with all >0
    hyp = ["the", "cat", "sat", "on", "the", "mat"]
    ref = ["the", "cat", "sat", "on", "a", "mat", "today"]
    # p1 = 5/6 (the x2 clipped to 1), p2 = 3/5, p3 = 2/4, p4 = 1/3
    expected = 100 * math.exp(1 - 7 / 6) * (5 / 6 * 3 / 5 * 2 / 4 * 1 / 3) ** 0.25
    rep = corpus_bleu([hyp], [ref])
    assert rep.corpus_bleu == pytest.approx(expected, abs=1e-9)
    assert rep.ngram_precisions == pytest.approx((5 / 6, 3 / 5, 2 / 4, 1 / 3))
    assert rep.brevity_penalty == pytest.approx(math.exp(1 - 7 / 6))


@pytest.mark.parametrize("seed", range(5))
def test_matches_oracle(seed):
    rng = random.Random(seed)
    hyps, refs = _rand_pairs(rng, 20)
    assert corpus_bleu(hyps, refs).corpus_bleu == pytest.approx(bleu_oracle(hyps, refs), abs=0.1)


def test_report_invariant():
    rng = random.Random(9)
    _, refs = _rand_pairs(rng, 30)
    hyps = [r[:-1] + ["z"] if len(r) > 4 else r for r in refs]
    rep = corpus_bleu(hyps, refs)
    assert 0 < rep.corpus_bleu < 100
    gm = math.exp(sum(math.log(p) for p in rep.ngram_precisions) / 4)
    assert rep.corpus_bleu == pytest.approx(100 * rep.brevity_penalty * gm)


def test_sentence_bleu():
    assert sentence_bleu(["a", "b", "c", "d"], ["a", "b", "c", "d"]) == pytest.approx(100)
    assert sentence_bleu(["a", "b"], ["c", "d"]) == 0.0
    assert sentence_bleu(["a", "b", "c", "d"], ["d", "c", "b", "a"]) == 0.0
    assert sentence_bleu(["a", "b", "c", "d"], ["d", "c", "b", "a"], smooth=True) > 0


def test_per_type():
    hyps = [["x", "y", "z", "w"], ["p", "q", "r", "s"], ["a", "b", "c", "d"]]
    refs = [["x", "y", "z", "w"], ["p", "q", "r", "s"], ["e", "f", "g", "h"]]
    rep = per_type_bleu(hyps, refs, [FileType.GITREPO, FileType.GITREPO, FileType.JAVA])
    assert rep.per_type[FileType.GITREPO] == (2, pytest.approx(100))
    assert rep.per_type[FileType.JAVA] == (1, 0.0)
    assert FileType.XML not in rep.per_type
    single = per_type_bleu(hyps, refs, [FileType.JAVA] * 3)
    assert single.per_type[FileType.JAVA][1] == single.corpus_bleu


def test_tsv_roundtrip_and_aggregate(tmp_path):
    hyps = [["a", "b", "c", "d"], ["a", "b", "c", "e"]]
    refs = [["a", "b", "c", "d"], ["a", "b", "c", "d"]]
    rep = per_type_bleu(hyps, refs, [FileType.JAVA, FileType.XML])
    rep.run_id = "r1"
    write_tsv(rep, tmp_path / "r1.tsv")
    text = (tmp_path / "r1.tsv").read_text()
    assert text.splitlines()[0] == "# run_id=r1"
    assert text.splitlines()[-1].startswith("ALL\t2\t")
    rows = read_tsv(tmp_path / "r1.tsv")
    assert rows["ALL"] == (2, round(rep.corpus_bleu, 4))
    rep2 = per_type_bleu(hyps[:1] * 2, refs, [FileType.JAVA, FileType.XML])
    write_tsv(rep2, tmp_path / "r2.tsv")
    agg = aggregate([tmp_path / "r1.tsv", tmp_path / "r2.tsv"])
    assert agg["ALL"][1] == pytest.approx((round(rep.corpus_bleu, 4) + round(rep2.corpus_bleu, 4)) / 2)
    assert "ALL" in format_table(rep)


def test_token_frequency():
    split = CorpusSplit("t", [Commit(0, ["d"], ["a", "a", "b"])])
    assert token_frequency_report(split, "msg", 10) == [("a", 2), ("b", 1)]
    assert token_frequency_report(split, "msg", 1) == [("a", 2)]
    with pytest.raises(ValueError):
        token_frequency_report(split, "msg", 0)


pairs = st.lists(
    st.tuples(st.lists(st.sampled_from(WORDS), min_size=1, max_size=10), st.lists(st.sampled_from(WORDS), min_size=1, max_size=10)),
    min_size=1, max_size=15)


@given(pairs, st.randoms())
def test_permutation_invariance(ps, rnd):
    shuffled = list(ps)
    rnd.shuffle(shuffled)
    a = corpus_bleu([h for h, _ in ps], [r for _, r in ps]).corpus_bleu
    b = corpus_bleu([h for h, _ in shuffled], [r for _, r in shuffled]).corpus_bleu
    assert a == pytest.approx(b, abs=1e-9)


@given(pairs)
def test_self_score(ps):
    hyps = [h for h, _ in ps]
    assert corpus_bleu(hyps, hyps).corpus_bleu == pytest.approx(100.0)


@given(pairs, st.integers(1, 5))
def test_brevity_monotone(ps, cut):
    refs = [r for _, r in ps]
    hyps = [list(r) for r in refs]
    shorter = [h[:max(1, len(h) - cut)] for h in hyps]
    shortest = [h[:max(1, len(h) - cut - 1)] for h in hyps]
    bp1 = corpus_bleu(shorter, refs).brevity_penalty
    bp2 = corpus_bleu(shortest, refs).brevity_penalty
    assert bp2 <= bp1 <= 1.0


@given(pairs)
def test_oracle_agreement_property(ps):
    hyps, refs = [h for h, _ in ps], [r for _, r in ps]
    assert corpus_bleu(hyps, refs).corpus_bleu == pytest.approx(bleu_oracle(hyps, refs), abs=1e-6)

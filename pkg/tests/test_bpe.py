import random
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from commitgen.bpe import BPE_CONFIGS, EOW, BpeModel, DanglingSubunit, apply_bpe, decode_bpe, learn_bpe
from commitgen.errors import TargetTooSmall


def test_low_lower_single_merge():
    # pair counts: (l,o)=3, (o,w</w>)=2, (o,w)=1, (w,e)=1, (e,r</w>)=1
    model = learn_bpe([["low", "low", "lower"]], target_vocab_size=5 + 1)
    assert model.merges == [("l", "o")]


def test_low_lower_tie_is_lexicographic():
    # after (l,o): (lo,w</w>)=2 beats the rest; then all pairs occur once
    model = learn_bpe([["low", "low", "lower"]], target_vocab_size=100)
    assert model.merges == [("l", "o"), ("lo", "w</w>")]


def test_lexicographic_tie_break():
    model = learn_bpe([["ab", "ab", "cd", "cd"]], target_vocab_size=5)
    assert model.merges == [("a", "b</w>")]


def test_single_char_corpus_no_merges():
    assert learn_bpe([["a"]], target_vocab_size=10).merges == []


def test_target_too_small():
    with pytest.raises(TargetTooSmall):
        learn_bpe([["abc"]], target_vocab_size=3)


def test_seen_token_one_symbol():
    model = learn_bpe([["hello"] * 3], target_vocab_size=100)
    assert apply_bpe(model, ["hello"]) == ["hello" + EOW]


def test_empty_sequence():
    model = learn_bpe([["ab", "ab"]], 10)
    assert apply_bpe(model, []) == []
    assert decode_bpe([]) == []


def test_unseen_character_survives():
    model = learn_bpe([["abab", "abab"]], 20)
    out = apply_bpe(model, ["abzab"])
    assert "z" in out
    assert decode_bpe(out) == ["abzab"]


def test_single_subunit_word():
    assert decode_bpe(["x" + EOW]) == ["x"]


def test_dangling_warns():
    with pytest.warns(DanglingSubunit):
        assert decode_bpe(["ab", "c"]) == ["abc"]


def test_marker_in_token_rejected():
    model = learn_bpe([["ab", "ab"]], 10)
    with pytest.raises(ValueError):
        apply_bpe(model, ["a</w>b"])


def test_save_load(tmp_path):
    rng = random.Random(0)
    corpus = [["".join(rng.choice("abcde") for _ in range(rng.randint(1, 6))) for _ in range(20)] for _ in range(30)]
    model = learn_bpe(corpus, 60)
    model.save(tmp_path / "codes")
    lines = (tmp_path / "codes").read_text().splitlines()
    assert lines[1:] == [f"{a} {b}" for a, b in model.merges]
    loaded = BpeModel.load(tmp_path / "codes")
    assert loaded.merges == model.merges
    for seq in corpus:
        assert apply_bpe(loaded, seq) == apply_bpe(model, seq)


def test_deterministic():
    rng = random.Random(1)
    corpus = [["".join(rng.choice("xyz") for _ in range(5)) for _ in range(10)] for _ in range(10)]
    assert learn_bpe(corpus, 40).merges == learn_bpe(list(corpus), 40).merges


def test_inventory_bound():
    rng = random.Random(2)
    corpus = [["".join(rng.choice("abcdefg") for _ in range(rng.randint(1, 7))) for _ in range(15)] for _ in range(40)]
    target = 30
    model = learn_bpe(corpus, target)
    chars = {ch for seq in corpus for w in seq for ch in w}
    assert len(chars) + len(model.merges) <= target
    units = {u for seq in corpus for u in apply_bpe(model, seq)}
    assert len(units) <= target + len(chars)


def test_configs():
    assert [BPE_CONFIGS[k].vocab_size for k in ("bpe1", "bpe2", "bpe3")] == [5000, 10000, 32000]
    assert [BPE_CONFIGS[k].max_diff for k in ("bpe1", "bpe2", "bpe3")] == [185, 170, 160]


_MODEL = learn_bpe([["the", "then", "there", "these", "other", "thesis", "ab", "abc"]] * 3, 40)


@given(st.lists(st.text(alphabet="abcdehinorst_.()", min_size=1, max_size=12), max_size=15))
def test_roundtrip_property(tokens):
    out = apply_bpe(_MODEL, tokens)
    assert len(out) >= len(tokens)
    assert decode_bpe(out) == tokens

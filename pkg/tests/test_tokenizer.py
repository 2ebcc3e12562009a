import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pieceattack.errors import CorruptTokenization, InvalidCorpus, VocabTooSmall
from pieceattack.tokenizer import (
    MASK_ID,
    UNK_ID,
    TokenizedText,
    Vocabulary,
    corpus_viterbi_loglik,
    decode,
    encode,
    train_vocabulary,
    vocab_stats,
)

from helpers import enumerate_best_segmentation, toy_vocab


def test_empty_corpus_rejected():
    with pytest.raises(InvalidCorpus):
        train_vocabulary([], target_size=10)
    with pytest.raises(InvalidCorpus):
        train_vocabulary(["", ""], target_size=10)


def test_target_below_char_coverage_rejected():
    with pytest.raises(VocabTooSmall):
        train_vocabulary(["abc"] * 5, target_size=5)  # needs 4 specials + 3 chars


def test_productive_merge_survives():
    vocab = train_vocabulary(["ab"] * 50, target_size=7, seed_size=10)
    surfaces = {p.surface: p for p in vocab.pieces if not p.is_special}
    assert set(surfaces) == {"a", "b", "ab"}
    assert surfaces["ab"].log_prob > surfaces["a"].log_prob + surfaces["b"].log_prob


def test_trained_vocab_beats_char_baseline():
    rng = random.Random(3)
    alphabet = "abcdef"
    words = ["abc", "de", "fab", "cde"]
    lines = ["".join(rng.choice(words) for _ in range(4)) for _ in range(20)]
    vocab = train_vocabulary(lines, target_size=16, seed_size=30)
    char_vocab = train_vocabulary(lines, target_size=4 + len(alphabet), seed_size=0)
    assert all(len(p.surface) == 1 for p in char_vocab.pieces if not p.is_special)
    assert corpus_viterbi_loglik(lines, vocab) >= corpus_viterbi_loglik(lines, char_vocab)


def test_em_loglik_monotone_within_stages():
    lines = ["abcabc", "bcbc", "ababab", "ccc", "abcb"] * 4
    vocab = train_vocabulary(lines, target_size=12, seed_size=40)
    assert vocab.em_history
    for stage in vocab.em_history:
        for before, after in zip(stage, stage[1:]):
            assert after >= before - 1e-6


def test_training_covers_every_corpus_char():
    lines = ["xyz 123", "日本語テスト", "mixed内容!"]
    vocab = train_vocabulary(lines, target_size=60, seed_size=50)
    for line in lines:
        assert UNK_ID not in encode(line, vocab).piece_ids


def test_training_deterministic(tmp_path):
    lines = ["abcabc", "bcbc", "ababab"] * 5
    a, b = tmp_path / "a.vocab", tmp_path / "b.vocab"
    train_vocabulary(lines, target_size=12, seed_size=40).save(a)
    train_vocabulary(lines, target_size=12, seed_size=40).save(b)
    assert a.read_bytes() == b.read_bytes()


def test_save_load_roundtrip(tmp_path):
    vocab = train_vocabulary(["ab"] * 50, target_size=7, seed_size=10)
    path = tmp_path / "v.vocab"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert [(p.surface, p.is_special) for p in loaded.pieces] == [
        (p.surface, p.is_special) for p in vocab.pieces
    ]
    for p, q in zip(vocab.pieces, loaded.pieces):
        assert math.isclose(p.log_prob, q.log_prob, rel_tol=0, abs_tol=0)


def test_encode_prefers_whole_piece():
    vocab = toy_vocab({"今天": -2.0, "今": -1.5, "天": -1.5})
    toks = encode("今天", vocab)
    assert [toks.surface(i) for i in range(len(toks))] == ["今天"]


def test_encode_matches_enumeration_oracle():
    rng = random.Random(17)
    alphabet = "abcde"
    surfaces = {"a", "b", "c", "d", "e"}
    while len(surfaces) < 26:
        L = rng.choice([2, 2, 3, 4])
        surfaces.add("".join(rng.choice(alphabet) for _ in range(L)))
    logps = {s: round(rng.uniform(-6.0, -0.5), 2) for s in sorted(surfaces)}
    vocab = toy_vocab(logps)
    for _ in range(200):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
        oracle_score, oracle_surfaces = enumerate_best_segmentation(text, vocab)
        toks = encode(text, vocab)
        got_surfaces = tuple(toks.surface(i) for i in range(len(toks)))
        got_score = 0.0
        for pid in reversed(toks.piece_ids):
            got_score = vocab.pieces[pid].log_prob + got_score
        assert abs(got_score - oracle_score) <= 1e-9
        assert got_surfaces == oracle_surfaces


def test_lexicographic_tie_break():
    # "aa" as one piece vs two: equal scores, "a" < "aa" lexicographically.
    vocab = toy_vocab({"a": -1.0, "aa": -2.0})
    toks = encode("aa", vocab)
    assert [toks.surface(i) for i in range(len(toks))] == ["a", "a"]


def test_uncovered_char_becomes_unk_and_roundtrips():
    vocab = toy_vocab({"a": -1.0, "b": -1.0})
    text = "a🐍b"
    toks = encode(text, vocab)
    assert toks.piece_ids.count(UNK_ID) == 1
    assert decode(toks) == text


def test_special_surface_maps_to_special_id():
    vocab = toy_vocab({"a": -1.0})
    toks = encode("a[MASK]a", vocab)
    assert MASK_ID in toks.piece_ids
    assert decode(toks) == "a[MASK]a"


def test_decode_empty():
    vocab = toy_vocab({"a": -1.0})
    assert decode(encode("", vocab)) == ""


def test_decode_rejects_overlapping_spans():
    bad = TokenizedText(piece_ids=[4, 4], spans=[(0, 2), (1, 3)], original="abc")
    with pytest.raises(CorruptTokenization):
        decode(bad)


def test_decode_rejects_gap():
    bad = TokenizedText(piece_ids=[4, 4], spans=[(0, 1), (2, 3)], original="abc")
    with pytest.raises(CorruptTokenization):
        decode(bad)


def test_roundtrip_desk_corpus(desk_corpus, desk_vocab):
    for line in desk_corpus:
        assert decode(encode(line, desk_vocab)) == line


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=40))
def test_roundtrip_property_arbitrary_text(text):
    vocab = toy_vocab({"a": -1.0, "ab": -1.5, "你": -2.0, "你好": -2.5})
    assert decode(encode(text, vocab)) == text


def test_vocab_stats_char_only():
    vocab = toy_vocab({"a": -1.0, "b": -1.0, "c": -1.0})
    stats = vocab_stats(vocab)
    assert stats.histogram[1] == (3, 100.0)
    assert stats.histogram[2][0] == 0


def test_vocab_stats_hand_count():
    vocab = train_vocabulary(["ababab", "bcbcbc", "cacaca"] * 4, target_size=12, seed_size=40)
    stats = vocab_stats(vocab)
    by_len = {}
    for p in vocab.pieces:
        if not p.is_special:
            by_len[min(len(p.surface), 5)] = by_len.get(min(len(p.surface), 5), 0) + 1
    for bucket in (1, 2, 3, 4, 5):
        assert stats.histogram[bucket][0] == by_len.get(bucket, 0)
    assert abs(sum(pct for _, pct in stats.histogram.values()) - 100.0) <= 0.1

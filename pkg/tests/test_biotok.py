import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prot2mol.biotok import (
    BOS,
    EOS,
    PAD,
    SPECIALS,
    UNK,
    EmptyCorpus,
    TokenVocab,
    VocabFormatError,
    VocabTooSmall,
    train_bpe,
)


def test_first_merge_ab():
    v = train_bpe(["AB", "AB", "AB"], vocab_size=6)
    assert ("A", "B") in v.merges
    assert "AB" in v.token_to_id


def test_no_repeated_pair():
    v = train_bpe(["ABC"], vocab_size=20)
    assert v.merges == []
    assert v.id_to_token == list(SPECIALS) + ["A", "B", "C"]


def test_overlapping_pairs_counted():
    v = train_bpe(["AAAB"] * 3, vocab_size=7)
    assert v.merges[0] == ("A", "A")


def test_tie_breaks_lexicographically():
    v = train_bpe(["ZY", "BA"] * 2, vocab_size=5)
    assert v.merges[0] == ("B", "A")


def test_encode_decode_examples():
    v = train_bpe(["AB", "AB", "AB", "CCO"], vocab_size=6)
    ab = v.token_to_id["AB"]
    assert v.encode("ABAB") == [ab, ab]
    assert len(v.encode("C")) == 1
    assert v.encode("Z") == [UNK]
    assert v.decode(v.encode("CCO")) == "CCO"
    assert v.decode([PAD, PAD]) == ""
    assert v.decode([ab, v.token_to_id["A"]]) == "ABA"
    assert v.encode("AB", frame=True) == [BOS, ab, EOS]


def test_errors():
    with pytest.raises(EmptyCorpus):
        train_bpe([], 10)
    with pytest.raises(VocabTooSmall):
        train_bpe(["ABCDEF"], 3)
    with pytest.raises(VocabFormatError):
        TokenVocab.loads("nonsense\n")


def test_persistence_round_trip(tmp_path):
    corpus = ["CC(=O)Nc1ccccc1", "c1ccccc1O", "CCN(CC)CC", "CC(=O)O"] * 3
    v = train_bpe(corpus, 30)
    path = tmp_path / "v.bpe"
    v.save(path)
    w = TokenVocab.load(path)
    assert w == v
    assert w.dumps() == v.dumps()
    for s in corpus:
        assert w.encode(s) == v.encode(s)


def test_deterministic():
    corpus = ["MKTAYIAKQRQISFVKSHFSRQ", "MKTAYLAKQRQISFVKSHFSRQ", "MKKAYIAKQ"]
    assert train_bpe(corpus, 40).dumps() == train_bpe(list(reversed(corpus)), 40).dumps()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.text(alphabet="ACGT()=#", min_size=1, max_size=30), min_size=1, max_size=12),
       st.integers(8, 40))
def test_round_trip_property(corpus, size):
    v = train_bpe(corpus, size)
    assert len(v) <= size + len(SPECIALS)
    for s in corpus:
        ids = v.encode(s)
        assert UNK not in ids
        assert v.decode(ids) == s

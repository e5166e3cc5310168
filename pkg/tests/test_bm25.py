import random

import pytest

from hfrag.bm25 import Bm25Params, InvertedIndex, build_index, search, tokenize
from hfrag.core import DataError, Passage, Source

from oracles import bm25_bruteforce

# Hand fixture: N = 3, doc lengths 3, 3, 5, avgdl = 11/3.
HAND = {"d1": "polar bear ice", "d2": "bear bear forest", "d3": "ice sheet melt fast today"}
# idf(bear) = ln((3 - 2 + 0.5) / (2 + 0.5) + 1) = ln(1.6)
IDF_BEAR = 0.47000362924573563
# d1: tf=1, dl=3 -> idf * 2.2 / (1 + 1.2 * (0.25 + 0.75 * 9/11))
D1_BEAR = 0.5077717780244109
# d2: tf=2, dl=3 -> idf * 2 * 2.2 / (2 + 1.2 * (0.25 + 0.75 * 9/11))
D2_BEAR = 0.6810831034578925


def _index(docs):
    return build_index(Passage(d, t) for d, t in docs.items())


class TestTokenize:
    def test_examples(self):
        assert tokenize("Polar bears, 2 bears!") == ["polar", "bears", "2", "bears"]
        assert tokenize("") == []
        assert tokenize("Global-warming") == ["global", "warming"]

    def test_underscore_splits(self):
        assert tokenize("snake_case") == ["snake", "case"]


class TestBuildIndex:
    def test_statistics(self):
        index = _index({"a": "one two three", "b": "one two three four five"})
        assert index.avg_doc_length == 4.0
        assert index.doc_count == 2
        assert index.postings["one"] == [("a", 1), ("b", 1)]

    def test_empty_corpus(self):
        with pytest.raises(DataError, match="empty"):
            build_index([])

    def test_duplicate_id(self):
        with pytest.raises(DataError, match="dup"):
            build_index([Passage("dup", "a"), Passage("dup", "b")])

    def test_doc_count(self):
        assert _index({f"d{i}": f"word{i} common" for i in range(17)}).doc_count == 17

    def test_json_round_trip(self):
        index = _index(HAND)
        back = InvertedIndex.from_json(index.to_json())
        assert back.postings == index.postings
        assert back.doc_lengths == index.doc_lengths
        assert back.to_json() == index.to_json()

    def test_json_rejects_foreign_file(self):
        with pytest.raises(DataError):
            InvertedIndex.from_json('{"format": "other", "version": 1}')


class TestSearch:
    def test_hand_computed(self):
        index = _index(HAND)
        assert index.idf("bear") == pytest.approx(IDF_BEAR, abs=1e-12)
        run = search(index, Bm25Params(), "bear", 10)
        assert run.docs == ["d2", "d1"]
        assert run.entries[0].score == pytest.approx(D2_BEAR, abs=1e-6)
        assert run.entries[1].score == pytest.approx(D1_BEAR, abs=1e-6)
        assert [e.rank for e in run.entries] == [1, 2]

    def test_no_match_is_empty(self):
        assert search(_index(HAND), Bm25Params(), "zebra", 5).entries == ()

    def test_depth_one_is_max(self):
        index = _index(HAND)
        brute = bm25_bruteforce(HAND, "polar bear ice")
        best = max(sorted(brute), key=lambda d: brute[d])
        run = search(index, Bm25Params(), "polar bear ice", 1)
        assert run.docs == [best]

    def test_run_metadata(self):
        run = search(_index(HAND), Bm25Params(), "ice", 5, query_id="c7", source=Source.LABELED, ranker="bm25")
        assert (run.query, run.source, run.ranker) == ("c7", Source.LABELED, "bm25")

    def test_ties_break_by_doc_id(self):
        index = _index({"b": "cat", "a": "cat", "c": "dog"})
        assert search(index, Bm25Params(), "cat", 5).docs == ["a", "b"]

    def test_zero_scores_dropped(self):
        # b=0, k1=0: every matching doc scores idf > 0; non-matching never appear
        index = _index({"a": "x y", "b": "y z"})
        run = search(index, Bm25Params(k1=0.0, b=0.0), "x", 5)
        assert run.docs == ["a"]

    def test_invalid_depth(self):
        with pytest.raises(ValueError):
            search(_index(HAND), Bm25Params(), "bear", 0)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            Bm25Params(b=1.5)
        with pytest.raises(ValueError):
            Bm25Params(k1=-1)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_bruteforce(self, seed):
        rng = random.Random(seed)
        vocab = [f"w{i}" for i in range(rng.randint(3, 15))]
        docs = {f"d{i:02d}": " ".join(rng.choices(vocab, k=rng.randint(1, 12))) for i in range(rng.randint(1, 25))}
        query = " ".join(rng.choices(vocab + ["absent"], k=rng.randint(1, 5)))
        depth = rng.randint(1, 30)
        brute = bm25_bruteforce(docs, query)
        expected = sorted(((d, s) for d, s in brute.items() if s > 0), key=lambda t: (-t[1], t[0]))[:depth]
        run = search(_index(docs), Bm25Params(), query, depth)
        assert run.docs == [d for d, _ in expected]
        for e, (_, s) in zip(run.entries, expected):
            assert abs(e.score - s) <= 1e-9

    def test_deterministic(self):
        from hfrag.core import write_run_file

        a = write_run_file([search(_index(HAND), Bm25Params(), "ice bear", 10)])
        b = write_run_file([search(_index(HAND), Bm25Params(), "ice bear", 10)])
        assert a == b

    def test_adding_unrelated_doc_matches_oracle(self):
        docs = dict(HAND)
        docs["d4"] = "completely unrelated words here"
        brute = bm25_bruteforce(docs, "bear ice")
        run = search(_index(docs), Bm25Params(), "bear ice", 10)
        expected = sorted(((d, s) for d, s in brute.items() if s > 0), key=lambda t: (-t[1], t[0]))
        assert run.docs == [d for d, _ in expected]

import math
import random

import pytest

from hfrag.core import DataError, Label, Qrels, Source
from hfrag.evaluation import (
    ConfigId,
    SweepError,
    macro_f1,
    ndcg_at_k,
    optsel,
    sweep_context_size,
    sweep_to_csv,
)
from hfrag.predictor import Prediction

S, R, N = Label.SUPPORTS, Label.REFUTES, Label.NOT_ENOUGH_INFO


def preds(mapping):
    return [Prediction(q, lab) for q, lab in mapping.items()]


class TestMacroF1:
    def test_perfect(self):
        gold = {"a": S, "b": R, "c": N}
        assert macro_f1(gold, preds(gold)).macro_f1 == 1.0

    def test_constant_prediction_uniform_gold(self):
        # predicted class: P = 1/3, R = 1 -> F1 = 2*(1/3)/(4/3) = 1/2; others 0
        gold = {"a": S, "b": R, "c": N, "d": S, "e": R, "f": N}
        report = macro_f1(gold, preds({q: S for q in gold}))
        assert report.per_class[S].precision == pytest.approx(1 / 3)
        assert report.per_class[S].recall == 1.0
        assert [report.per_class[lab].f1 for lab in (S, R, N)] == pytest.approx([0.5, 0.0, 0.0])
        assert report.macro_f1 == pytest.approx(1 / 6, abs=1e-9)

    def test_missing_predictions(self):
        gold = {"a": S, "b": N}
        report = macro_f1(gold, [])
        assert report.n_missing_predictions == report.n_claims == 2
        assert report.missing_ids == ["a", "b"]
        # both scored NOT_ENOUGH_INFO: N has P=1/2, R=1 -> F1=2/3
        assert report.per_class[N].f1 == pytest.approx(2 / 3)

    def test_absent_class_contributes_zero(self):
        gold = {"a": S, "b": S}
        assert macro_f1(gold, preds(gold)).macro_f1 == pytest.approx(1 / 3)

    def test_unknown_query(self):
        with pytest.raises(DataError, match="zz"):
            macro_f1({"a": S}, [Prediction("zz", S)])

    def test_empty_gold(self):
        with pytest.raises(DataError):
            macro_f1({}, [])

    def test_permutation_invariant_and_bounded(self):
        rng = random.Random(7)
        labels = list(Label)
        for _ in range(30):
            gold = {f"q{i}": rng.choice(labels) for i in range(rng.randint(1, 25))}
            p = [Prediction(q, rng.choice(labels)) for q in gold if rng.random() < 0.9]
            base = macro_f1(gold, p)
            rng.shuffle(p)
            assert macro_f1(gold, p).macro_f1 == base.macro_f1
            f1s = [s.f1 for s in base.per_class.values()]
            assert len(f1s) == 3
            assert all(0.0 <= f <= 1.0 for f in f1s)
            assert base.macro_f1 == pytest.approx(sum(f1s) / 3, abs=1e-15)

    def test_report_serialisation(self):
        report = macro_f1({"a": S}, preds({"a": S}))
        assert '"macro_f1"' in report.to_json()
        assert "macro-F1" in report.to_table()


class TestNdcg:
    qrels = Qrels({("q1", "a"): 2, ("q1", "b"): 1, ("q2", "x"): 1, ("q3", "n"): 0})

    def test_ideal(self):
        assert ndcg_at_k({"q1": ["a", "b", "z"]}, self.qrels, 10).per_query["q1"] == 1.0

    def test_single_relevant_at_two(self):
        res = ndcg_at_k({"q2": ["z", "x"]}, self.qrels, 10)
        assert res.per_query["q2"] == pytest.approx(0.6309, abs=1e-4)
        assert res.per_query["q2"] == pytest.approx(1 / math.log2(3), abs=1e-12)

    def test_swapped_graded(self):
        # DCG = 1/1 + 3/log2(3); ideal = 3 + 1/log2(3)
        res = ndcg_at_k({"q1": ["b", "a"]}, self.qrels, 10)
        expected = (1 + 3 / math.log2(3)) / (3 + 1 / math.log2(3))
        assert res.per_query["q1"] == pytest.approx(expected, abs=1e-12)

    def test_skips_unjudged_and_nonrelevant(self):
        res = ndcg_at_k({"q1": ["a"], "q3": ["n"], "q9": ["a"]}, self.qrels, 10)
        assert res.skipped == ["q3", "q9"]
        assert list(res.per_query) == ["q1"]

    def test_cutoff(self):
        res = ndcg_at_k({"q2": ["z", "x"]}, self.qrels, 1)
        assert res.per_query["q2"] == 0.0

    def test_mean_and_bounds(self):
        rng = random.Random(1)
        docs = list("abcdefgh")
        grades = {("q", d): rng.randint(0, 3) for d in docs}
        grades[("q", "a")] = 3
        qrels = Qrels(grades)
        for _ in range(50):
            rng.shuffle(docs)
            v = ndcg_at_k({"q": docs}, qrels, 5).per_query["q"]
            assert 0.0 <= v <= 1.0 + 1e-12
        ideal = sorted(docs, key=lambda d: -grades["q", d])
        assert ndcg_at_k({"q": ideal}, qrels, 5).per_query["q"] == pytest.approx(1.0)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            ndcg_at_k({}, self.qrels, 0)


class TestOptsel:
    gold = {"a": S, "b": R, "c": N}

    def test_dominant(self):
        per = {
            ConfigId(Source.LABELED, "bm25"): preds({"a": S, "b": S, "c": S}),
            ConfigId(Source.UNLABELED, "bm25"): preds(self.gold),
        }
        best, report, reports = optsel(per, self.gold)
        assert best == ConfigId(Source.UNLABELED, "bm25")
        assert report.macro_f1 == 1.0
        assert all(report.macro_f1 >= r.macro_f1 for r in reports.values())

    def test_tie_is_lexicographic(self):
        same = preds({"a": S, "b": R, "c": S})
        per = {ConfigId(Source.UNLABELED, "a"): same, ConfigId(Source.LABELED, "z"): same,
               ConfigId(Source.LABELED, "b"): same}
        best, _, _ = optsel(per, self.gold)
        assert best == ConfigId(Source.LABELED, "b")

    def test_exhaustive_two_by_two(self):
        rng = random.Random(11)
        gold = {f"q{i}": rng.choice(list(Label)) for i in range(12)}
        per = {
            ConfigId(src, r): [Prediction(q, rng.choice(list(Label))) for q in gold]
            for src in Source
            for r in ("bm25", "trigram")
        }
        # oracle: score each by hand-rolled counting and take the max
        def f1_by_hand(ps):
            total = 0.0
            for lab in Label:
                tp = sum(1 for p in ps if p.label is lab and gold[p.query] is lab)
                npred = sum(1 for p in ps if p.label is lab)
                ngold = sum(1 for g in gold.values() if g is lab)
                prec = tp / npred if npred else 0.0
                rec = tp / ngold if ngold else 0.0
                total += 2 * prec * rec / (prec + rec) if prec + rec else 0.0
            return total / 3

        scores = {c: f1_by_hand(ps) for c, ps in per.items()}
        top = max(scores.values())
        expected = min((c for c, s in scores.items() if abs(s - top) < 1e-12), key=lambda c: c.sort_key)
        best, report, _ = optsel(per, gold)
        assert best == expected
        assert report.macro_f1 == pytest.approx(top, abs=1e-12)

    def test_different_claim_sets(self):
        per = {
            ConfigId(Source.LABELED, "x"): preds({"a": S}),
            ConfigId(Source.LABELED, "y"): preds({"b": S}),
        }
        with pytest.raises(DataError, match="different claim sets"):
            optsel(per, self.gold)


class TestSweep:
    def test_single_size(self):
        assert sweep_context_size(lambda k: k / 100, [10]) == {10: 0.1}

    def test_keeps_order(self):
        assert list(sweep_context_size(lambda k: 0.0, [5, 1, 2])) == [5, 1, 2]

    def test_error_annotated(self):
        def boom(k):
            if k == 3:
                raise RuntimeError("bad")
            return 0.0

        with pytest.raises(SweepError, match="size 3") as info:
            sweep_context_size(boom, [1, 3])
        assert info.value.size == 3

    def test_empty(self):
        with pytest.raises(ValueError):
            sweep_context_size(lambda k: 0.0, [])

    def test_csv(self):
        text = sweep_to_csv({1: 0.25, 10: 0.5})
        assert text == "size,macro_f1\n1,0.25\n10,0.5\n"

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hfrag.context import Block, PromptRecord
from hfrag.core import Label, ParseError, Source
from hfrag.predictor import Prediction, baseline_predict, parse_predictions, write_predictions

S, R, N = Label.SUPPORTS, Label.REFUTES, Label.NOT_ENOUGH_INFO


def record(labels, n_passages=0):
    blocks = [Block(Source.LABELED, f"l{i}", f"Label: {lab.value}", lab) for i, lab in enumerate(labels)]
    blocks += [Block(Source.UNLABELED, f"p{i}", "Evidence: x") for i in range(n_passages)]
    return PromptRecord("q1", "claim", tuple(blocks))


@pytest.mark.parametrize(
    "labels,expected",
    [
        ([S, S, R], S),
        ([], N),
        ([S, R], N),
        ([R, N, R, S], R),
        ([N, N, S], N),
        ([S, R, N], N),
    ],
)
def test_majority(labels, expected):
    assert baseline_predict(record(labels)).label is expected


def test_passages_do_not_vote():
    assert baseline_predict(record([], n_passages=5)).label is N
    assert baseline_predict(record([R], n_passages=5)).label is R


@given(st.lists(st.sampled_from(list(Label)), max_size=8))
def test_order_of_votes_irrelevant(labels):
    expected = baseline_predict(record(labels)).label
    for perm in itertools.islice(itertools.permutations(labels), 20):
        assert baseline_predict(record(list(perm))).label is expected


class TestParsePredictions:
    def test_basic(self):
        (p,) = parse_predictions('{"id":"q1","label":"refutes"}')
        assert p == Prediction("q1", R)

    def test_raw_kept(self):
        (p,) = parse_predictions('{"id":"q1","label":"SUPPORTS","raw":"The answer is SUPPORTS."}')
        assert p.raw_output == "The answer is SUPPORTS."

    def test_alias(self):
        (p,) = parse_predictions('{"id":"q1","label":"not enough info"}')
        assert p.label is N

    def test_unknown_label(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_predictions('{"id":"q1","label":"supports"}\n{"id":"q2","label":"maybe"}\n')

    @pytest.mark.parametrize("text", ["{bad json", '{"label":"supports"}', '{"id":"q1"}'])
    def test_malformed(self, text):
        with pytest.raises(ParseError, match="line 1"):
            parse_predictions(text)

    def test_duplicate_id(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_predictions('{"id":"q1","label":"supports"}\n{"id":"q1","label":"refutes"}\n')

    def test_round_trip(self):
        preds = [Prediction("q1", S), Prediction("q2", N, "unsure")]
        assert parse_predictions(write_predictions(preds)) == preds

import json

import pytest

from hfrag.context import DEFAULT_TEMPLATE, SourceStores, assemble, source_proportions
from hfrag.core import Claim, DataError, Label, LabeledExample, Passage, Source
from hfrag.fusion import MergedContext, MergedEntry

STORES = SourceStores(
    labeled={
        "l1": LabeledExample("l1", "Brown bears are near extinction.", Label.SUPPORTS),
        "l2": LabeledExample("l2", "Sea ice is growing.", Label.REFUTES, "Satellite data show decline."),
    },
    unlabeled={"p1": Passage("p1", "Global warming threatens many species.", "Extinction")},
)
CLAIM = Claim("c1", "Global warming causes polar bear extinction.")


def ctx(*entries):
    return MergedContext("c1", tuple(MergedEntry(d, s, 0.0) for d, s in entries))


def test_single_labeled_block():
    rec = assemble(CLAIM, ctx(("l1", Source.LABELED)), STORES)
    assert len(rec.blocks) == 1
    assert rec.blocks[0].rendered_text == "Claim: Brown bears are near extinction.\nLabel: SUPPORTS"
    assert rec.blocks[0].label is Label.SUPPORTS
    assert "Label: SUPPORTS" in rec.render()


def test_evidence_line_when_present():
    rec = assemble(CLAIM, ctx(("l2", Source.LABELED)), STORES)
    assert rec.blocks[0].rendered_text.endswith("\nEvidence: Satellite data show decline.")


def test_unlabeled_block():
    rec = assemble(CLAIM, ctx(("p1", Source.UNLABELED)), STORES)
    assert rec.blocks[0].rendered_text == "Evidence: Global warming threatens many species."
    assert rec.blocks[0].label is None


def test_empty_context_is_zero_shot():
    rec = assemble(CLAIM, ctx(), STORES)
    assert rec.blocks == ()
    assert CLAIM.text in rec.render()
    assert all(lab.value in rec.instruction for lab in Label)


def test_order_preserved():
    order = [("p1", Source.UNLABELED), ("l2", Source.LABELED), ("l1", Source.LABELED)]
    rec = assemble(CLAIM, ctx(*order), STORES)
    assert [(b.doc, b.source) for b in rec.blocks] == order
    prompt = rec.render()
    assert prompt.index("Global warming threatens") < prompt.index("Sea ice") < prompt.index("Brown bears")


def test_unresolvable_doc():
    with pytest.raises(DataError, match="c1.*l9"):
        assemble(CLAIM, ctx(("l9", Source.LABELED)), STORES)


def test_source_mismatch_is_unresolvable():
    with pytest.raises(DataError, match="p1"):
        assemble(CLAIM, ctx(("p1", Source.LABELED)), STORES)


def test_template_placeholders_single_pass():
    claim = Claim("c1", "Text with {blocks} inside.")
    rec = assemble(claim, ctx(("l1", Source.LABELED)), STORES, template="[{claim}] {blocks} {unknown}")
    assert rec.render() == "[Text with {blocks} inside.] Claim: Brown bears are near extinction.\nLabel: SUPPORTS {unknown}"


def test_rendering_is_deterministic():
    order = [("l1", Source.LABELED), ("p1", Source.UNLABELED)]
    assert assemble(CLAIM, ctx(*order), STORES).to_json() == assemble(CLAIM, ctx(*order), STORES).to_json()


def test_prompt_jsonl_contract():
    rec = assemble(CLAIM, ctx(("l1", Source.LABELED), ("p1", Source.UNLABELED), ("l2", Source.LABELED)), STORES)
    obj = json.loads(rec.to_json())
    assert set(obj) == {"id", "prompt", "n_labeled", "n_unlabeled"}
    assert (obj["id"], obj["n_labeled"], obj["n_unlabeled"]) == ("c1", 2, 1)
    assert obj["prompt"] == rec.render()


def test_default_template_has_all_placeholders():
    for name in ("{claim}", "{blocks}", "{instruction}"):
        assert name in DEFAULT_TEMPLATE


def test_store_key_mismatch():
    with pytest.raises(DataError):
        SourceStores(labeled={"x": LabeledExample("l1", "c", Label.SUPPORTS)})


class TestSourceProportions:
    def test_all_labeled(self):
        assert source_proportions([ctx(("l1", Source.LABELED), ("l2", Source.LABELED))]) == (1.0, 0.0)

    def test_six_four(self):
        a = ctx(*[(f"l{i}", Source.LABELED) for i in range(4)], ("p1", Source.UNLABELED))
        b = ctx(("l9", Source.LABELED), ("l8", Source.LABELED), *[(f"p{i}", Source.UNLABELED) for i in range(3)])
        assert source_proportions([a, b]) == (0.6, 0.4)

    def test_no_entries(self):
        assert source_proportions([ctx()]) == (0.0, 0.0)

    def test_sums_to_one(self):
        contexts = [ctx(*[(f"d{j}", Source.LABELED if (i * j) % 3 else Source.UNLABELED) for j in range(7)])
                    for i in range(1, 9)]
        lab, unl = source_proportions(contexts)
        assert abs(lab + unl - 1.0) <= 1e-12

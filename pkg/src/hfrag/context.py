"""Prompt assembly from a merged context."""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from hfrag.core import Claim, DataError, Label, LabeledExample, Passage, Source
from hfrag.fusion import MergedContext

DEFAULT_INSTRUCTION = (
    "Decide whether the context supports or refutes the claim. "
    "Answer with exactly one label: SUPPORTS, REFUTES or NOT_ENOUGH_INFO."
)

DEFAULT_TEMPLATE = "{instruction}\n\n{blocks}\n\nClaim: {claim}\nLabel:"

BLOCK_SEPARATOR = "\n\n"

_PLACEHOLDER = re.compile(r"\{(claim|blocks|instruction)\}")


@dataclass(frozen=True)
class SourceStores:
    labeled: Mapping[str, LabeledExample] = field(default_factory=dict)
    unlabeled: Mapping[str, Passage] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for store in (self.labeled, self.unlabeled):
            for key, rec in store.items():
                if key != rec.id:
                    raise DataError(f"store key {key!r} does not match record id {rec.id!r}")


@dataclass(frozen=True)
class Block:
    source: Source
    doc: str
    rendered_text: str
    # veracity label of a labeled exemplar; None for passages
    label: Label | None = None


@dataclass(frozen=True)
class PromptRecord:
    query: str
    claim_text: str
    blocks: tuple[Block, ...]
    instruction: str = DEFAULT_INSTRUCTION
    template: str = DEFAULT_TEMPLATE

    @property
    def n_labeled(self) -> int:
        return sum(1 for b in self.blocks if b.source is Source.LABELED)

    @property
    def n_unlabeled(self) -> int:
        return sum(1 for b in self.blocks if b.source is Source.UNLABELED)

    def render(self) -> str:
        values = {
            "claim": self.claim_text,
            "blocks": BLOCK_SEPARATOR.join(b.rendered_text for b in self.blocks),
            "instruction": self.instruction,
        }
        return _PLACEHOLDER.sub(lambda m: values[m.group(1)], self.template)

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.query, "prompt": self.render(), "n_labeled": self.n_labeled, "n_unlabeled": self.n_unlabeled},
            ensure_ascii=False,
        )


def render_labeled(example: LabeledExample) -> str:
    text = f"Claim: {example.claim_text}\nLabel: {example.label.value}"
    if example.evidence:
        text += f"\nEvidence: {example.evidence}"
    return text


def render_passage(passage: Passage) -> str:
    return f"Evidence: {passage.text}"


def assemble(
    claim: Claim,
    context: MergedContext,
    stores: SourceStores,
    template: str = DEFAULT_TEMPLATE,
    instruction: str = DEFAULT_INSTRUCTION,
) -> PromptRecord:
    blocks = []
    for entry in context.entries:
        if entry.source is Source.LABELED:
            example = stores.labeled.get(entry.doc)
            if example is None:
                raise DataError(f"query {claim.id}: labeled doc {entry.doc} not found in labeled store")
            blocks.append(Block(entry.source, entry.doc, render_labeled(example), example.label))
        else:
            passage = stores.unlabeled.get(entry.doc)
            if passage is None:
                raise DataError(f"query {claim.id}: unlabeled doc {entry.doc} not found in corpus")
            blocks.append(Block(entry.source, entry.doc, render_passage(passage)))
    return PromptRecord(claim.id, claim.text, tuple(blocks), instruction, template)


def source_proportions(contexts: Iterable[MergedContext]) -> tuple[float, float]:
    """Fraction of context entries from (labeled, unlabeled) sources.

    Returns (0.0, 0.0) when there are no entries at all.
    """
    n_lab = n_unl = 0
    for ctx in contexts:
        n_lab += ctx.count(Source.LABELED)
        n_unl += ctx.count(Source.UNLABELED)
    total = n_lab + n_unl
    if total == 0:
        return 0.0, 0.0
    return n_lab / total, n_unl / total

"""Prediction boundary.

External predictors are separate programs: they read prompt JSONL
(``{"id", "prompt", "n_labeled", "n_unlabeled"}``) and write prediction JSONL
(``{"id", "label", "raw"?}``). :func:`baseline_predict` is a model-free stand-in
that votes over the labels of the retrieved exemplars.
"""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass
from typing import TextIO

from hfrag.context import PromptRecord
from hfrag.core import DataError, Label, ParseError, Source, _read_jsonl, parse_label


@dataclass(frozen=True)
class Prediction:
    query: str
    label: Label
    raw_output: str | None = None

    def to_json(self) -> str:
        obj = {"id": self.query, "label": self.label.value}
        if self.raw_output is not None:
            obj["raw"] = self.raw_output
        return json.dumps(obj, ensure_ascii=False)


def baseline_predict(record: PromptRecord) -> Prediction:
    """Majority label over labeled blocks; ties and empty votes give NOT_ENOUGH_INFO."""
    votes = Counter(b.label for b in record.blocks if b.source is Source.LABELED and b.label is not None)
    ranked = votes.most_common()
    if not ranked or (len(ranked) > 1 and ranked[0][1] == ranked[1][1]):
        return Prediction(record.query, Label.NOT_ENOUGH_INFO)
    return Prediction(record.query, ranked[0][0])


def parse_predictions(stream: TextIO | str | Iterable[str]) -> list[Prediction]:
    preds: list[Prediction] = []
    seen: set[str] = set()
    for lineno, obj in _read_jsonl(stream):
        qid = obj.get("id")
        if not isinstance(qid, str) or not qid:
            raise ParseError("missing or non-string 'id'", lineno)
        if qid in seen:
            raise ParseError(f"duplicate prediction for {qid}", lineno)
        seen.add(qid)
        try:
            label = parse_label(obj.get("label"))
        except DataError as exc:
            raise ParseError(str(exc), lineno) from None
        raw = obj.get("raw")
        preds.append(Prediction(qid, label, raw if isinstance(raw, str) else None))
    return preds


def write_predictions(preds: Iterable[Prediction]) -> str:
    return "".join(p.to_json() + "\n" for p in preds)

"""Verification and retrieval metrics.

Macro-F1 is averaged over the fixed three-label set, so a class missing from
both gold and predictions still contributes an F1 of 0. nDCG uses exponential
gain ``2**grade - 1`` and a ``log2(rank + 1)`` discount.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from hfrag.core import DataError, Label, Qrels, Source
from hfrag.predictor import Prediction


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    per_class: dict[Label, ClassScores]
    macro_f1: float
    n_claims: int
    n_missing_predictions: int
    missing_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "n_claims": self.n_claims,
            "n_missing_predictions": self.n_missing_predictions,
            "missing_ids": list(self.missing_ids),
            "per_class": {
                label.value: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
                for label, s in self.per_class.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        rows = [f"{'label':<16}{'precision':>10}{'recall':>10}{'f1':>10}"]
        for label, s in self.per_class.items():
            rows.append(f"{label.value:<16}{s.precision:>10.4f}{s.recall:>10.4f}{s.f1:>10.4f}")
        rows.append(f"{'macro-F1':<16}{'':>10}{'':>10}{self.macro_f1:>10.4f}")
        rows.append(f"claims: {self.n_claims}  missing predictions: {self.n_missing_predictions}")
        return "\n".join(rows) + "\n"


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def macro_f1(gold: Mapping[str, Label], pred: Iterable[Prediction]) -> EvalReport:
    """Score predictions against gold labels.

    Claims without a prediction count as NOT_ENOUGH_INFO and are listed in
    ``missing_ids``.
    """
    if not gold:
        raise DataError("gold label set is empty")
    predicted: dict[str, Label] = {}
    for p in pred:
        if p.query not in gold:
            raise DataError(f"prediction for unknown claim {p.query}")
        if p.query in predicted:
            raise DataError(f"more than one prediction for claim {p.query}")
        predicted[p.query] = p.label

    missing = sorted(q for q in gold if q not in predicted)
    tp = dict.fromkeys(Label, 0)
    n_pred = dict.fromkeys(Label, 0)
    n_gold = dict.fromkeys(Label, 0)
    for qid, g in gold.items():
        p = predicted.get(qid, Label.NOT_ENOUGH_INFO)
        n_gold[g] += 1
        n_pred[p] += 1
        if p is g:
            tp[g] += 1

    per_class = {}
    for label in Label:
        precision = _ratio(tp[label], n_pred[label])
        recall = _ratio(tp[label], n_gold[label])
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassScores(precision, recall, f1)
    macro = math.fsum(s.f1 for s in per_class.values()) / len(per_class)
    return EvalReport(per_class, macro, len(gold), len(missing), missing)


@dataclass
class NdcgResult:
    per_query: dict[str, float]
    mean: float
    skipped: list[str]

    def to_dict(self) -> dict:
        return {"mean": self.mean, "per_query": dict(self.per_query), "skipped": list(self.skipped)}


def _dcg(grades: Iterable[int]) -> float:
    return math.fsum((2.0**g - 1.0) / math.log2(i + 1) for i, g in enumerate(grades, start=1))


def ndcg_at_k(rankings: Mapping[str, Sequence[str]], qrels: Qrels, k: int = 10) -> NdcgResult:
    """nDCG@k per query and averaged.

    Queries with no relevant document in the qrels have no defined ideal
    ranking; they are left out of the mean and reported in ``skipped``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    per_query: dict[str, float] = {}
    skipped: list[str] = []
    for qid, docs in rankings.items():
        judged = qrels.for_query(qid)
        ideal = _dcg(sorted((g for g in judged.values() if g > 0), reverse=True)[:k])
        if ideal == 0.0:
            skipped.append(qid)
            continue
        per_query[qid] = _dcg(judged.get(d, 0) for d in list(docs)[:k]) / ideal
    mean = math.fsum(per_query.values()) / len(per_query) if per_query else 0.0
    return NdcgResult(per_query, mean, skipped)


@dataclass(frozen=True)
class ConfigId:
    source: Source
    ranker: str

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.source.value, self.ranker)

    def __str__(self) -> str:
        return f"{self.source.value}:{self.ranker}"


def optsel(
    per_config_predictions: Mapping[ConfigId, Sequence[Prediction]],
    gold: Mapping[str, Label],
) -> tuple[ConfigId, EvalReport, dict[ConfigId, EvalReport]]:
    """Best single-source single-ranker configuration chosen with gold labels.

    This is an upper bound, not a method. Ties go to the lexicographically
    smallest ``(source, ranker)``. The third element holds every config's report.
    """
    if not per_config_predictions:
        raise DataError("optsel needs at least one configuration")
    configs = sorted(per_config_predictions, key=lambda c: c.sort_key)
    claim_sets = {c: frozenset(p.query for p in per_config_predictions[c]) for c in configs}
    reference = claim_sets[configs[0]]
    for c in configs[1:]:
        if claim_sets[c] != reference:
            raise DataError(f"configs {configs[0]} and {c} cover different claim sets")

    reports = {c: macro_f1(gold, per_config_predictions[c]) for c in configs}
    best = configs[0]
    for c in configs[1:]:
        if reports[c].macro_f1 > reports[best].macro_f1:
            best = c
    return best, reports[best], reports


class SweepError(RuntimeError):
    def __init__(self, size: int, cause: Exception):
        self.size = size
        super().__init__(f"pipeline failed at context size {size}: {cause}")


def sweep_context_size(pipeline: Callable[[int], float], sizes: Iterable[int]) -> dict[int, float]:
    sizes = list(sizes)
    if not sizes:
        raise ValueError("no context sizes to sweep")
    results: dict[int, float] = {}
    for size in sizes:
        if not isinstance(size, int) or size < 1:
            raise ValueError(f"context sizes must be positive integers, got {size!r}")
        try:
            results[size] = pipeline(size)
        except Exception as exc:
            raise SweepError(size, exc) from exc
    return results


def sweep_to_csv(results: Mapping[int, float], key: str = "size") -> str:
    lines = [f"{key},macro_f1"]
    lines += [f"{k},{v!r}" for k, v in results.items()]
    return "\n".join(lines) + "\n"

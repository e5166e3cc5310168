"""Domain types and file formats.

Run files use the six-column TREC layout ``qid Q0 docid rank score tag`` where
the tag is ``<source>:<ranker>``. Qrels use ``qid 0 docid grade``. Corpora,
labeled stores and claim sets are UTF-8 JSONL, one object per line.
"""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import TextIO

__all__ = [
    "Claim",
    "DataError",
    "Label",
    "LabeledExample",
    "ParseError",
    "Passage",
    "Qrels",
    "RankedRun",
    "RunEntry",
    "Source",
    "ValidationError",
    "ValidationReport",
    "format_score",
    "load_claims",
    "load_corpus",
    "load_labeled_store",
    "parse_label",
    "parse_qrels",
    "parse_run_file",
    "validate_runset",
    "write_run_file",
]

_TOKEN = re.compile(r"\S+")


class DataError(ValueError):
    """Base class for problems with input data."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ValidationError(DataError):
    pass


class Source(str, Enum):
    LABELED = "labeled"
    UNLABELED = "unlabeled"

    @property
    def order(self) -> int:
        # labeled sorts first in every cross-source tie-break
        return 0 if self is Source.LABELED else 1

    @classmethod
    def parse(cls, value: str) -> Source:
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise DataError(f"unknown source {value!r}; expected 'labeled' or 'unlabeled'") from None


class Label(str, Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"
    NOT_ENOUGH_INFO = "NOT_ENOUGH_INFO"


_LABEL_ALIASES = {
    "supports": Label.SUPPORTS,
    "support": Label.SUPPORTS,
    "refutes": Label.REFUTES,
    "refute": Label.REFUTES,
    "nei": Label.NOT_ENOUGH_INFO,
    "not enough info": Label.NOT_ENOUGH_INFO,
    "not-enough-info": Label.NOT_ENOUGH_INFO,
    "not_enough_info": Label.NOT_ENOUGH_INFO,
    "not enough information": Label.NOT_ENOUGH_INFO,
    "not-enough-information": Label.NOT_ENOUGH_INFO,
    "not_enough_information": Label.NOT_ENOUGH_INFO,
}


def parse_label(value: str | Label) -> Label:
    """Normalize a dataset label spelling to :class:`Label`.

    Matching is case-insensitive and ignores surrounding whitespace. Anything
    outside the alias table raises :class:`DataError`.
    """
    if isinstance(value, Label):
        return value
    if not isinstance(value, str):
        raise DataError(f"label must be a string, got {type(value).__name__}")
    key = " ".join(value.strip().lower().split())
    try:
        return _LABEL_ALIASES[key]
    except KeyError:
        raise DataError(f"unknown label {value!r}") from None


def _check_token(value: object, what: str) -> str:
    if not isinstance(value, str) or not _TOKEN.fullmatch(value):
        raise DataError(f"{what} must be a non-empty token without whitespace, got {value!r}")
    return value


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    gold_label: Label | None = None

    def __post_init__(self) -> None:
        _check_token(self.id, "claim id")
        if not self.text.strip():
            raise DataError(f"claim {self.id}: empty text")


@dataclass(frozen=True)
class LabeledExample:
    id: str
    claim_text: str
    label: Label
    evidence: str | None = None

    def __post_init__(self) -> None:
        _check_token(self.id, "labeled example id")
        if not self.claim_text.strip():
            raise DataError(f"labeled example {self.id}: empty claim text")


@dataclass(frozen=True)
class Passage:
    id: str
    text: str
    title: str | None = None

    def __post_init__(self) -> None:
        _check_token(self.id, "passage id")
        if not self.text.strip():
            raise DataError(f"passage {self.id}: empty text")


@dataclass(frozen=True)
class RunEntry:
    doc: str
    rank: int
    score: float


@dataclass(frozen=True)
class RankedRun:
    """One ranker's result list for one query from one source.

    Construction checks only field shapes. Rank gaps, duplicate documents and
    score-order problems are reported by :func:`validate_runset`.
    """

    query: str
    source: Source
    ranker: str
    entries: tuple[RunEntry, ...] = ()

    def __post_init__(self) -> None:
        _check_token(self.query, "query id")
        _check_token(self.ranker, "ranker tag")
        if not isinstance(self.source, Source):
            object.__setattr__(self, "source", Source.parse(self.source))
        object.__setattr__(self, "entries", tuple(self.entries))
        for e in self.entries:
            _check_token(e.doc, "doc id")
            if not isinstance(e.rank, int) or e.rank < 1:
                raise DataError(f"run {self.query}/{self.ranker}: rank must be a positive integer, got {e.rank!r}")

    @property
    def docs(self) -> list[str]:
        return [e.doc for e in self.entries]

    @property
    def tag(self) -> str:
        return f"{self.source.value}:{self.ranker}"


def _lines(stream: TextIO | str | Iterable[str]) -> Iterator[tuple[int, str]]:
    if isinstance(stream, str):
        stream = stream.splitlines()
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if line:
            yield lineno, line


def parse_run_file(
    stream: TextIO | str | Iterable[str],
    source: Source | str | None = None,
    ranker: str | None = None,
) -> list[RankedRun]:
    """Parse a six-column run file into :class:`RankedRun` values.

    ``source`` and ``ranker`` override what the ``source:ranker`` tag says.
    Runs come back in order of first appearance, entries sorted by rank.
    """
    src_override = Source.parse(source) if isinstance(source, str) else source
    groups: dict[tuple[str, Source, str], list[RunEntry]] = {}
    seen: dict[tuple[str, Source, str, str], int] = {}

    for lineno, line in _lines(stream):
        fields = line.split()
        if len(fields) != 6:
            raise ParseError(f"expected 6 fields, got {len(fields)}: {line!r}", lineno)
        qid, _q0, doc, rank_s, score_s, tag = fields
        try:
            rank = int(rank_s)
        except ValueError:
            raise ParseError(f"non-integer rank {rank_s!r}", lineno) from None
        try:
            score = float(score_s)
        except ValueError:
            raise ParseError(f"non-numeric score {score_s!r}", lineno) from None
        if rank < 1:
            raise ParseError(f"rank must be >= 1, got {rank}", lineno)

        src, rnk = src_override, ranker
        if src is None or rnk is None:
            tag_src, sep, tag_rnk = tag.partition(":")
            if src is None:
                if not sep:
                    raise ParseError(f"tag {tag!r} is not '<source>:<ranker>' and no source was given", lineno)
                try:
                    src = Source.parse(tag_src)
                except DataError as exc:
                    raise ParseError(str(exc), lineno) from None
            if rnk is None:
                rnk = tag_rnk if sep else tag
                if not rnk:
                    raise ParseError(f"tag {tag!r} has an empty ranker name", lineno)

        key = (qid, src, rnk)
        if (qid, src, rnk, doc) in seen:
            raise ValidationError(
                f"line {lineno}: duplicate document {doc} for query {qid} "
                f"(first seen on line {seen[qid, src, rnk, doc]})"
            )
        seen[qid, src, rnk, doc] = lineno
        groups.setdefault(key, []).append(RunEntry(doc, rank, score))

    return [
        RankedRun(qid, src, rnk, tuple(sorted(entries, key=lambda e: (e.rank, e.doc))))
        for (qid, src, rnk), entries in groups.items()
    ]


def format_score(score: float) -> str:
    # repr is the shortest string that round-trips the double exactly
    return repr(float(score))


def write_run_file(runs: Iterable[RankedRun], tag: str | None = None) -> str:
    """Render runs in the six-column format; ``tag`` replaces the per-run tag."""
    out = []
    for run in runs:
        t = tag if tag is not None else run.tag
        for e in run.entries:
            out.append(f"{run.query} Q0 {e.doc} {e.rank} {format_score(e.score)} {t}\n")
    return "".join(out)


@dataclass(frozen=True)
class Qrels:
    """Graded relevance judgments; unjudged pairs have grade 0."""

    grades: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def grade(self, query: str, doc: str) -> int:
        return self.grades.get((query, doc), 0)

    def for_query(self, query: str) -> dict[str, int]:
        return {d: g for (q, d), g in self.grades.items() if q == query}

    @property
    def queries(self) -> set[str]:
        return {q for q, _ in self.grades}


def parse_qrels(stream: TextIO | str | Iterable[str]) -> Qrels:
    grades: dict[tuple[str, str], int] = {}
    for lineno, line in _lines(stream):
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields 'qid 0 docid grade', got {len(fields)}", lineno)
        qid, _iter, doc, grade_s = fields
        try:
            grade = int(grade_s)
        except ValueError:
            raise ParseError(f"non-integer grade {grade_s!r}", lineno) from None
        if grade < 0:
            raise ParseError(f"negative grade {grade}", lineno)
        prev = grades.get((qid, doc))
        if prev is not None and prev != grade:
            raise ValidationError(f"line {lineno}: conflicting grades {prev} and {grade} for ({qid}, {doc})")
        grades[qid, doc] = grade
    return Qrels(grades)


@dataclass
class ValidationReport:
    missing: list[tuple[str, Source, str]] = field(default_factory=list)
    rank_gaps: list[tuple[str, Source, str]] = field(default_factory=list)
    duplicate_docs: list[tuple[str, Source, str, str]] = field(default_factory=list)
    score_order: list[tuple[str, Source, str]] = field(default_factory=list)
    duplicate_runs: list[tuple[str, Source, str]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return any((self.missing, self.rank_gaps, self.duplicate_docs, self.score_order, self.duplicate_runs))

    @property
    def ok(self) -> bool:
        return not self

    def messages(self) -> list[str]:
        msgs = [f"query {q}: no {s.value} run from ranker {r}" for q, s, r in self.missing]
        msgs += [f"query {q} ({s.value}:{r}): ranks are not 1..n consecutive" for q, s, r in self.rank_gaps]
        msgs += [f"query {q} ({s.value}:{r}): duplicate document {d}" for q, s, r, d in self.duplicate_docs]
        msgs += [f"query {q} ({s.value}:{r}): scores increase with rank" for q, s, r in self.score_order]
        msgs += [f"query {q} ({s.value}:{r}): more than one run" for q, s, r in self.duplicate_runs]
        return msgs


def validate_runset(runs: Iterable[RankedRun], expected_rankers: Iterable[str]) -> ValidationReport:
    """Check a run set for completeness and well-formed rankings.

    Every query seen in a source must have a run from each expected ranker in
    that source.
    """
    runs = list(runs)
    expected = sorted(set(expected_rankers))
    report = ValidationReport()

    present: dict[Source, dict[str, set[str]]] = {}
    for run in runs:
        rankers = present.setdefault(run.source, {}).setdefault(run.query, set())
        if run.ranker in rankers:
            report.duplicate_runs.append((run.query, run.source, run.ranker))
        rankers.add(run.ranker)

        ranks = sorted(e.rank for e in run.entries)
        if ranks != list(range(1, len(ranks) + 1)):
            report.rank_gaps.append((run.query, run.source, run.ranker))
        seen: set[str] = set()
        for e in run.entries:
            if e.doc in seen:
                report.duplicate_docs.append((run.query, run.source, run.ranker, e.doc))
            seen.add(e.doc)
        by_rank = sorted(run.entries, key=lambda e: e.rank)
        if any(a.score < b.score for a, b in zip(by_rank, by_rank[1:])):
            report.score_order.append((run.query, run.source, run.ranker))

    all_queries = sorted({run.query for run in runs})
    for source in sorted(present, key=lambda s: s.order):
        for qid in all_queries:
            have = present[source].get(qid, set())
            report.missing.extend((qid, source, r) for r in expected if r not in have)
    return report


def _read_jsonl(stream: TextIO | str | Iterable[str]) -> Iterator[tuple[int, dict]]:
    for lineno, line in _lines(stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        yield lineno, obj


def _require(obj: dict, key: str, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise ParseError(f"missing or non-string field {key!r}", lineno)
    return value


def _load_records(stream, build, what: str) -> dict:
    records: dict = {}
    for lineno, obj in _read_jsonl(stream):
        try:
            rec = build(obj, lineno)
        except ParseError:
            raise
        except DataError as exc:
            raise ParseError(str(exc), lineno) from None
        if rec.id in records:
            raise ValidationError(f"line {lineno}: duplicate {what} id {rec.id}")
        records[rec.id] = rec
    return records


def load_corpus(stream: TextIO | str | Iterable[str]) -> dict[str, Passage]:
    """Read ``{"id", "text", "title"?}`` records keyed by id, in file order."""
    return _load_records(
        stream,
        lambda o, n: Passage(_require(o, "id", n), _require(o, "text", n), o.get("title")),
        "passage",
    )


def load_labeled_store(stream: TextIO | str | Iterable[str]) -> dict[str, LabeledExample]:
    """Read ``{"id", "claim", "label", "evidence"?}`` records keyed by id."""
    return _load_records(
        stream,
        lambda o, n: LabeledExample(
            _require(o, "id", n), _require(o, "claim", n), parse_label(_require(o, "label", n)), o.get("evidence")
        ),
        "labeled example",
    )


def load_claims(stream: TextIO | str | Iterable[str]) -> dict[str, Claim]:
    """Read ``{"id", "text", "label"?}`` records keyed by id."""

    def build(o: dict, n: int) -> Claim:
        label = o.get("label")
        return Claim(_require(o, "id", n), _require(o, "text", n), parse_label(label) if label is not None else None)

    return _load_records(stream, build, "claim")

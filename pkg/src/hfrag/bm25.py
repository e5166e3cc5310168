"""Small in-memory BM25 retriever.

Scoring follows Robertson-Walker with the non-negative idf
``ln((N - df + 0.5) / (df + 0.5) + 1)``. Each distinct query term counts once.
"""

from __future__ import annotations

import heapq
import json
import math
import re
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field

from hfrag.core import DataError, LabeledExample, Passage, RankedRun, RunEntry, Source

INDEX_FORMAT = "hfrag-bm25-index"
INDEX_VERSION = 1

_WORD = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _WORD.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if not (self.k1 >= 0 and math.isfinite(self.k1)):
            raise ValueError(f"k1 must be a finite non-negative number, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    @property
    def avg_doc_length(self) -> float:
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        n, df = self.doc_count, self.df(term)
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)

    def to_json(self) -> str:
        payload = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "doc_lengths": self.doc_lengths,
            "postings": {t: [[d, tf] for d, tf in plist] for t, plist in sorted(self.postings.items())},
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> InvertedIndex:
        payload = json.loads(text)
        if payload.get("format") != INDEX_FORMAT:
            raise DataError("not an hfrag BM25 index file")
        if payload.get("version") != INDEX_VERSION:
            raise DataError(f"unsupported index version {payload.get('version')!r}")
        postings = {t: [(d, int(tf)) for d, tf in plist] for t, plist in payload["postings"].items()}
        return cls(postings=postings, doc_lengths={d: int(n) for d, n in payload["doc_lengths"].items()})


def build_index(corpus: Iterable[Passage]) -> InvertedIndex:
    index = InvertedIndex()
    for passage in corpus:
        if passage.id in index.doc_lengths:
            raise DataError(f"duplicate document id {passage.id}")
        tokens = tokenize(passage.text)
        index.doc_lengths[passage.id] = len(tokens)
        for term, tf in Counter(tokens).items():
            index.postings.setdefault(term, []).append((passage.id, tf))
    if not index.doc_lengths:
        raise DataError("cannot build an index over an empty corpus")
    if sum(index.doc_lengths.values()) == 0:
        raise DataError("corpus contains no indexable tokens")
    return index


def labeled_documents(store: Iterable[LabeledExample]) -> list[Passage]:
    """Labeled examples are retrieved by their claim text."""
    return [Passage(ex.id, ex.claim_text) for ex in store]


def score_all(index: InvertedIndex, params: Bm25Params, query: str) -> dict[str, float]:
    avgdl = index.avg_doc_length
    scores: dict[str, float] = {}
    for term in dict.fromkeys(tokenize(query)):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for doc, tf in plist:
            norm = params.k1 * (1.0 - params.b + params.b * index.doc_lengths[doc] / avgdl)
            scores[doc] = scores.get(doc, 0.0) + idf * tf * (params.k1 + 1.0) / (tf + norm)
    return scores


def search(
    index: InvertedIndex,
    params: Bm25Params,
    query: str,
    depth: int,
    *,
    query_id: str = "q",
    source: Source = Source.UNLABELED,
    ranker: str = "bm25",
) -> RankedRun:
    """Return the ``depth`` best-scoring documents with positive score.

    Ties are broken by doc id ascending.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    scores = score_all(index, params, query)
    top = heapq.nsmallest(depth, ((-s, d) for d, s in scores.items() if s > 0.0))
    entries = tuple(RunEntry(d, rank, -neg) for rank, (neg, d) in enumerate(top, start=1))
    return RankedRun(query_id, source, ranker, entries)

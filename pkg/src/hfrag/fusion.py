"""Hierarchical rank fusion.

Two stages. Within one source, the runs of several rankers are combined by
reciprocal rank fusion: each document scores ``sum(1 / rank)`` over rankers,
where a ranker that did not return the document contributes ``1 / M``.
Across sources the fused scores are not comparable, so each source's top-k
list is z-score standardized on its own before the two are merged and cut to
the final context size.
"""

from __future__ import annotations

import math
import statistics
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from hfrag.core import Claim, RankedRun, RunEntry, Source

__all__ = [
    "FusedEntry",
    "FusedList",
    "FusionConfig",
    "MergedContext",
    "MergedEntry",
    "alpha_mix",
    "grid_search_alpha",
    "hierarchical_fuse",
    "passthrough",
    "rrf_fuse",
    "zscore_standardize",
]


@dataclass(frozen=True)
class FusionConfig:
    k: int = 10
    pool_depth: int = 50
    missing_rank_m: int = 1000

    def __post_init__(self) -> None:
        for name in ("k", "pool_depth", "missing_rank_m"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.missing_rank_m < 10 * self.pool_depth:
            raise ValueError(
                f"missing_rank_m={self.missing_rank_m} must be at least 10 * pool_depth ({10 * self.pool_depth})"
            )


@dataclass(frozen=True)
class FusedEntry:
    doc: str
    rrf_score: float


@dataclass(frozen=True)
class FusedList:
    query: str
    source: Source
    entries: tuple[FusedEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def docs(self) -> list[str]:
        return [e.doc for e in self.entries]

    def as_run(self) -> RankedRun:
        entries = tuple(RunEntry(e.doc, i, e.rrf_score) for i, e in enumerate(self.entries, start=1))
        return RankedRun(self.query, self.source, "fused", entries)


@dataclass(frozen=True)
class MergedEntry:
    doc: str
    source: Source
    z_score: float


@dataclass(frozen=True)
class MergedContext:
    """Final per-query context.

    ``z_score`` holds the standardized score for hierarchical merges. Contexts
    built without standardization (single source, alpha mixture) carry the
    source-local fused score in that field instead.
    """

    query: str
    entries: tuple[MergedEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def count(self, source: Source) -> int:
        return sum(1 for e in self.entries if e.source is source)


def _by_score_then_doc(item: tuple[str, float]) -> tuple[float, str]:
    return (-item[1], item[0])


def rrf_fuse(runs: Sequence[RankedRun], config: FusionConfig) -> FusedList:
    """Fuse the runs of several rankers for one (query, source).

    Each run is cut to its first ``config.pool_depth`` ranks. A single run is
    allowed, which makes a one-ranker configuration a plain 1/rank rescoring.
    """
    if not runs:
        raise ValueError("rrf_fuse needs at least one run")
    query, source = runs[0].query, runs[0].source
    for run in runs:
        if run.source is not source:
            raise ValueError(f"cannot fuse runs from different sources ({source.value}, {run.source.value})")
        if run.query != query:
            raise ValueError(f"cannot fuse runs for different queries ({query}, {run.query})")

    rank_maps: list[dict[str, int]] = []
    for run in runs:
        ranks: dict[str, int] = {}
        for e in run.entries:
            if e.rank > config.pool_depth:
                continue
            if e.doc in ranks:
                raise ValueError(f"run {run.tag} for query {query} lists {e.doc} twice")
            ranks[e.doc] = e.rank
        rank_maps.append(ranks)

    union = {d for ranks in rank_maps for d in ranks}
    m = config.missing_rank_m
    # fsum is exactly rounded, so the result does not depend on run order
    scores = {d: math.fsum(1.0 / ranks.get(d, m) for ranks in rank_maps) for d in union}
    top = sorted(scores.items(), key=_by_score_then_doc)[: config.k]
    return FusedList(query, source, tuple(FusedEntry(d, s) for d, s in top))


def zscore_standardize(fused: FusedList) -> list[MergedEntry]:
    """Standardize fused scores with the list's own mean and population std.

    A list whose scores are all equal (including a single entry) maps to all
    zeros.
    """
    if not fused.entries:
        raise ValueError(f"cannot standardize an empty {fused.source.value} list for query {fused.query}")
    scores = [e.rrf_score for e in fused.entries]
    # a float mean of equal values can miss them by an ulp, leaving a spurious sigma
    if min(scores) == max(scores):
        return [MergedEntry(e.doc, fused.source, 0.0) for e in fused.entries]
    mu = statistics.mean(scores)
    sigma = statistics.pstdev(scores)
    return [MergedEntry(e.doc, fused.source, (e.rrf_score - mu) / sigma) for e in fused.entries]


def _exact_z_keys(fused: FusedList) -> list[Fraction]:
    """Exact values ordered like the z-scores: sign(d) * d**2 / var, with d = score - mean.

    Float z-scores of two lists can land an ulp apart where the true values
    tie, which would let rounding rather than the source rule decide the order.
    """
    scores = [Fraction(e.rrf_score) for e in fused.entries]
    mu = sum(scores) / len(scores)
    var = sum((s - mu) ** 2 for s in scores) / len(scores)
    if var == 0:
        return [Fraction(0)] * len(scores)
    return [(s - mu) * abs(s - mu) / var for s in scores]


def hierarchical_fuse(labeled: FusedList, unlabeled: FusedList, config: FusionConfig) -> MergedContext:
    """Merge the labeled and unlabeled fused lists on the z-score scale."""
    if labeled.source is not Source.LABELED or unlabeled.source is not Source.UNLABELED:
        raise ValueError("hierarchical_fuse expects (labeled, unlabeled) fused lists in that order")
    if labeled.query != unlabeled.query:
        raise ValueError(f"query mismatch: {labeled.query} vs {unlabeled.query}")
    pooled: list[tuple[Fraction, MergedEntry]] = []
    for fused in (labeled, unlabeled):
        if fused.entries:
            pooled.extend(zip(_exact_z_keys(fused), zscore_standardize(fused)))
    pooled.sort(key=lambda pair: (-pair[0], pair[1].source.order, pair[1].doc))
    return MergedContext(labeled.query, tuple(e for _, e in pooled[: config.k]))


def passthrough(fused: FusedList, k: int | None = None) -> MergedContext:
    """Context drawn from one source only, in fused order."""
    entries = fused.entries if k is None else fused.entries[:k]
    return MergedContext(fused.query, tuple(MergedEntry(e.doc, fused.source, e.rrf_score) for e in entries))


def _round_half_up(alpha: float, k: int) -> int:
    return int((Decimal(repr(alpha)) * k).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def alpha_mix(labeled: FusedList, unlabeled: FusedList, alpha: float, k: int) -> MergedContext:
    """Fixed-proportion mixture of the two sources.

    ``round(alpha * k)`` slots go to the unlabeled list and the rest to the
    labeled list; the unlabeled block comes first. For 0 < alpha < 1 a side
    that runs short is backfilled from the other. alpha = 0 and alpha = 1 use
    one source exclusively.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if labeled.query != unlabeled.query:
        raise ValueError(f"query mismatch: {labeled.query} vs {unlabeled.query}")

    n_unl = _round_half_up(alpha, k)
    n_lab = k - n_unl
    if 0 < n_unl < k:
        n_unl_eff = min(n_unl, len(unlabeled))
        n_lab_eff = min(len(labeled), k - n_unl_eff)
        n_unl_eff = min(len(unlabeled), k - n_lab_eff)
    else:
        n_unl_eff, n_lab_eff = n_unl, n_lab

    entries = [MergedEntry(e.doc, Source.UNLABELED, e.rrf_score) for e in unlabeled.entries[:n_unl_eff]]
    entries += [MergedEntry(e.doc, Source.LABELED, e.rrf_score) for e in labeled.entries[:n_lab_eff]]
    return MergedContext(labeled.query, tuple(entries))


def grid_search_alpha(
    dev_claims: Sequence[Claim],
    pipeline: Callable[[float, Sequence[Claim]], float],
    grid: Iterable[float],
) -> float:
    """Pick the mixing weight with the best dev-set macro-F1.

    ``pipeline(alpha, claims)`` runs the whole alpha-mixture configuration and
    returns its macro-F1. Ties go to the smaller alpha.
    """
    grid = sorted(set(grid))
    if not grid:
        raise ValueError("alpha grid is empty")
    if not dev_claims:
        raise ValueError("grid search needs at least one dev claim")
    unlabeled = [c.id for c in dev_claims if c.gold_label is None]
    if unlabeled:
        raise ValueError(f"dev claims without gold labels: {', '.join(unlabeled[:5])}")
    best_alpha, best_score = grid[0], -math.inf
    for alpha in grid:
        score = pipeline(alpha, dev_claims)
        if score > best_score:
            best_alpha, best_score = alpha, score
    return best_alpha

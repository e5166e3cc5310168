"""Method configurations composed from the fusion, context and predictor pieces.

A mode decides which sources and rankers feed the context:

=============  ===========================================================
zero_shot      no context
l_rag          one labeled ranker
u_rag          one unlabeled ranker
l_rag_rrf      all labeled rankers fused by RRF
u_rag_rrf      all unlabeled rankers fused by RRF
lu_rag_alpha   RRF per source, then a fixed alpha mixture
hf_rag         RRF per source, then z-score merge
=============  ===========================================================
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import TextIO

from hfrag.context import DEFAULT_TEMPLATE, PromptRecord, SourceStores, assemble
from hfrag.core import (
    Claim,
    DataError,
    Label,
    ParseError,
    Qrels,
    RankedRun,
    Source,
    _read_jsonl,
    format_score,
    write_run_file,
)
from hfrag.evaluation import EvalReport, macro_f1
from hfrag.fusion import (
    FusedList,
    FusionConfig,
    MergedContext,
    MergedEntry,
    alpha_mix,
    hierarchical_fuse,
    passthrough,
    rrf_fuse,
)
from hfrag.predictor import Prediction, baseline_predict


class Mode(str, Enum):
    ZERO_SHOT = "zero_shot"
    L_RAG = "l_rag"
    U_RAG = "u_rag"
    L_RAG_RRF = "l_rag_rrf"
    U_RAG_RRF = "u_rag_rrf"
    LU_RAG_ALPHA = "lu_rag_alpha"
    HF_RAG = "hf_rag"

    @property
    def sources(self) -> tuple[Source, ...]:
        return _MODE_SOURCES[self]

    @property
    def single_ranker(self) -> bool:
        return self in (Mode.L_RAG, Mode.U_RAG)

    @property
    def merged_tag(self) -> str:
        return "merged:hfrag" if self is Mode.HF_RAG else f"merged:{self.value}"


_MODE_SOURCES = {
    Mode.ZERO_SHOT: (),
    Mode.L_RAG: (Source.LABELED,),
    Mode.U_RAG: (Source.UNLABELED,),
    Mode.L_RAG_RRF: (Source.LABELED,),
    Mode.U_RAG_RRF: (Source.UNLABELED,),
    Mode.LU_RAG_ALPHA: (Source.LABELED, Source.UNLABELED),
    Mode.HF_RAG: (Source.LABELED, Source.UNLABELED),
}


@dataclass
class Dataset:
    claims: dict[str, Claim]
    stores: SourceStores
    runs: dict[Source, list[RankedRun]] = field(default_factory=dict)
    qrels: Qrels | None = None

    def rankers(self, source: Source) -> list[str]:
        return sorted({r.ranker for r in self.runs.get(source, ())})

    @property
    def gold(self) -> dict[str, Label]:
        missing = [c.id for c in self.claims.values() if c.gold_label is None]
        if missing:
            raise DataError(f"claims without gold labels: {', '.join(missing[:5])}")
        return {c.id: c.gold_label for c in self.claims.values()}

    def subset(self, claim_ids: Iterable[str]) -> Dataset:
        keep = set(claim_ids)
        return Dataset({q: c for q, c in self.claims.items() if q in keep}, self.stores, self.runs, self.qrels)


@dataclass
class FusionOutput:
    mode: Mode
    fused: dict[Source, list[FusedList]]
    contexts: list[MergedContext]


def _select_rankers(data: Dataset, source: Source, mode: Mode, ranker: str | None) -> list[str]:
    available = data.rankers(source)
    if ranker is not None and mode.single_ranker:
        if ranker not in available:
            raise DataError(f"no {source.value} runs from ranker {ranker!r} (have: {', '.join(available) or 'none'})")
        return [ranker]
    if not available:
        raise DataError(f"mode {mode.value} needs {source.value} runs but none were supplied")
    if mode.single_ranker and len(available) != 1:
        raise DataError(
            f"mode {mode.value} expects one {source.value} ranker, got {len(available)} "
            f"({', '.join(available)}); choose one with ranker=..."
        )
    return available


def fuse_source(data: Dataset, source: Source, rankers: Sequence[str], config: FusionConfig) -> list[FusedList]:
    """RRF per claim over the given rankers.

    A ranker with no run for a claim counts as an empty result list, so every
    document still gets that ranker's missing-rank term.
    """
    table: dict[tuple[str, str], RankedRun] = {}
    for run in data.runs.get(source, ()):
        if run.ranker in rankers:
            if (run.query, run.ranker) in table:
                raise DataError(f"two {source.value} runs for query {run.query} from ranker {run.ranker}")
            table[run.query, run.ranker] = run
    out = []
    for qid in data.claims:
        runs = [table.get((qid, r)) or RankedRun(qid, source, r) for r in rankers]
        out.append(rrf_fuse(runs, config))
    return out


def build_contexts(
    data: Dataset,
    mode: Mode | str,
    config: FusionConfig,
    *,
    alpha: float | None = None,
    ranker: str | None = None,
) -> FusionOutput:
    mode = Mode(mode)
    if mode is Mode.LU_RAG_ALPHA and alpha is None:
        raise ValueError("mode lu_rag_alpha requires alpha")

    fused = {
        source: fuse_source(data, source, _select_rankers(data, source, mode, ranker), config)
        for source in mode.sources
    }

    if mode is Mode.ZERO_SHOT:
        contexts = [MergedContext(qid) for qid in data.claims]
    elif mode is Mode.HF_RAG:
        pairs = zip(fused[Source.LABELED], fused[Source.UNLABELED])
        contexts = [hierarchical_fuse(lab, unl, config) for lab, unl in pairs]
    elif mode is Mode.LU_RAG_ALPHA:
        pairs = zip(fused[Source.LABELED], fused[Source.UNLABELED])
        contexts = [alpha_mix(lab, unl, alpha, config.k) for lab, unl in pairs]
    else:
        (source,) = mode.sources
        contexts = [passthrough(f, config.k) for f in fused[source]]
    return FusionOutput(mode, fused, contexts)


def assemble_prompts(
    data: Dataset, contexts: Iterable[MergedContext], template: str = DEFAULT_TEMPLATE
) -> list[PromptRecord]:
    return [assemble(data.claims[ctx.query], ctx, data.stores, template) for ctx in contexts]


def run_baseline(
    data: Dataset,
    mode: Mode | str,
    config: FusionConfig,
    *,
    alpha: float | None = None,
    ranker: str | None = None,
    template: str = DEFAULT_TEMPLATE,
) -> tuple[FusionOutput, list[Prediction], EvalReport]:
    """Fuse, assemble, predict with the majority-label baseline, and score."""
    out = build_contexts(data, mode, config, alpha=alpha, ranker=ranker)
    preds = [baseline_predict(r) for r in assemble_prompts(data, out.contexts, template)]
    return out, preds, macro_f1(data.gold, preds)


def baseline_f1_closure(
    data: Dataset,
    mode: Mode | str,
    config: FusionConfig,
    **kwargs,
) -> Callable[[int], float]:
    """``size -> macro-F1`` with everything but the context size held fixed."""

    def run(size: int) -> float:
        cfg = FusionConfig(size, config.pool_depth, config.missing_rank_m)
        return run_baseline(data, mode, cfg, **kwargs)[2].macro_f1

    return run


def alpha_f1_closure(data: Dataset, config: FusionConfig, **kwargs) -> Callable[[float, Sequence[Claim]], float]:
    def run(alpha: float, claims: Sequence[Claim]) -> float:
        subset = data.subset(c.id for c in claims)
        return run_baseline(subset, Mode.LU_RAG_ALPHA, config, alpha=alpha, **kwargs)[2].macro_f1

    return run


def contexts_to_jsonl(contexts: Iterable[MergedContext]) -> str:
    lines = []
    for ctx in contexts:
        entries = [{"doc": e.doc, "source": e.source.value, "score": e.z_score} for e in ctx.entries]
        lines.append(json.dumps({"id": ctx.query, "entries": entries}, ensure_ascii=False) + "\n")
    return "".join(lines)


def parse_contexts(stream: TextIO | str | Iterable[str]) -> list[MergedContext]:
    out = []
    for lineno, obj in _read_jsonl(stream):
        try:
            entries = tuple(
                MergedEntry(e["doc"], Source.parse(e["source"]), float(e["score"])) for e in obj["entries"]
            )
            out.append(MergedContext(obj["id"], entries))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed context record: {exc}", lineno) from None
    return out


def render_fused(fused: Sequence[FusedList]) -> str:
    if not fused:
        return ""
    return write_run_file((f.as_run() for f in fused), tag=f"fused:{fused[0].source.value}")


def render_merged(out: FusionOutput) -> str:
    tag = out.mode.merged_tag
    return "".join(
        f"{ctx.query} Q0 {e.doc} {rank} {format_score(e.z_score)} {tag}\n"
        for ctx in out.contexts
        for rank, e in enumerate(ctx.entries, start=1)
    )


def proportions_by_claim(contexts: Iterable[MergedContext]) -> Mapping[str, tuple[int, int]]:
    return {c.query: (c.count(Source.LABELED), c.count(Source.UNLABELED)) for c in contexts}

"""Hierarchical rank fusion for retrieval-augmented claim verification."""

from hfrag.bm25 import Bm25Params, InvertedIndex, build_index, search, tokenize
from hfrag.context import PromptRecord, SourceStores, assemble, source_proportions
from hfrag.core import (
    Claim,
    DataError,
    Label,
    LabeledExample,
    ParseError,
    Passage,
    Qrels,
    RankedRun,
    RunEntry,
    Source,
    ValidationError,
    parse_label,
    parse_qrels,
    parse_run_file,
    validate_runset,
    write_run_file,
)
from hfrag.evaluation import ConfigId, EvalReport, macro_f1, ndcg_at_k, optsel, sweep_context_size
from hfrag.fusion import (
    FusedList,
    FusionConfig,
    MergedContext,
    alpha_mix,
    grid_search_alpha,
    hierarchical_fuse,
    rrf_fuse,
    zscore_standardize,
)
from hfrag.predictor import Prediction, baseline_predict, parse_predictions

__version__ = "0.1.0"

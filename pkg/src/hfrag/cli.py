"""Command-line driver: ``hfrag <command> --config pipeline.yaml [overrides]``.

Exit codes: 0 success, 1 usage or config error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from hfrag import bm25
from hfrag.context import DEFAULT_TEMPLATE, SourceStores, source_proportions
from hfrag.core import (
    DataError,
    Source,
    load_claims,
    load_corpus,
    load_labeled_store,
    parse_qrels,
    parse_run_file,
    validate_runset,
    write_run_file,
)
from hfrag.evaluation import ConfigId, macro_f1, ndcg_at_k, optsel, sweep_context_size, sweep_to_csv
from hfrag.fusion import FusionConfig, grid_search_alpha
from hfrag.pipeline import (
    Dataset,
    Mode,
    alpha_f1_closure,
    assemble_prompts,
    baseline_f1_closure,
    build_contexts,
    contexts_to_jsonl,
    parse_contexts,
    render_fused,
    render_merged,
    run_baseline,
)
from hfrag.predictor import baseline_predict, parse_predictions, write_predictions

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2

PREDICTORS = ("baseline", "external")


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    output_dir: Path
    corpus: Path | None = None
    labeled: Path | None = None
    claims: Path | None = None
    dev_claims: Path | None = None
    qrels: Path | None = None
    runs: dict[str, list[Path]] = field(default_factory=dict)
    template: Path | None = None
    mode: Mode = Mode.HF_RAG
    k: int = 10
    pool_depth: int = 50
    missing_rank_m: int = 1000
    alpha: float | None = None
    alpha_grid: list[float] = field(default_factory=lambda: [i / 10 for i in range(11)])
    ranker: str | None = None
    predictor: str = "baseline"
    predictions: Path | None = None
    optsel_predictions: dict[str, Path] = field(default_factory=dict)
    sweep_sizes: list[int] = field(default_factory=lambda: [1, 2, 5, 10])
    k1: float = 1.2
    b: float = 0.75

    @property
    def fusion(self) -> FusionConfig:
        return FusionConfig(self.k, self.pool_depth, self.missing_rank_m)

    @property
    def bm25_params(self) -> bm25.Bm25Params:
        return bm25.Bm25Params(self.k1, self.b)

    @property
    def mode_dir(self) -> Path:
        return self.output_dir / self.mode.value

    def run_paths(self, source: Source) -> list[Path]:
        """Run files for a source; directories expand to their ``*.run`` files."""
        configured = self.runs.get(source.value)
        if configured is None:
            configured = [self.output_dir / "runs" / source.value]
        paths: list[Path] = []
        for p in configured:
            if p.is_dir():
                paths.extend(sorted(p.glob("*.run")))
            elif p.exists():
                paths.append(p)
            elif source.value in self.runs:
                raise ConfigError(f"run path does not exist: {p}")
        return paths

    def snapshot(self) -> str:
        def plain(v):
            if isinstance(v, Path):
                return str(v)
            if isinstance(v, Mode):
                return v.value
            if isinstance(v, dict):
                return {k: plain(x) for k, x in v.items()}
            if isinstance(v, list):
                return [plain(x) for x in v]
            return v

        return json.dumps({k: plain(v) for k, v in asdict(self).items()}, indent=2, sort_keys=True) + "\n"


_PATH_KEYS = {"output_dir", "corpus", "labeled", "claims", "dev_claims", "qrels", "template", "predictions"}


def load_config(path: Path | None, overrides: dict, require_mode_fields: bool = True) -> PipelineConfig:
    raw: dict = {}
    base = Path.cwd()
    if path is not None:
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        base = path.parent
    raw.update({k: v for k, v in overrides.items() if v is not None})

    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "output_dir" not in raw:
        raise ConfigError("output_dir is required")

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else (base / p).resolve()

    values: dict = {}
    for key, value in raw.items():
        if value is None:
            continue
        if key in _PATH_KEYS:
            values[key] = resolve(value)
        elif key == "runs":
            if not isinstance(value, dict):
                raise ConfigError("runs must map a source name to a path or list of paths")
            values[key] = {}
            for src, paths in value.items():
                try:
                    Source.parse(src)
                except DataError as exc:
                    raise ConfigError(f"runs: {exc}") from None
                paths = [paths] if isinstance(paths, str) else list(paths)
                values[key][Source.parse(src).value] = [resolve(p) for p in paths]
        elif key == "optsel_predictions":
            values[key] = {str(c): resolve(p) for c, p in value.items()}
        elif key == "mode":
            try:
                values[key] = Mode(value)
            except ValueError:
                raise ConfigError(f"unknown mode {value!r}; expected one of {', '.join(m.value for m in Mode)}") from None
        else:
            values[key] = value

    try:
        cfg = PipelineConfig(**values)
        cfg.fusion
        cfg.bm25_params
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.predictor not in PREDICTORS:
        raise ConfigError(f"predictor must be one of {', '.join(PREDICTORS)}, got {cfg.predictor!r}")
    if require_mode_fields and cfg.mode is Mode.LU_RAG_ALPHA and cfg.alpha is None:
        raise ConfigError("mode lu_rag_alpha requires alpha")
    if cfg.alpha is not None and not 0.0 <= float(cfg.alpha) <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {cfg.alpha}")
    for key in _PATH_KEYS - {"output_dir", "predictions"}:
        p = getattr(cfg, key)
        if p is not None and not p.exists():
            raise ConfigError(f"{key} path does not exist: {p}")
    return cfg


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _need(cfg: PipelineConfig, key: str) -> Path:
    p = getattr(cfg, key)
    if p is None:
        raise ConfigError(f"config is missing '{key}'")
    return p


def load_dataset(cfg: PipelineConfig, sources: Sequence[Source] = (Source.LABELED, Source.UNLABELED)) -> Dataset:
    claims = load_claims(_read(_need(cfg, "claims")))
    labeled = load_labeled_store(_read(cfg.labeled)) if cfg.labeled else {}
    corpus = load_corpus(_read(cfg.corpus)) if cfg.corpus else {}
    runs = {}
    for source in sources:
        loaded = []
        for path in cfg.run_paths(source):
            for run in parse_run_file(_read(path)):
                if run.source is not source:
                    raise DataError(f"{path}: run tagged {run.tag} found among {source.value} runs")
                loaded.append(run)
        runs[source] = loaded
    qrels = parse_qrels(_read(cfg.qrels)) if cfg.qrels else None
    return Dataset(claims, SourceStores(labeled, corpus), runs, qrels)


def _template(cfg: PipelineConfig) -> str:
    return _read(cfg.template) if cfg.template else DEFAULT_TEMPLATE


def _write_snapshot(cfg: PipelineConfig, directory: Path, command: str) -> None:
    atomic_write(directory / f"{command}.config.json", cfg.snapshot())


def _index_sources(cfg: PipelineConfig) -> list[tuple[Source, list]]:
    pending = []
    if cfg.labeled:
        pending.append((Source.LABELED, bm25.labeled_documents(load_labeled_store(_read(cfg.labeled)).values())))
    if cfg.corpus:
        pending.append((Source.UNLABELED, list(load_corpus(_read(cfg.corpus)).values())))
    if not pending:
        raise ConfigError("config names neither 'corpus' nor 'labeled'; nothing to index")
    return pending


def index_path(cfg: PipelineConfig, source: Source) -> Path:
    return cfg.output_dir / "index" / f"{source.value}.json"


def cmd_index(cfg: PipelineConfig, args) -> int:
    for source, docs in _index_sources(cfg):
        index = bm25.build_index(docs)
        path = index_path(cfg, source)
        atomic_write(path, index.to_json())
        print(f"indexed {index.doc_count} {source.value} documents -> {path}")
    _write_snapshot(cfg, cfg.output_dir / "index", "index")
    return EXIT_OK


def cmd_retrieve(cfg: PipelineConfig, args) -> int:
    claims = load_claims(_read(_need(cfg, "claims")))
    sources = [s for s, key in ((Source.LABELED, "labeled"), (Source.UNLABELED, "corpus")) if getattr(cfg, key)]
    if not sources:
        raise ConfigError("config names neither 'corpus' nor 'labeled'; nothing to retrieve from")
    for source in sources:
        path = index_path(cfg, source)
        if not path.exists():
            raise DataError(f"no {source.value} index at {path}; run 'hfrag index' first")
        index = bm25.InvertedIndex.from_json(_read(path))
        runs = [
            bm25.search(index, cfg.bm25_params, c.text, cfg.pool_depth, query_id=c.id, source=source)
            for c in claims.values()
        ]
        out = cfg.output_dir / "runs" / source.value / "bm25.run"
        atomic_write(out, write_run_file(runs))
        print(f"wrote {sum(len(r.entries) for r in runs)} {source.value} entries for {len(runs)} claims -> {out}")
    _write_snapshot(cfg, cfg.output_dir / "runs", "retrieve")
    return EXIT_OK


def cmd_fuse(cfg: PipelineConfig, args) -> int:
    data = load_dataset(cfg, cfg.mode.sources)
    for source in cfg.mode.sources:
        report = validate_runset(data.runs[source], data.rankers(source))
        for msg in report.messages():
            print(f"warning: {msg}", file=sys.stderr)
    out = build_contexts(data, cfg.mode, cfg.fusion, alpha=cfg.alpha, ranker=cfg.ranker)
    prompts = assemble_prompts(data, out.contexts, _template(cfg))

    d = cfg.mode_dir
    for source, fused in out.fused.items():
        atomic_write(d / f"fused.{source.value}.run", render_fused(fused))
    atomic_write(d / "merged.run", render_merged(out))
    atomic_write(d / "contexts.jsonl", contexts_to_jsonl(out.contexts))
    atomic_write(d / "prompts.jsonl", "".join(p.to_json() + "\n" for p in prompts))
    _write_snapshot(cfg, d, "fuse")
    lab, unl = source_proportions(out.contexts)
    print(f"{cfg.mode.value}: {len(out.contexts)} contexts -> {d} (labeled {lab:.3f}, unlabeled {unl:.3f})")
    return EXIT_OK


def cmd_predict(cfg: PipelineConfig, args) -> int:
    data = load_dataset(cfg, ())
    d = cfg.mode_dir
    if cfg.predictor == "external":
        src = cfg.predictions
        if src is None:
            raise ConfigError("predictor 'external' needs 'predictions' (path to prediction JSONL)")
        if not src.exists():
            raise ConfigError(f"prediction file does not exist: {src}")
        preds = parse_predictions(_read(src))
        unknown = [p.query for p in preds if p.query not in data.claims]
        if unknown:
            raise DataError(f"{src}: predictions for unknown claims: {', '.join(unknown[:5])}")
    else:
        ctx_path = d / "contexts.jsonl"
        if not ctx_path.exists():
            raise DataError(f"no contexts at {ctx_path}; run 'hfrag fuse' first")
        contexts = parse_contexts(_read(ctx_path))
        preds = [baseline_predict(r) for r in assemble_prompts(data, contexts, _template(cfg))]
    atomic_write(d / "predictions.jsonl", write_predictions(preds))
    _write_snapshot(cfg, d, "predict")
    print(f"wrote {len(preds)} predictions -> {d / 'predictions.jsonl'}")
    return EXIT_OK


def _rankings_from_run(text: str) -> dict[str, list[str]]:
    rows: dict[str, list[tuple[int, str]]] = {}
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6:
            raise DataError(f"malformed run line: {line!r}")
        rows.setdefault(parts[0], []).append((int(parts[3]), parts[2]))
    return {q: [d for _, d in sorted(v)] for q, v in rows.items()}


def cmd_eval(cfg: PipelineConfig, args) -> int:
    data = load_dataset(cfg, ())
    d = cfg.mode_dir
    pred_path = d / "predictions.jsonl"
    if not pred_path.exists():
        raise DataError(f"no predictions at {pred_path}; run 'hfrag predict' first")
    report = macro_f1(data.gold, parse_predictions(_read(pred_path)))
    result = {"mode": cfg.mode.value, "verification": report.to_dict()}

    ctx_path = d / "contexts.jsonl"
    if ctx_path.exists():
        contexts = parse_contexts(_read(ctx_path))
        lab, unl = source_proportions(contexts)
        result["source_proportions"] = {"labeled": lab, "unlabeled": unl}
        if data.qrels is not None:
            rankings = {
                c.query: [e.doc for e in c.entries if e.source is Source.UNLABELED] for c in contexts
            }
            result["context_ndcg"] = ndcg_at_k(rankings, data.qrels, cfg.k).to_dict()

    text = report.to_table()
    if args.run:
        if data.qrels is None:
            raise ConfigError("--run needs 'qrels' in the config")
        result["run_ndcg"] = {}
        for path in args.run:
            res = ndcg_at_k(_rankings_from_run(_read(Path(path))), data.qrels, cfg.k)
            result["run_ndcg"][str(path)] = res.to_dict()
            text += f"nDCG@{cfg.k} {res.mean:.4f}  {path}\n"
    if "context_ndcg" in result:
        text += f"context nDCG@{cfg.k} (unlabeled entries): {result['context_ndcg']['mean']:.4f}\n"
    if report.n_missing_predictions:
        text += f"warning: {report.n_missing_predictions} claims had no prediction and were scored NOT_ENOUGH_INFO\n"

    atomic_write(d / "report.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
    atomic_write(d / "report.txt", text)
    _write_snapshot(cfg, d, "eval")
    print(text, end="")
    return EXIT_OK


def _require_baseline(cfg: PipelineConfig, command: str) -> None:
    if cfg.predictor != "baseline":
        raise ConfigError(f"'{command}' re-runs the pipeline and only supports the baseline predictor")


def cmd_sweep(cfg: PipelineConfig, args) -> int:
    _require_baseline(cfg, "sweep")
    data = load_dataset(cfg, cfg.mode.sources)
    d = cfg.mode_dir
    if args.alpha_grid:
        dev = load_claims(_read(cfg.dev_claims)) if cfg.dev_claims else data.claims
        dev_data = Dataset(dev, data.stores, data.runs, data.qrels)
        closure = alpha_f1_closure(dev_data, cfg.fusion, template=_template(cfg))
        table: dict[float, float] = {}

        def scored(alpha, claims):
            table[alpha] = closure(alpha, claims)
            return table[alpha]

        best = grid_search_alpha(list(dev.values()), scored, cfg.alpha_grid)
        rows = sorted(table.items())
        atomic_write(d / "alpha_sweep.csv", "alpha,macro_f1\n" + "".join(f"{a!r},{f!r}\n" for a, f in rows))
        atomic_write(d / "alpha_best.json", json.dumps({"alpha": best, "macro_f1": table[best]}, indent=2) + "\n")
        print(f"best alpha {best} (macro-F1 {table[best]:.4f}) -> {d / 'alpha_sweep.csv'}")
    else:
        kwargs = {"alpha": cfg.alpha, "ranker": cfg.ranker, "template": _template(cfg)}
        results = sweep_context_size(baseline_f1_closure(data, cfg.mode, cfg.fusion, **kwargs), cfg.sweep_sizes)
        csv_text = sweep_to_csv(results)
        atomic_write(d / "sweep.csv", csv_text)
        print(csv_text, end="")
    _write_snapshot(cfg, d, "sweep")
    return EXIT_OK


def cmd_optsel(cfg: PipelineConfig, args) -> int:
    data = load_dataset(cfg)
    per_config = {}
    if cfg.predictor == "external":
        if not cfg.optsel_predictions:
            raise ConfigError("external optsel needs 'optsel_predictions' mapping 'source:ranker' to files")
        for key, path in sorted(cfg.optsel_predictions.items()):
            src, _, ranker = key.partition(":")
            if not path.exists():
                raise ConfigError(f"prediction file does not exist: {path}")
            per_config[ConfigId(Source.parse(src), ranker)] = parse_predictions(_read(path))
    else:
        for source, mode in ((Source.LABELED, Mode.L_RAG), (Source.UNLABELED, Mode.U_RAG)):
            for ranker in data.rankers(source):
                _, preds, _ = run_baseline(data, mode, cfg.fusion, ranker=ranker, template=_template(cfg))
                per_config[ConfigId(source, ranker)] = preds
    if not per_config:
        raise DataError("no single-ranker configurations found (no runs supplied)")

    best, report, reports = optsel(per_config, data.gold)
    result = {
        "best": str(best),
        "macro_f1": report.macro_f1,
        "configs": {str(c): r.macro_f1 for c, r in sorted(reports.items(), key=lambda kv: kv[0].sort_key)},
    }
    d = cfg.output_dir / "optsel"
    atomic_write(d / "optsel.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
    _write_snapshot(cfg, d, "optsel")
    for c, f1 in result["configs"].items():
        print(f"{c:<28}{f1:>8.4f}")
    print(f"best: {best} ({report.macro_f1:.4f})")
    return EXIT_OK


COMMANDS = {
    "index": (cmd_index, "build BM25 indexes over the corpus and labeled store"),
    "retrieve": (cmd_retrieve, "retrieve pool_depth BM25 candidates per claim from each source"),
    "fuse": (cmd_fuse, "fuse runs per the configured mode; write run files, contexts and prompts"),
    "predict": (cmd_predict, "produce predictions (baseline) or import them (external)"),
    "eval": (cmd_eval, "score predictions: macro-F1, nDCG@k, source proportions"),
    "sweep": (cmd_sweep, "macro-F1 across context sizes, or an alpha grid search"),
    "optsel": (cmd_optsel, "label-informed best single-source single-ranker configuration"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _csv(cast):
    def parse(text: str):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated values, got {text!r}") from None

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hfrag", description="Hierarchical rank fusion pipeline for claim verification.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("-c", "--config", type=Path, help="YAML (or JSON) pipeline config")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--mode", choices=[m.value for m in Mode])
        p.add_argument("--k", type=int)
        p.add_argument("--pool-depth", dest="pool_depth", type=int)
        p.add_argument("--missing-rank-m", dest="missing_rank_m", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--ranker")
        p.add_argument("--predictor", choices=PREDICTORS)
        p.add_argument("--predictions")
        if name == "eval":
            p.add_argument("--run", action="append", default=[], help="extra run file to score with nDCG@k")
        if name == "sweep":
            p.add_argument("--sizes", dest="sweep_sizes", type=_csv(int), help="comma-separated context sizes")
            p.add_argument("--alpha-grid", dest="alpha_grid_values", type=_csv(float), help="grid-search alpha instead")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        key: getattr(args, key, None)
        for key in ("output_dir", "mode", "k", "pool_depth", "missing_rank_m", "alpha", "ranker", "predictor",
                    "predictions", "sweep_sizes")
    }
    for key in ("output_dir", "predictions"):
        if overrides[key] is not None:
            overrides[key] = str(Path(overrides[key]).resolve())
    args.alpha_grid = False
    if getattr(args, "alpha_grid_values", None) is not None:
        overrides["alpha_grid"] = args.alpha_grid_values
        args.alpha_grid = True
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, overrides, require_mode_fields=not args.alpha_grid)
        return func(cfg, args)
    except ConfigError as exc:
        print(f"hfrag {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError, OSError) as exc:
        print(f"hfrag {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

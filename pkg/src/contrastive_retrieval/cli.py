"""Command-line surface.

Subcommands:

* ``run``: evaluate one method (or all five) over a dataset, writing
  per-method record files, a summary, and, for multi-method runs, the
  overlap/cost/sweep/strata reports.
* ``compare``: overlap report between two existing record files.
* ``sweep``: accuracy across a grid of contrastive weights.
* ``cost``: cost report over record files.
* ``stratify``: rating-tier accuracy from records plus a ratings sheet.
* ``embed``: build the binary embedding cache for a corpus.

``--mock`` swaps in seeded deterministic backends so every command runs
offline; with equal seeds, reruns are byte-identical. Real backends are
configured via ``--config`` (endpoints, model names) with auth tokens taken
from environment variables.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from pathlib import Path

from . import __version__
from .analysis import cost_report, lambda_sweep, retrieval_shift, stratified_accuracy
from .backends import (
    EmbedderBackend,
    GeneratorBackend,
    HttpEmbedderBackend,
    HttpGeneratorBackend,
    MockEmbedderBackend,
    MockGeneratorBackend,
)
from .config import (
    DEFAULT_SWEEP_GRID,
    EMBEDDER_API_KEY_ENV,
    GENERATOR_API_KEY_ENV,
    RunConfig,
    load_config,
)
from .dataio import (
    cache_embeddings,
    load_corpus,
    load_dataset,
    load_ratings,
    load_records,
    save_records,
    write_json,
    write_text,
)
from .errors import ContrastiveRetrievalError, NoQualifyingCasesError
from .pipeline import accuracy, run_benchmark
from .reports import (
    cost_to_dict,
    overlap_to_dict,
    render_cost_table,
    render_overlap_table,
    render_strata_table,
    render_sweep_svg,
    render_sweep_table,
    strata_to_dict,
    sweep_to_dict,
)
from .retrieval import METHOD_CHR, METHOD_HYDE, METHOD_STANDARD, METHODS, Corpus
from .synthdata import CORPUS_FILE, DATASET_FILE, RATINGS_FILE, bundled_path

# CLI spellings of method names (hyphens) to internal ones (underscores).
_CLI_METHODS = {m.replace("_", "-"): m for m in METHODS}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--seed", type=int, default=None, help="backend seed")
    parser.add_argument(
        "--mock", action="store_true", default=None,
        help="use seeded deterministic offline backends",
    )
    parser.add_argument("--out", default=None, help="output directory")


def _add_data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", default=None, help="QA dataset JSONL")
    parser.add_argument("--corpus", default=None, help="corpus JSONL")
    parser.add_argument("--cache", default=None, help="embedding cache file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chr-rag",
        description="Contrastive dense retrieval and its evaluation harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate methods over a dataset")
    _add_common(p_run)
    _add_data(p_run)
    p_run.add_argument(
        "--method", choices=sorted(_CLI_METHODS) + ["all"], default="all",
        help="retrieval method (default: all five)",
    )
    p_run.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="contrastive weight")
    p_run.add_argument("--k", type=int, default=None, help="documents to retrieve")
    p_run.add_argument("--hyde-n", dest="hyde_n", type=int, default=None,
                       help="hypothetical drafts to average")
    p_run.add_argument("--ratings", default=None, help="ratings TSV for the strata report")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="overlap report between two record files")
    p_cmp.add_argument("records_a", help="records JSONL of the method expected correct")
    p_cmp.add_argument("records_b", help="records JSONL of the method expected wrong")
    p_cmp.add_argument("--k", type=int, default=5, help="top-K denominator")
    p_cmp.add_argument("--out", default=None, help="output directory")
    p_cmp.set_defaults(func=cmd_compare)

    p_sweep = sub.add_parser("sweep", help="accuracy across contrastive weights")
    _add_common(p_sweep)
    _add_data(p_sweep)
    p_sweep.add_argument(
        "--lambdas", default=None,
        help="comma-separated weights (default: 0.2,0.4,0.6,0.8,1.0,1.2,1.4)",
    )
    p_sweep.add_argument("--k", type=int, default=None)
    p_sweep.add_argument("--hyde-n", dest="hyde_n", type=int, default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cost = sub.add_parser("cost", help="expansion cost report over record files")
    p_cost.add_argument("records", nargs="+", help="records JSONL files")
    p_cost.add_argument("--out", default=None, help="output directory")
    p_cost.set_defaults(func=cmd_cost)

    p_strat = sub.add_parser("stratify", help="accuracy by rating tier")
    p_strat.add_argument("--records", required=True, help="records JSONL")
    p_strat.add_argument("--ratings", required=True, help="ratings TSV")
    p_strat.add_argument("--out", default=None, help="output directory")
    p_strat.set_defaults(func=cmd_stratify)

    p_embed = sub.add_parser("embed", help="build the embedding cache for a corpus")
    p_embed.add_argument("--corpus", required=True, help="corpus JSONL")
    p_embed.add_argument("--cache", required=True, help="cache file to write")
    p_embed.add_argument("--config", default=None)
    p_embed.add_argument("--seed", type=int, default=None)
    p_embed.add_argument("--mock", action="store_true", default=None)
    p_embed.set_defaults(func=cmd_embed)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for arg_name, field in (
        ("lam", "lam"),
        ("k", "k"),
        ("hyde_n", "hyde_n"),
        ("seed", "seed"),
        ("mock", "mock"),
        ("out", "out_dir"),
        ("dataset", "dataset_path"),
        ("corpus", "corpus_path"),
        ("cache", "cache_path"),
        ("ratings", "ratings_path"),
    ):
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field] = value
    return config.replace(**overrides)


def _make_backends(
    config: RunConfig,
) -> tuple[GeneratorBackend, GeneratorBackend, EmbedderBackend]:
    """Expansion generator, answer generator, embedder (separate call counters)."""
    if config.mock:
        embedder = MockEmbedderBackend(dimension=config.mock_dimension, seed=config.seed)
        return (
            MockGeneratorBackend(seed=config.seed, embedder=embedder),
            MockGeneratorBackend(seed=config.seed, embedder=embedder),
            embedder,
        )
    if not (config.generator_url and config.embedder_url):
        raise ValueError(
            "no backend endpoints configured; set generator_url/embedder_url "
            "in the config file or pass --mock"
        )
    gen_key = os.environ.get(GENERATOR_API_KEY_ENV)
    emb_key = os.environ.get(EMBEDDER_API_KEY_ENV)
    return (
        HttpGeneratorBackend(
            config.generator_url, config.generator_model, api_key=gen_key, seed=config.seed
        ),
        HttpGeneratorBackend(
            config.generator_url, config.generator_model, api_key=gen_key, seed=config.seed
        ),
        HttpEmbedderBackend(config.embedder_url, config.embedder_model, api_key=emb_key),
    )


def _resolve_inputs(config: RunConfig, embedder: EmbedderBackend):
    dataset_path = config.dataset_path or (
        str(bundled_path(DATASET_FILE)) if config.mock else ""
    )
    corpus_path = config.corpus_path or (
        str(bundled_path(CORPUS_FILE)) if config.mock else ""
    )
    if not dataset_path or not corpus_path:
        raise ValueError(
            "dataset and corpus paths are required (the bundled fixture is used "
            "only with --mock)"
        )
    items = load_dataset(dataset_path)
    corpus = load_corpus(corpus_path, embedder=embedder, cache_path=config.cache_path or None)
    return items, corpus, Path(dataset_path).stem


def _clock(config: RunConfig):
    # Mock runs zero out wall timings so record files stay byte-identical.
    return None if config.mock else time.perf_counter


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _, _, embedder = _make_backends(config)
    items, corpus, dataset_name = _resolve_inputs(config, embedder)
    methods = METHODS if args.method == "all" else (_CLI_METHODS[args.method],)
    out = Path(config.out_dir)
    clock = _clock(config)

    all_records: dict[str, list] = {}
    summaries: dict[str, dict] = {}
    for method in methods:
        generator, answer_generator, embedder = _make_backends(config)
        records, summary = run_benchmark(
            items,
            method,
            corpus,
            config.replace(method=method),
            generator=generator,
            answer_generator=answer_generator,
            embedder=embedder,
            dataset_name=dataset_name,
            clock=clock,
        )
        save_records(out / f"records_{method}.jsonl", records)
        all_records[method] = records
        summaries[method] = summary
        print(f"{method}: accuracy {summary['accuracy']:.3f} over {summary['n']} items")

    write_json(
        out / "summary.json",
        {"config": dataclasses.asdict(config), "methods": summaries},
    )

    if len(methods) > 1:
        _emit_reports(config, items, corpus, dataset_name, all_records, out)
    print(f"wrote {out}")
    return 0


def _emit_reports(
    config: RunConfig,
    items,
    corpus: Corpus,
    dataset_name: str,
    all_records: dict[str, list],
    out: Path,
) -> None:
    try:
        overlap = retrieval_shift(
            all_records[METHOD_CHR], all_records[METHOD_HYDE], config.k
        )
        write_json(out / "report_overlap.json", overlap_to_dict(overlap))
        write_text(out / "report_overlap.txt", render_overlap_table(overlap))
    except NoQualifyingCasesError as exc:
        print(f"overlap report skipped: {exc}", file=sys.stderr)

    cost = cost_report([r for records in all_records.values() for r in records])
    write_json(out / "report_cost.json", cost_to_dict(cost))
    write_text(out / "report_cost.txt", render_cost_table(cost))

    generator, answer_generator, embedder = _make_backends(config)
    sweep = lambda_sweep(
        items,
        DEFAULT_SWEEP_GRID,
        corpus,
        config,
        generator=generator,
        answer_generator=answer_generator,
        embedder=embedder,
        baselines={
            METHOD_STANDARD: accuracy(all_records[METHOD_STANDARD]),
            METHOD_HYDE: accuracy(all_records[METHOD_HYDE]),
        },
        dataset_name=dataset_name,
        clock=_clock(config),
    )
    write_json(out / "report_sweep.json", sweep_to_dict(sweep))
    write_text(out / "report_sweep.txt", render_sweep_table(sweep))
    write_text(out / "report_sweep.svg", render_sweep_svg(sweep))

    ratings_path = config.ratings_path or (
        str(bundled_path(RATINGS_FILE)) if config.mock else ""
    )
    if ratings_path:
        ratings, exclusions = load_ratings(ratings_path)
        strata = stratified_accuracy(all_records[METHOD_CHR], ratings, exclusions)
        write_json(out / "report_strata.json", strata_to_dict(strata))
        write_text(out / "report_strata.txt", render_strata_table(strata))
    else:
        print("strata report skipped: no ratings file", file=sys.stderr)


def cmd_compare(args: argparse.Namespace) -> int:
    records_a = load_records(args.records_a)
    records_b = load_records(args.records_b)
    overlap = retrieval_shift(records_a, records_b, args.k)
    table = render_overlap_table(overlap)
    if args.out:
        out = Path(args.out)
        write_json(out / "report_overlap.json", overlap_to_dict(overlap))
        write_text(out / "report_overlap.txt", table)
        print(f"wrote {out}")
    else:
        print(table, end="")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    lambdas = DEFAULT_SWEEP_GRID
    if args.lambdas:
        lambdas = tuple(float(part) for part in args.lambdas.split(",") if part.strip())
    generator, answer_generator, embedder = _make_backends(config)
    items, corpus, dataset_name = _resolve_inputs(config, embedder)

    baselines = {}
    for method in (METHOD_STANDARD, METHOD_HYDE):
        gen, ans, emb = _make_backends(config)
        records, summary = run_benchmark(
            items, method, corpus, config.replace(method=method),
            generator=gen, answer_generator=ans, embedder=emb,
            dataset_name=dataset_name, clock=_clock(config),
        )
        baselines[method] = summary["accuracy"]

    sweep = lambda_sweep(
        items, lambdas, corpus, config,
        generator=generator, answer_generator=answer_generator, embedder=embedder,
        baselines=baselines, dataset_name=dataset_name, clock=_clock(config),
    )
    table = render_sweep_table(sweep)
    if args.out:
        out = Path(args.out)
        write_json(out / "report_sweep.json", sweep_to_dict(sweep))
        write_text(out / "report_sweep.txt", table)
        write_text(out / "report_sweep.svg", render_sweep_svg(sweep))
        print(f"wrote {out}")
    else:
        print(table, end="")
    return 0


def cmd_cost(args: argparse.Namespace) -> int:
    records = [r for path in args.records for r in load_records(path)]
    report = cost_report(records)
    table = render_cost_table(report)
    if args.out:
        out = Path(args.out)
        write_json(out / "report_cost.json", cost_to_dict(report))
        write_text(out / "report_cost.txt", table)
        print(f"wrote {out}")
    else:
        print(table, end="")
    return 0


def cmd_stratify(args: argparse.Namespace) -> int:
    records = load_records(args.records)
    ratings, exclusions = load_ratings(args.ratings)
    strata = stratified_accuracy(records, ratings, exclusions)
    table = render_strata_table(strata)
    if args.out:
        out = Path(args.out)
        write_json(out / "report_strata.json", strata_to_dict(strata))
        write_text(out / "report_strata.txt", table)
        print(f"wrote {out}")
    else:
        print(table, end="")
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _, _, embedder = _make_backends(config)
    corpus = load_corpus(args.corpus, embedder=embedder)
    cache_embeddings(args.cache, {doc.id: doc.embedding for doc in corpus})
    print(f"cached {len(corpus)} embeddings (dimension {corpus.dimension}) to {args.cache}")
    return 0


def main_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (ContrastiveRetrievalError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main_cli())


if __name__ == "__main__":
    entrypoint()

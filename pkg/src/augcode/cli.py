"""``augcode`` command line: extract, enrich, build-acs, train, eval,
search, and replay.

Exit codes: 0 success, 1 usage error, 2 data error, 3 environment
error (filesystem, network, external scorer transport).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bridge import BridgeError, BridgeScorer
from .corpus import (
    CorpusError,
    PARTITIONS,
    read_corpus,
    validate_scenario_id,
)
from .engine import (
    NbowScorer,
    RetrievalModel,
    TrainConfig,
    TrainingError,
    build_index,
    rank,
    train,
)
from .enrich import EnrichmentConfig, enrich_corpus
from .evaluate import (
    distractor_eval,
    micro_match,
    render_micro_match,
    render_report,
    search_space_eval,
    write_reports,
)
from .extract import ExtractionError, ExtractorConfig
from .pipeline import PipelineConfig, StageError, extract_tree, run_replay
from .scenarios import (
    BuildSummary,
    augmented_from_code_record,
    augmented_to_code_record,
    build_dataset_pairs,
)
from .tfidf import TfidfScorer
from .tokenizers import tokenize_nl

logger = logging.getLogger("augcode")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ENV = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise UsageError(message)


def _read_all(path: str, expected_partition: str | None = None):
    errors = []
    records = list(read_corpus(path, expected_partition, errors))
    for err in errors:
        logger.warning("%s:%d: %s", path, err.line, err.message)
    return records, errors


def _load_pairs(paths: str, scenario: int):
    pairs = []
    for part in paths.split(","):
        records, _ = _read_all(part.strip())
        pairs.extend(augmented_from_code_record(r, scenario) for r in records)
    return pairs


def cmd_extract(args) -> int:
    cfg = ExtractorConfig(
        split_identifiers=args.split_identifiers,
        max_function_lines=args.max_function_lines,
    )
    if args.src:
        count, failed = extract_tree(
            args.src, args.out, repo=args.repo, partition=args.partition, extractor_config=cfg
        )
        print(f"extracted {count} function record(s) -> {args.out}")
        if failed:
            print(f"{failed} file(s) skipped with diagnostics", file=sys.stderr)
        return EXIT_OK
    # Re-derive records from an existing corpus file.
    from .scenarios import record_from_function
    from .extract import extract_functions
    from .corpus import write_corpus

    records, _ = _read_all(args.input)

    def regenerate():
        for record in records:
            try:
                functions = extract_functions(record.original_string, record.path, cfg)
            except ExtractionError as exc:
                logger.warning("%s", exc)
                continue
            if len(functions) != 1:
                logger.warning("%s:%s: expected 1 function, found %d",
                               record.path, record.func_name, len(functions))
                continue
            yield record_from_function(
                functions[0],
                repo=record.repo,
                path=record.path,
                partition=record.partition,
                sha=record.sha,
                url=record.url,
                language=record.language,
                split_identifiers=cfg.split_identifiers,
            )

    count = write_corpus(regenerate(), args.out)
    print(f"re-extracted {count} function record(s) -> {args.out}")
    return EXIT_OK


def cmd_enrich(args) -> int:
    records, _ = _read_all(args.input)
    cfg = EnrichmentConfig(
        cache_dir=args.cache,
        api_base_url=args.api_base,
        token_env=args.token_env,
        offline=args.offline,
        max_requests_per_hour=args.max_per_hour,
        request_timeout=args.timeout,
        workers=args.workers,
    )
    _, summary = enrich_corpus(records, cfg)
    print(summary.to_json())
    if args.summary:
        Path(args.summary).parent.mkdir(parents=True, exist_ok=True)
        Path(args.summary).write_text(summary.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_build_acs(args) -> int:
    validate_scenario_id(args.scenario)
    from .corpus import write_corpus
    from .enrich import cache_lookup

    records, _ = _read_all(args.input)
    lookup = cache_lookup(args.commits) if args.commits else None
    summary = BuildSummary()
    pairs = build_dataset_pairs(
        records, args.scenario, lookup, max_tokens=args.max_tokens, summary=summary
    )
    write_corpus((augmented_to_code_record(a, r) for a, r in pairs), args.output)
    rejected = dict(sorted(summary.rejected.items()))
    print(
        f"scenario {args.scenario}: emitted {summary.emitted}, "
        f"rejected {json.dumps(rejected)} -> {args.output}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    pairs = _load_pairs(args.input, args.scenario)
    train_pairs = [p for p in pairs if p.partition == "train"]
    valid_pairs = [p for p in pairs if p.partition == "valid"]
    cfg = TrainConfig(
        dim=args.dim,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        momentum=args.momentum,
        temperature=args.temperature,
        margin_offset=args.margin_offset,
        min_frequency=args.min_freq,
        seed=args.seed,
    )
    model, trace = train(train_pairs, valid_pairs, cfg)
    model.save(args.out)
    for epoch, value in enumerate(trace, start=1):
        print(f"epoch {epoch:3d}  valid MRR {value:.4f}")
    print(
        f"trained on {len(train_pairs)} pair(s) "
        f"(|Vx|={len(model.vocab_x)}, |Vy|={len(model.vocab_y)}, d={model.dim}) -> {args.out}"
    )
    return EXIT_OK


def _build_scorer(args, pairs):
    if args.scorer == "native_nbow":
        if not args.model:
            raise UsageError("--model is required with --scorer native_nbow")
        if not Path(args.model).exists():
            raise CorpusError(f"model file not found: {args.model}")
        return NbowScorer(RetrievalModel.load(args.model))
    if args.scorer == "tfidf":
        return TfidfScorer(p.y_tokens for p in pairs)
    if args.scorer == "bridge":
        if not args.bridge_cmd:
            raise UsageError("--bridge-cmd is required with --scorer bridge")
        return BridgeScorer(args.bridge_cmd)
    raise UsageError(f"unknown scorer backend: {args.scorer}")


def cmd_eval(args) -> int:
    pairs = _load_pairs(args.test, args.scenario)
    scorer = _build_scorer(args, pairs)
    lines = []
    try:
        report = distractor_eval(
            scorer,
            pairs,
            n_distractors=args.distractors,
            seed=args.seed,
            scenario=args.scenario,
        )
        print(render_report(report, f"distractor eval ({args.distractors} distractors)"))
        lines.append(report.to_json("distractor_mrr"))
        if args.search_space:
            index_records = _load_pairs(args.search_space, args.scenario)
            space = search_space_eval(
                scorer,
                index_records,
                pairs,
                seed=args.seed,
                scenario=args.scenario,
                max_queries=args.max_queries,
            )
            print(render_report(space, "search-space eval"))
            lines.append(space.to_json("search_space"))
        if args.micro_match:
            micro = micro_match(scorer, pairs)
            print(render_micro_match(micro))
            lines.append(micro.to_json())
    finally:
        if isinstance(scorer, BridgeScorer):
            scorer.close()
    if args.out:
        write_reports(lines, args.out)
        print(f"report -> {args.out}")
    return EXIT_OK


def _print_hits(hits, display_by_key) -> None:
    for position, (key, score_value) in enumerate(hits, start=1):
        repo, path, func = key
        preview = display_by_key.get(key, "")
        preview = " ".join(preview.split())[:72]
        print(f"{position:3d}  {score_value:9.4f}  {repo}/{path}:{func}")
        if preview:
            print(f"     {preview}")


def cmd_search(args) -> int:
    index_pairs = _load_pairs(args.index, scenario=0)
    if not index_pairs:
        raise CorpusError("search index is empty")
    display_by_key = {p.source_key: p.display for p in index_pairs}

    if args.scorer == "tfidf":
        scorer = TfidfScorer(p.y_tokens for p in index_pairs)

        def top(query_tokens):
            scores = scorer.score_many(query_tokens, [p.y_tokens for p in index_pairs])
            order = sorted(
                range(len(index_pairs)), key=lambda i: (-scores[i], index_pairs[i].source_key)
            )
            return [
                (index_pairs[i].source_key, float(scores[i]))
                for i in order[: min(args.k, len(index_pairs))]
            ]

    else:
        if not args.model:
            raise UsageError("--model is required with --scorer native_nbow")
        if not Path(args.model).exists():
            raise CorpusError(f"model file not found: {args.model}")
        model = RetrievalModel.load(args.model)
        index = build_index(model, index_pairs)

        def top(query_tokens):
            return rank(model, index, query_tokens, k=args.k)

    print(f"index: {len(index_pairs)} entries", file=sys.stderr)

    def run_query(text: str) -> None:
        tokens = tokenize_nl(text)
        if not tokens:
            return
        _print_hits(top(tokens), display_by_key)

    if args.query is not None:
        run_query(args.query)
        return EXIT_OK

    while True:
        try:
            line = input("query> ")
        except EOFError:
            print("", file=sys.stderr)
            return EXIT_OK
        line = line.strip()
        if not line:
            continue
        run_query(line)


def cmd_replay(args) -> int:
    config = PipelineConfig.from_file(args.config)
    result = run_replay(config, force=args.force)
    for name in result.ran:
        print(f"stage {name}: ran")
    for name in result.skipped:
        print(f"stage {name}: skipped (up to date)")
    print(f"artifacts in {config.workdir}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="augcode", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="decompose Python sources into a corpus file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--src", help="source tree to walk for .py files")
    group.add_argument("--input", help="existing corpus JSONL to re-derive")
    p.add_argument("--out", required=True, help="output corpus JSONL path")
    p.add_argument("--repo", default="", help="repo label for emitted records")
    p.add_argument("--partition", default="train", choices=PARTITIONS)
    p.add_argument("--split-identifiers", action="store_true")
    p.add_argument("--max-function-lines", type=int, default=2000)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("enrich", help="fetch commit messages into a cache")
    p.add_argument("--input", required=True)
    p.add_argument("--cache", required=True, help="cache directory")
    p.add_argument("--offline", action="store_true")
    p.add_argument("--api-base", default="https://api.github.com")
    p.add_argument("--token-env", default="GITHUB_TOKEN")
    p.add_argument("--max-per-hour", type=int, default=5000)
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--summary", default="", help="write outcome counts JSON here")
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("build-acs", help="build a scenario dataset")
    p.add_argument("--scenario", required=True, type=int, choices=range(6))
    p.add_argument("--input", required=True)
    p.add_argument("--commits", default="", help="commit cache directory")
    p.add_argument("--output", required=True)
    p.add_argument("--max-tokens", type=int, default=512)
    p.set_defaults(func=cmd_build_acs)

    p = sub.add_parser("train", help="train the dual-encoder retriever")
    p.add_argument("--input", required=True, help="scenario dataset JSONL (comma-separable)")
    p.add_argument("--scenario", type=int, default=0, choices=range(6))
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--temperature", type=float, default=0.07)
    p.add_argument("--margin-offset", type=float, default=0.0)
    p.add_argument("--min-freq", type=int, default=2)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a scorer on a dataset")
    p.add_argument("--model", default="", help="model file (native_nbow)")
    p.add_argument("--test", required=True, help="eval dataset JSONL (comma-separable)")
    p.add_argument("--scenario", type=int, default=0, choices=range(6))
    p.add_argument("--distractors", type=int, default=999)
    p.add_argument("--search-space", default="", help="comma-separated index JSONL files")
    p.add_argument("--max-queries", type=int, default=None)
    p.add_argument("--micro-match", action="store_true")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--scorer", default="native_nbow", choices=["native_nbow", "tfidf", "bridge"])
    p.add_argument("--bridge-cmd", default="", help="external scorer command line")
    p.add_argument("--out", default="", help="report JSONL path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("search", help="interactive or one-shot top-k code search")
    p.add_argument("--model", default="")
    p.add_argument("--index", required=True, help="comma-separated dataset JSONL files")
    p.add_argument("--query", default=None, help="run one query instead of the prompt loop")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--scorer", default="native_nbow", choices=["native_nbow", "tfidf"])
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("replay", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--force", action="store_true", help="rerun every stage")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, ExtractionError, TrainingError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV if isinstance(exc.cause, (OSError, BridgeError)) else EXIT_DATA
    except BridgeError as exc:
        print(f"bridge error: {exc}", file=sys.stderr)
        return EXIT_ENV
    except OSError as exc:
        print(f"environment error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())

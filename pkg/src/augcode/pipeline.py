"""End-to-end replay: extract -> enrich -> build-acs -> train -> eval.

Each stage records a key (hash of its config and input artifacts) and
the hashes of its outputs in a manifest; a rerun skips stages whose key
and outputs are unchanged. With a fixed seed the whole pipeline is
byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus as corpus_mod
from .corpus import read_corpus, write_corpus
from .engine import NbowScorer, RetrievalModel, TrainConfig, train
from .enrich import EnrichmentConfig, cache_lookup, enrich_corpus
from .evaluate import distractor_eval, micro_match, write_reports
from .extract import ExtractionError, ExtractorConfig, extract_functions, iter_python_files
from .scenarios import (
    BuildSummary,
    augmented_from_code_record,
    augmented_to_code_record,
    build_dataset_pairs,
    record_from_function,
)
from .tfidf import TfidfScorer

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def extract_tree(
    src_dir: str | Path,
    out_path: str | Path,
    repo: str = "",
    partition: str = "train",
    extractor_config: ExtractorConfig | None = None,
) -> tuple[int, int]:
    """Walk a source tree into a corpus file; returns (records, failed files)."""
    src_dir = Path(src_dir)
    if not src_dir.is_dir():
        raise NotADirectoryError(f"source tree not found: {src_dir}")
    repo = repo or src_dir.name
    cfg = extractor_config or ExtractorConfig()
    failed = 0

    def records():
        nonlocal failed
        for file_path in iter_python_files(src_dir):
            rel = file_path.relative_to(src_dir).as_posix()
            try:
                source = file_path.read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                logger.warning("%s: unreadable, skipped (%s)", rel, exc)
                failed += 1
                continue
            try:
                functions = extract_functions(source, rel, cfg)
            except ExtractionError as exc:
                logger.warning("%s: extraction failed, skipped (%s)", rel, exc)
                failed += 1
                continue
            for decomposed in functions:
                yield record_from_function(
                    decomposed,
                    repo=repo,
                    path=rel,
                    partition=partition,
                    split_identifiers=cfg.split_identifiers,
                )

    count = write_corpus(records(), out_path)
    return count, failed


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    src_dir: str
    workdir: str
    cache_dir: str = ""
    scenario: int = 0
    seed: int = 42
    partition: str = "train"
    repo: str = "replay"
    offline: bool = True
    max_tokens: int = 512
    scorer: str = "native_nbow"
    train: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        if not Path(path).exists():
            raise ValueError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        payload = {name: getattr(self, name) for name in self.__dataclass_fields__}
        return json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    def validate(self) -> None:
        if not Path(self.src_dir).is_dir():
            raise ValueError(f"src_dir does not exist: {self.src_dir}")
        if self.cache_dir and not Path(self.cache_dir).is_dir():
            raise ValueError(f"cache_dir does not exist: {self.cache_dir}")
        corpus_mod.validate_scenario_id(self.scenario)
        if self.partition not in corpus_mod.PARTITIONS:
            raise ValueError(f"bad partition: {self.partition}")
        if self.scorer not in ("native_nbow", "tfidf"):
            raise ValueError(f"replay scorer must be native_nbow or tfidf, got {self.scorer}")


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_tree(root: str | Path) -> str:
    """Order-stable digest of a directory tree (relative names + bytes)."""
    root = Path(root)
    digest = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        digest.update(str(path.relative_to(root)).encode("utf-8"))
        digest.update(b"\0")
        digest.update(path.read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


def _stage_key(config_part: dict, input_hashes: dict[str, str]) -> str:
    blob = json.dumps(
        {"config": config_part, "inputs": input_hashes},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class Manifest:
    def __init__(self, path: Path):
        self.path = path
        self.stages: dict[str, dict] = {}
        if path.exists():
            with open(path, encoding="utf-8") as handle:
                self.stages = json.load(handle).get("stages", {})

    def can_skip(self, stage: str, key: str, outputs: list[Path]) -> bool:
        entry = self.stages.get(stage)
        if not entry or entry.get("key") != key:
            return False
        recorded = entry.get("outputs", {})
        for path in outputs:
            if not path.exists() or recorded.get(path.name) != sha256_file(path):
                return False
        return True

    def record(self, stage: str, key: str, outputs: list[Path]) -> None:
        self.stages[stage] = {
            "key": key,
            "outputs": {path.name: sha256_file(path) for path in outputs},
        }
        with open(self.path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump({"stages": self.stages}, handle, indent=2, sort_keys=True)
            handle.write("\n")


@dataclass
class ReplayResult:
    ran: list[str]
    skipped: list[str]
    artifacts: dict[str, Path]


def run_replay(config: PipelineConfig, force: bool = False) -> ReplayResult:
    """Run (or skip) every stage; returns which stages ran and the artifacts."""
    config.validate()
    workdir = Path(config.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(workdir / MANIFEST_NAME)

    corpus_path = workdir / "corpus.jsonl"
    enrich_path = workdir / "enrich_summary.json"
    acs_path = workdir / f"acs{config.scenario}.jsonl"
    model_path = workdir / "model.bin"
    report_path = workdir / "report.jsonl"

    ran: list[str] = []
    skipped: list[str] = []

    def stage(name: str, key: str, outputs: list[Path], runner) -> None:
        if not force and manifest.can_skip(name, key, outputs):
            skipped.append(name)
            logger.info("stage %s: skipped (up to date)", name)
            return
        try:
            runner()
        except Exception as exc:
            raise StageError(name, exc) from exc
        manifest.record(name, key, outputs)
        ran.append(name)
        logger.info("stage %s: done", name)

    # extract
    tree_hash = sha256_tree(config.src_dir)
    extract_cfg = {"repo": config.repo, "partition": config.partition}

    def run_extract() -> None:
        count, file_errors = extract_tree(
            config.src_dir,
            corpus_path,
            repo=config.repo,
            partition=config.partition,
            extractor_config=ExtractorConfig(),
        )
        if file_errors:
            raise RuntimeError(f"{file_errors} source file(s) failed extraction")
        if count == 0:
            raise RuntimeError("extraction produced an empty corpus")

    stage("extract", _stage_key(extract_cfg, {"tree": tree_hash}), [corpus_path], run_extract)

    # enrich
    cache_hash = sha256_tree(config.cache_dir) if config.cache_dir else ""
    enrich_cfg = {"offline": config.offline}

    def run_enrich() -> None:
        records = list(read_corpus(corpus_path, errors=[]))
        cfg = EnrichmentConfig(
            cache_dir=config.cache_dir or (workdir / "commit-cache"),
            offline=config.offline,
        )
        _, summary = enrich_corpus(records, cfg)
        with open(enrich_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(summary.to_json())
            handle.write("\n")

    stage(
        "enrich",
        _stage_key(enrich_cfg, {"corpus": sha256_file(corpus_path), "cache": cache_hash}),
        [enrich_path],
        run_enrich,
    )

    # build-acs
    acs_cfg = {"scenario": config.scenario, "max_tokens": config.max_tokens}

    def run_build() -> None:
        records = list(read_corpus(corpus_path, errors=[]))
        lookup = cache_lookup(config.cache_dir) if config.cache_dir else (lambda r, s: None)
        summary = BuildSummary()
        pairs = build_dataset_pairs(
            records,
            config.scenario,
            lookup,
            max_tokens=config.max_tokens,
            summary=summary,
        )
        write_corpus((augmented_to_code_record(a, r) for a, r in pairs), acs_path)

    stage(
        "build-acs",
        _stage_key(acs_cfg, {"corpus": sha256_file(corpus_path), "cache": cache_hash}),
        [acs_path],
        run_build,
    )

    # train
    train_cfg = TrainConfig(seed=config.seed, **config.train)
    train_part = {"train": train_cfg.__dict__}

    def run_train() -> None:
        records = list(read_corpus(acs_path, errors=[]))
        pairs = [augmented_from_code_record(r, config.scenario) for r in records]
        train_pairs = [p for p in pairs if p.partition == "train"]
        valid_pairs = [p for p in pairs if p.partition == "valid"]
        model, _trace = train(train_pairs, valid_pairs, train_cfg)
        model.save(model_path)

    stage(
        "train",
        _stage_key(train_part, {"acs": sha256_file(acs_path)}),
        [model_path],
        run_train,
    )

    # eval
    eval_opts = {
        "distractors": int(config.eval.get("distractors", 999)),
        "micro_match": bool(config.eval.get("micro_match", False)),
        "max_queries": config.eval.get("max_queries"),
        "scorer": config.scorer,
        "seed": config.seed,
    }

    def run_eval() -> None:
        records = list(read_corpus(acs_path, errors=[]))
        pairs = [augmented_from_code_record(r, config.scenario) for r in records]
        if config.scorer == "tfidf":
            scorer = TfidfScorer(p.y_tokens for p in pairs)
        else:
            scorer = NbowScorer(RetrievalModel.load(model_path))
        lines = []
        report = distractor_eval(
            scorer,
            pairs,
            n_distractors=eval_opts["distractors"],
            seed=config.seed,
            scenario=config.scenario,
        )
        lines.append(report.to_json("distractor_mrr"))
        if eval_opts["micro_match"]:
            lines.append(micro_match(scorer, pairs).to_json())
        write_reports(lines, report_path)

    stage(
        "eval",
        _stage_key(eval_opts, {"acs": sha256_file(acs_path), "model": sha256_file(model_path) if model_path.exists() else ""}),
        [report_path],
        run_eval,
    )

    return ReplayResult(
        ran=ran,
        skipped=skipped,
        artifacts={
            "corpus": corpus_path,
            "enrich_summary": enrich_path,
            "acs": acs_path,
            "model": model_path,
            "report": report_path,
        },
    )

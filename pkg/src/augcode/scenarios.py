"""Builds the six augmented-code scenario datasets.

Each scenario pairs a query-side token sequence (X) with a code-side
token sequence (Y), composed from a function's segments:

    0 (default)  X = short description          Y = code + comments
    1            X = comments                   Y = code
    2            X = comments + full docstring  Y = code
    3            X = comments + full docstring + commit message
                                                Y = code + comments
    4            X = comments + full docstring  Y = code + comments
    5            X = short description          Y = code

Concatenation order is fixed as written; pairs with an empty side are
rejected with a counted reason rather than padded.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .corpus import CodeRecord, CommitMessage, validate_scenario_id
from .extract import ExtractionError, ExtractorConfig, extract_functions
from .tokenizers import tokenize_code, tokenize_nl

DEFAULT_MAX_TOKENS = 512

CommitLookup = Callable[[str, str], CommitMessage | None]


@dataclass
class SegmentBundle:
    """All token streams derivable from one function + optional commit."""

    short_desc_tokens: list[str]
    full_docstring_tokens: list[str]
    comment_tokens: list[str]
    commit_tokens: list[str]
    code_tokens: list[str]
    code_with_comments_tokens: list[str]


@dataclass
class AugmentedRecord:
    """One (X, Y) training/eval pair tagged with its scenario."""

    scenario: int
    x_tokens: list[str]
    y_tokens: list[str]
    source_key: tuple[str, str, str]
    partition: str
    display: str = ""


@dataclass
class BuildSummary:
    """Emission/rejection accounting for one dataset build."""

    emitted: int = 0
    rejected: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return self.emitted + sum(self.rejected.values())


def build_segments(
    decomposed,
    commit: CommitMessage | None = None,
    split_identifiers: bool = False,
) -> SegmentBundle:
    """Tokenize every segment of a decomposed function.

    Code-with-comments is the code token stream followed by the
    natural-language tokens of the comments, so comment-derived tokens
    never leak into the plain code stream.
    """
    comment_tokens: list[str] = []
    for comment in decomposed.comments:
        comment_tokens.extend(tokenize_nl(comment))
    code_tokens = tokenize_code(decomposed.stripped_code, split_identifiers=split_identifiers)
    return SegmentBundle(
        short_desc_tokens=tokenize_nl(decomposed.docstring_short),
        full_docstring_tokens=tokenize_nl(decomposed.docstring_full),
        comment_tokens=comment_tokens,
        commit_tokens=tokenize_nl(commit.message) if commit is not None else [],
        code_tokens=code_tokens,
        code_with_comments_tokens=code_tokens + comment_tokens,
    )


def _compose(bundle: SegmentBundle, scenario: int) -> tuple[list[str], list[str]]:
    if scenario == 0:
        return (bundle.short_desc_tokens, bundle.code_with_comments_tokens)
    if scenario == 1:
        return (bundle.comment_tokens, bundle.code_tokens)
    if scenario == 2:
        return (bundle.comment_tokens + bundle.full_docstring_tokens, bundle.code_tokens)
    if scenario == 3:
        return (
            bundle.comment_tokens + bundle.full_docstring_tokens + bundle.commit_tokens,
            bundle.code_with_comments_tokens,
        )
    if scenario == 4:
        return (
            bundle.comment_tokens + bundle.full_docstring_tokens,
            bundle.code_with_comments_tokens,
        )
    if scenario == 5:
        return (bundle.short_desc_tokens, bundle.code_tokens)
    raise ValueError(f"invalid scenario id: {scenario!r}")


def build_acs(
    bundle: SegmentBundle,
    scenario: int,
    source_key: tuple[str, str, str] = ("", "", ""),
    partition: str = "train",
    display: str = "",
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> tuple[AugmentedRecord | None, str | None]:
    """Compose one scenario pair; returns (record, None) or (None, reason)."""
    validate_scenario_id(scenario)
    x_tokens, y_tokens = _compose(bundle, scenario)
    if not x_tokens:
        return (None, "empty_x")
    if not y_tokens:
        return (None, "empty_y")
    record = AugmentedRecord(
        scenario=scenario,
        x_tokens=x_tokens[:max_tokens],
        y_tokens=y_tokens[:max_tokens],
        source_key=source_key,
        partition=partition,
        display=display,
    )
    return (record, None)


def build_dataset_pairs(
    corpus: Iterable[CodeRecord],
    scenario: int,
    commits: CommitLookup | None = None,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    extractor_config: ExtractorConfig | None = None,
    summary: BuildSummary | None = None,
) -> Iterator[tuple[AugmentedRecord, CodeRecord]]:
    """Like :func:`build_dataset` but keeps each source record alongside."""
    validate_scenario_id(scenario)
    cfg = extractor_config or ExtractorConfig()
    tally = summary if summary is not None else BuildSummary()
    for record in corpus:
        try:
            functions = extract_functions(record.original_string, record.path, cfg)
        except ExtractionError:
            tally.rejected["unlexable_source"] += 1
            continue
        if len(functions) != 1:
            tally.rejected["not_one_function"] += 1
            continue
        commit = None
        if commits is not None and record.sha:
            commit = commits(record.repo, record.sha)
        bundle = build_segments(functions[0], commit, split_identifiers=cfg.split_identifiers)
        built, reason = build_acs(
            bundle,
            scenario,
            source_key=record.source_key,
            partition=record.partition,
            display=record.original_string,
            max_tokens=max_tokens,
        )
        if built is None:
            tally.rejected[reason] += 1
            continue
        tally.emitted += 1
        yield built, record


def build_dataset(
    corpus: Iterable[CodeRecord],
    scenario: int,
    commits: CommitLookup | None = None,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    extractor_config: ExtractorConfig | None = None,
    summary: BuildSummary | None = None,
) -> Iterator[AugmentedRecord]:
    """Transform corpus records into scenario pairs, re-deriving segments
    from each record's verbatim source.

    ``commits`` maps (repo, sha) to a cached CommitMessage; records
    without one simply contribute empty commit token streams.
    """
    for aug, _ in build_dataset_pairs(
        corpus, scenario, commits, max_tokens, extractor_config, summary
    ):
        yield aug


def augmented_to_code_record(aug: AugmentedRecord, source: CodeRecord) -> CodeRecord:
    """Serialize a pair into the corpus schema (X in docstring_tokens, Y in code_tokens)."""
    return CodeRecord(
        repo=source.repo,
        path=source.path,
        url=source.url,
        func_name=source.func_name,
        original_string=source.original_string,
        language=source.language,
        code=source.code,
        docstring=source.docstring,
        sha=source.sha,
        partition=aug.partition,
        docstring_tokens=list(aug.x_tokens),
        code_tokens=list(aug.y_tokens),
    )


def augmented_from_code_record(record: CodeRecord, scenario: int = 0) -> AugmentedRecord:
    """Read a pair back out of the corpus schema."""
    return AugmentedRecord(
        scenario=scenario,
        x_tokens=list(record.docstring_tokens),
        y_tokens=list(record.code_tokens),
        source_key=record.source_key,
        partition=record.partition,
        display=record.original_string,
    )


def record_from_function(
    decomposed,
    repo: str,
    path: str,
    partition: str = "train",
    sha: str = "",
    url: str = "",
    language: str = "python",
    split_identifiers: bool = False,
) -> CodeRecord:
    """Corpus record for a freshly extracted function.

    Token fields carry the default scenario composition: the short
    description on the query side, code plus comments on the code side.
    """
    bundle = build_segments(decomposed, None, split_identifiers=split_identifiers)
    return CodeRecord(
        repo=repo,
        path=path,
        url=url,
        func_name=decomposed.func_name,
        original_string=decomposed.source,
        language=language,
        code=decomposed.code_without_docstring,
        code_tokens=bundle.code_with_comments_tokens,
        docstring=decomposed.docstring_full,
        docstring_tokens=bundle.short_desc_tokens,
        sha=sha,
        partition=partition,
    )

"""Retrieval evaluation: distractor MRR, whole-index search-space MRR,
and micro-matching accuracy.

Every query's candidates are ordered by (score desc, source_key asc,
candidate position asc) — a fixed total order, so reported ranks never
depend on luck in ties.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .scenarios import AugmentedRecord

DEFAULT_DISTRACTORS = 999
TOP_K = (1, 5, 10)


@dataclass
class EvalReport:
    """Metric bundle for one retrieval experiment."""

    scenario: int
    mrr: float
    top_k_hits: dict[int, float]
    n_queries: int
    search_space_size: int
    magnitude_label: str
    seed: int

    def to_json(self, kind: str = "distractor_mrr") -> str:
        payload = {
            "report": kind,
            "scenario": self.scenario,
            "mrr": self.mrr,
            "top_k_hits": {str(k): v for k, v in sorted(self.top_k_hits.items())},
            "n_queries": self.n_queries,
            "search_space_size": self.search_space_size,
            "magnitude_label": self.magnitude_label,
            "seed": self.seed,
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


@dataclass
class MicroMatchReport:
    """Sign-rule matching accuracy over positive pairs."""

    t_p: int
    t_q: int
    accuracy_percent: float
    score_min: float
    score_max: float

    def to_json(self) -> str:
        payload = {
            "report": "micro_match",
            "t_p": self.t_p,
            "t_q": self.t_q,
            "accuracy_percent": self.accuracy_percent,
            "score_min": self.score_min,
            "score_max": self.score_max,
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def mrr(ranks: Sequence[int]) -> float:
    """Mean reciprocal rank of 1-based ranks."""
    if not ranks:
        raise ValueError("mrr of empty rank list")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks must be >= 1")
    return float(np.mean([1.0 / r for r in ranks]))


def magnitude_label(pool_size: int) -> str:
    """Index size as a multiple of the canonical 999-distractor pool."""
    return f"{round(pool_size / DEFAULT_DISTRACTORS)}x"


def _rank_of_true(
    scores: Sequence[float],
    keys: Sequence[tuple],
    true_pos: int,
) -> int:
    """1-based rank of the entry at true_pos under the engine total order."""
    s_true = scores[true_pos]
    k_true = (keys[true_pos], true_pos)
    rank = 1
    for pos, (s, key) in enumerate(zip(scores, keys)):
        if pos == true_pos:
            continue
        if s > s_true or (s == s_true and (key, pos) < k_true):
            rank += 1
    return rank


def _summarize(
    ranks: list[int],
    scenario: int,
    search_space_size: int,
    label: str,
    seed: int,
) -> EvalReport:
    return EvalReport(
        scenario=scenario,
        mrr=mrr(ranks),
        top_k_hits={k: float(np.mean([r <= k for r in ranks])) for k in TOP_K},
        n_queries=len(ranks),
        search_space_size=search_space_size,
        magnitude_label=label,
        seed=seed,
    )


def distractor_eval(
    scorer,
    eval_pairs: Sequence[AugmentedRecord],
    n_distractors: int = DEFAULT_DISTRACTORS,
    seed: int = 0,
    scenario: int = 0,
    trace: list | None = None,
) -> EvalReport:
    """Rank each true code against its query among sampled distractors.

    Distractors are drawn per query, without replacement, from the other
    pairs' code sides; the draw is fully determined by ``seed``.
    """
    n = len(eval_pairs)
    if n <= n_distractors:
        raise ValueError(
            f"need more than {n_distractors} pairs for {n_distractors} distractors, got {n}"
        )
    rng = np.random.default_rng(seed)
    ranks: list[int] = []
    for i, pair in enumerate(eval_pairs):
        draw = rng.choice(n - 1, size=n_distractors, replace=False)
        candidates = [i] + [int(j) if j < i else int(j) + 1 for j in draw]
        scores = scorer.score_many(pair.x_tokens, [eval_pairs[c].y_tokens for c in candidates])
        keys = [eval_pairs[c].source_key for c in candidates]
        rank = _rank_of_true(scores, keys, 0)
        ranks.append(rank)
        if trace is not None:
            trace.append(
                {"query": i, "candidates": candidates, "scores": scores, "rank": rank}
            )
    return _summarize(
        ranks,
        scenario,
        search_space_size=n,
        label=magnitude_label(n_distractors + 1),
        seed=seed,
    )


def search_space_eval(
    scorer,
    index_records: Sequence[AugmentedRecord],
    queries: Sequence[AugmentedRecord],
    seed: int = 0,
    scenario: int = 0,
    max_queries: int | None = None,
) -> EvalReport:
    """Rank queries against the entire index (no sampling).

    The query list is seeded-shuffled before an optional cut to
    ``max_queries``, mirroring random query-subset selection.
    """
    if not index_records:
        raise ValueError("empty index")
    keys = [r.source_key for r in index_records]
    key_positions: dict[tuple, list[int]] = {}
    for pos, key in enumerate(keys):
        key_positions.setdefault(key, []).append(pos)

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(queries))
    chosen = [queries[int(i)] for i in order]
    if max_queries is not None:
        chosen = chosen[:max_queries]

    y_sides = [r.y_tokens for r in index_records]
    ranks: list[int] = []
    for query in chosen:
        positions = key_positions.get(query.source_key)
        if not positions:
            raise ValueError(f"query key {query.source_key} not present in index")
        scores = scorer.score_many(query.x_tokens, y_sides)
        rank = min(_rank_of_true(scores, keys, pos) for pos in positions)
        ranks.append(rank)
    return _summarize(
        ranks,
        scenario,
        search_space_size=len(index_records),
        label=magnitude_label(len(index_records)),
        seed=seed,
    )


def micro_match(scorer, positive_pairs: Sequence[AugmentedRecord]) -> MicroMatchReport:
    """Score true pairs only; a score above zero counts as matched."""
    if not positive_pairs:
        raise ValueError("micro_match of empty pair list")
    scores: list[float] = []
    for pair in positive_pairs:
        scores.extend(scorer.score_many(pair.x_tokens, [pair.y_tokens]))
    t_q = len(scores)
    t_p = sum(1 for s in scores if s > 0.0)
    return MicroMatchReport(
        t_p=t_p,
        t_q=t_q,
        accuracy_percent=100.0 * t_p / t_q,
        score_min=min(scores),
        score_max=max(scores),
    )


class RandomScorer:
    """Uniform-random scorer, used to calibrate the eval harness."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def score_pair(self, x_tokens, y_tokens) -> float:
        return float(self.rng.random())

    def score_many(self, x_tokens, y_token_lists) -> list[float]:
        return [float(v) for v in self.rng.random(len(y_token_lists))]


def write_reports(lines: Iterable[str], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")


def render_report(report: EvalReport, title: str) -> str:
    rows = [
        f"{title}",
        f"  scenario        ACS={report.scenario}",
        f"  queries         {report.n_queries}",
        f"  search space    {report.search_space_size} ({report.magnitude_label})",
        f"  MRR             {report.mrr:.4f}",
    ]
    for k in sorted(report.top_k_hits):
        rows.append(f"  top-{k:<2} rate     {report.top_k_hits[k]:.4f}")
    rows.append(f"  seed            {report.seed}")
    return "\n".join(rows)


def render_micro_match(report: MicroMatchReport) -> str:
    return "\n".join(
        [
            "micro-matching",
            f"  matched/total   {report.t_p}/{report.t_q}",
            f"  accuracy        {report.accuracy_percent:.2f}%",
            f"  score range     [{report.score_min:.4f}, {report.score_max:.4f}]",
        ]
    )

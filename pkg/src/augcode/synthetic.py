"""Seeded synthetic corpora for tests, calibration, and demos.

Two families:

* token-level "separable" pairs — vocabulary-clustered, with a unique
  identifier token shared between each pair's query and code sides, so
  near-perfect retrieval is attainable by construction;
* source-level records — small generated Python functions whose
  docstrings are cluster-generic while comments carry the
  pair-identifying vocabulary, making comment-aware scenarios
  strictly more informative than docstring-only ones.
"""

from __future__ import annotations

import random
from pathlib import Path

from .corpus import CodeRecord
from .scenarios import AugmentedRecord

_COMMON_NL = ("the", "a", "to", "for", "of")
_VERBS = ("load", "save", "merge", "filter", "scan", "pack", "index", "split")
_NOUNS = ("table", "record", "buffer", "stream", "block", "frame", "batch", "queue")


def _cluster_nl_vocab(cluster: int) -> list[str]:
    return [f"c{cluster}w{j}" for j in range(6)]


def _cluster_code_vocab(cluster: int) -> list[str]:
    return [f"fn{cluster}t{j}" for j in range(6)]


def make_separable_pairs(
    n_pairs: int = 2000,
    n_clusters: int = 40,
    seed: int = 42,
    partition: str = "train",
) -> list[AugmentedRecord]:
    """Token-level pairs: cluster vocabulary plus a doubled per-pair id token."""
    rng = random.Random(seed)
    pairs = []
    for i in range(n_pairs):
        cluster = i % n_clusters
        uid = f"uid{i:05d}"
        nl_vocab = _cluster_nl_vocab(cluster)
        code_vocab = _cluster_code_vocab(cluster)
        x_tokens = [uid, uid] + rng.sample(nl_vocab, 4) + [rng.choice(_COMMON_NL)]
        y_tokens = (
            [uid, uid]
            + rng.sample(code_vocab, 4)
            + [rng.choice(code_vocab)]
            + ["def", "(", ")", "return"]
        )
        pairs.append(
            AugmentedRecord(
                scenario=0,
                x_tokens=x_tokens,
                y_tokens=y_tokens,
                source_key=("synth/separable", f"mod_{cluster}.py", f"func_{uid}"),
                partition=partition,
            )
        )
    return pairs


def pairs_to_records(pairs: list[AugmentedRecord]) -> list[CodeRecord]:
    """Serialize token-level pairs into the corpus schema."""
    out = []
    for pair in pairs:
        repo, path, func_name = pair.source_key
        out.append(
            CodeRecord(
                repo=repo,
                path=path,
                url="",
                func_name=func_name,
                original_string=pair.display,
                language="python",
                code="",
                code_tokens=list(pair.y_tokens),
                docstring="",
                docstring_tokens=list(pair.x_tokens),
                sha="",
                partition=pair.partition,
            )
        )
    return out


def make_function_source(
    uid: str,
    cluster: int,
    rng: random.Random,
    indent: str = "",
) -> str:
    """One synthetic function: generic docstring, identifying comments."""
    nl = _cluster_nl_vocab(cluster)
    code_vocab = _cluster_code_vocab(cluster)
    verb = _VERBS[cluster % len(_VERBS)]
    noun = _NOUNS[cluster % len(_NOUNS)]
    w1, w2, w3 = rng.sample(nl, 3)
    helper = rng.choice(code_vocab)
    mode = rng.choice(code_vocab)
    lines = [
        f"def task_{uid}(value):",
        f'    """{verb.capitalize()} the {w1} {noun}.',
        "",
        f"    Applies {w2} and {w3} passes over the input.",
        '    """',
        f"    # prepare {uid} {w1} buffer",
        f'    out = {helper}(value, mode="{mode}")',
        f"    # emit {uid} result",
        "    return out",
    ]
    return "\n".join(indent + line if line else line for line in lines) + "\n"


def make_source_records(
    n_records: int,
    n_clusters: int = 30,
    seed: int = 42,
    partition: str = "train",
    with_commits: bool = True,
) -> tuple[list[CodeRecord], dict[tuple[str, str], str]]:
    """Corpus records with generated source plus their commit messages."""
    rng = random.Random(seed)
    records = []
    commits: dict[tuple[str, str], str] = {}
    for i in range(n_records):
        cluster = i % n_clusters
        uid = f"u{i:05d}"
        source = make_function_source(uid, cluster, rng)
        repo = f"synth/src{cluster % 5}"
        sha = f"{i:040x}" if with_commits else ""
        if with_commits:
            w = rng.choice(_cluster_nl_vocab(cluster))
            commits[(repo, sha)] = f"fix {w} handling in task {uid}"
        records.append(
            CodeRecord(
                repo=repo,
                path=f"pkg/mod_{cluster}.py",
                url="",
                func_name=f"task_{uid}",
                original_string=source,
                language="python",
                code=source,
                code_tokens=[],
                docstring="",
                docstring_tokens=[],
                sha=sha,
                partition=partition,
            )
        )
    return records, commits


def write_source_tree(
    root: str | Path,
    n_files: int = 3,
    funcs_per_file: int = 4,
    seed: int = 7,
) -> int:
    """Materialize a small synthetic package tree; returns function count."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    count = 0
    for f in range(n_files):
        parts = []
        for g in range(funcs_per_file):
            uid = f"f{f}g{g}"
            parts.append(make_function_source(uid, (f * funcs_per_file + g) % 8, rng))
            count += 1
        (root / f"module_{f}.py").write_text("\n".join(parts), encoding="utf-8")
    return count

"""Fixtures: a schema-level synthetic corpus file (the host package's
documented JSONL layout), written without importing the host."""

from __future__ import annotations

import json
import random

import pytest

FIELD_ORDER = (
    "repo",
    "path",
    "url",
    "func_name",
    "original_string",
    "language",
    "code",
    "code_tokens",
    "docstring",
    "docstring_tokens",
    "sha",
    "partition",
)


def corpus_line(x_tokens, y_tokens, i, cluster) -> str:
    record = {
        "repo": "synth/separable",
        "path": f"mod_{cluster}.py",
        "url": "",
        "func_name": f"func_uid{i:05d}",
        "original_string": "",
        "language": "python",
        "code": "",
        "code_tokens": y_tokens,
        "docstring": "",
        "docstring_tokens": x_tokens,
        "sha": "",
        "partition": "test",
    }
    assert list(record) == list(FIELD_ORDER)
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def write_separable_corpus(path, n_pairs=2000, n_clusters=40, seed=42) -> None:
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for i in range(n_pairs):
            cluster = i % n_clusters
            uid = f"uid{i:05d}"
            nl = [f"c{cluster}w{j}" for j in range(6)]
            code = [f"fn{cluster}t{j}" for j in range(6)]
            x = [uid, uid] + rng.sample(nl, 4) + [rng.choice(["the", "a", "to"])]
            y = [uid, uid] + rng.sample(code, 4) + ["def", "(", ")", "return"]
            handle.write(corpus_line(x, y, i, cluster))
            handle.write("\n")


@pytest.fixture(scope="session")
def corpus_2000(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "separable_2000.jsonl"
    write_separable_corpus(path)
    return path


@pytest.fixture(scope="session")
def corpus_small(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "small.jsonl"
    write_separable_corpus(path, n_pairs=40, n_clusters=8, seed=3)
    return path

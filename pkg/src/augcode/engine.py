"""Desk-scale dual-encoder retriever: neural bag-of-words.

Queries (X) and codes (Y) get separate vocabularies and embedding
matrices; a sequence embeds as the L2-normalized mean of its token
rows. Training minimizes an in-batch softmax contrastive loss with
plain (optionally momentum) SGD, fully deterministic for a fixed seed,
data, and config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .scenarios import AugmentedRecord

UNK_TOKEN = "<unk>"
UNK_ID = 0

MODEL_FORMAT_VERSION = 1
MODEL_KIND = "nbow-dual-encoder"

_EPS = 1e-12


class TrainingError(Exception):
    """Raised when training cannot proceed (empty data, NaN loss)."""


@dataclass
class Vocabulary:
    """Token-id bijection with a reserved unknown id 0.

    Built from the train partition only; tokens below ``min_frequency``
    fall through to the unknown id.
    """

    id_to_token: list[str]
    token_to_id: dict[str, int]
    min_frequency: int = 1

    @classmethod
    def build(cls, token_lists: Iterable[Sequence[str]], min_frequency: int = 1) -> "Vocabulary":
        counts: dict[str, int] = {}
        for tokens in token_lists:
            for token in tokens:
                counts[token] = counts.get(token, 0) + 1
        kept = sorted(
            (t for t, c in counts.items() if c >= min_frequency and t != UNK_TOKEN),
            key=lambda t: (-counts[t], t),
        )
        id_to_token = [UNK_TOKEN] + kept
        token_to_id = {t: i for i, t in enumerate(id_to_token)}
        return cls(id_to_token, token_to_id, min_frequency)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def ids(self, tokens: Sequence[str]) -> np.ndarray:
        """Sorted id multiset; bag semantics never use sequence order, and
        sorting makes every downstream reduction permutation-invariant."""
        if not tokens:
            return np.array([UNK_ID], dtype=np.int64)
        return np.sort(
            np.array([self.token_to_id.get(t, UNK_ID) for t in tokens], dtype=np.int64)
        )


@dataclass
class TrainConfig:
    dim: int = 128
    epochs: int = 10
    batch_size: int = 64
    lr: float = 0.1
    momentum: float = 0.0
    temperature: float = 0.07
    margin_offset: float = 0.0
    min_frequency: int = 2
    seed: int = 42

    def validate(self) -> None:
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("bad epochs/batch_size")


@dataclass
class RetrievalModel:
    """Trained dual-encoder parameters plus scoring configuration."""

    vocab_x: Vocabulary
    vocab_y: Vocabulary
    emb_x: np.ndarray
    emb_y: np.ndarray
    dim: int
    temperature: float
    margin_offset: float
    seed: int
    config: dict = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        """Write a byte-deterministic artifact: one JSON header line, then
        raw little-endian float64 matrices."""
        header = {
            "kind": MODEL_KIND,
            "format_version": MODEL_FORMAT_VERSION,
            "dim": self.dim,
            "temperature": self.temperature,
            "margin_offset": self.margin_offset,
            "seed": self.seed,
            "vocab_x": self.vocab_x.id_to_token,
            "vocab_y": self.vocab_y.id_to_token,
            "min_frequency_x": self.vocab_x.min_frequency,
            "min_frequency_y": self.vocab_y.min_frequency,
            "arrays": [["emb_x", list(self.emb_x.shape)], ["emb_y", list(self.emb_y.shape)]],
            "config": self.config,
        }
        blob = json.dumps(header, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as handle:
            handle.write(blob.encode("utf-8"))
            handle.write(b"\n")
            handle.write(np.ascontiguousarray(self.emb_x, dtype="<f8").tobytes())
            handle.write(np.ascontiguousarray(self.emb_y, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "RetrievalModel":
        with open(path, "rb") as handle:
            header_line = handle.readline()
            payload = handle.read()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("kind") != MODEL_KIND:
            raise ValueError(f"not a retrieval model file: {path}")
        if header.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version: {header.get('format_version')}")
        arrays = {}
        offset = 0
        for name, shape in header["arrays"]:
            size = int(np.prod(shape)) * 8
            arrays[name] = np.frombuffer(payload[offset : offset + size], dtype="<f8").reshape(shape).copy()
            offset += size
        vocab_x = Vocabulary(
            header["vocab_x"],
            {t: i for i, t in enumerate(header["vocab_x"])},
            header.get("min_frequency_x", 1),
        )
        vocab_y = Vocabulary(
            header["vocab_y"],
            {t: i for i, t in enumerate(header["vocab_y"])},
            header.get("min_frequency_y", 1),
        )
        return cls(
            vocab_x=vocab_x,
            vocab_y=vocab_y,
            emb_x=arrays["emb_x"],
            emb_y=arrays["emb_y"],
            dim=header["dim"],
            temperature=header["temperature"],
            margin_offset=header["margin_offset"],
            seed=header["seed"],
            config=header.get("config", {}),
        )


def xavier_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def embed_bag(tokens: Sequence[str], vocab: Vocabulary, emb: np.ndarray) -> np.ndarray:
    """L2-normalized mean of token embedding rows (unknown id for OOV)."""
    ids = vocab.ids(tokens)
    mean = emb[ids].mean(axis=0)
    norm = float(np.linalg.norm(mean))
    return mean / max(norm, _EPS)


def score(q_vec: np.ndarray, y_vec: np.ndarray, temperature: float, margin_offset: float = 0.0) -> float:
    """Similarity score; values above zero count as a match."""
    if not (np.all(np.isfinite(q_vec)) and np.all(np.isfinite(y_vec))):
        raise ValueError("non-finite input vector")
    return float(np.dot(q_vec, y_vec)) / temperature - margin_offset


def is_match(score_value: float) -> bool:
    return score_value > 0.0


def _bag_forward(emb: np.ndarray, id_lists: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Stack normalized bag embeddings; also return pre-normalization norms."""
    dim = emb.shape[1]
    out = np.empty((len(id_lists), dim))
    norms = np.empty(len(id_lists))
    for i, ids in enumerate(id_lists):
        mean = emb[ids].mean(axis=0)
        norm = max(float(np.linalg.norm(mean)), _EPS)
        out[i] = mean / norm
        norms[i] = norm
    return out, norms


def softmax_loss_and_grads(
    emb_x: np.ndarray,
    emb_y: np.ndarray,
    x_ids: list[np.ndarray],
    y_ids: list[np.ndarray],
    temperature: float,
    margin_offset: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """In-batch softmax contrastive loss and gradients w.r.t. both matrices.

    For a batch of B pairs the loss is the mean over rows of
    -log softmax(S)_ii with S_ij the score of query i against code j.
    """
    batch = len(x_ids)
    if batch == 0:
        raise TrainingError("empty batch")
    q_mat, q_norms = _bag_forward(emb_x, x_ids)
    v_mat, v_norms = _bag_forward(emb_y, y_ids)
    scores = q_mat @ v_mat.T / temperature - margin_offset
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = float(-log_probs.diagonal().mean())

    d_scores = probs.copy()
    d_scores[np.diag_indices(batch)] -= 1.0
    d_scores /= batch
    d_q = d_scores @ v_mat / temperature
    d_v = d_scores.T @ q_mat / temperature

    grad_x = np.zeros_like(emb_x)
    grad_y = np.zeros_like(emb_y)
    for i, ids in enumerate(x_ids):
        d_mean = (d_q[i] - np.dot(q_mat[i], d_q[i]) * q_mat[i]) / q_norms[i]
        np.add.at(grad_x, ids, d_mean / len(ids))
    for j, ids in enumerate(y_ids):
        d_mean = (d_v[j] - np.dot(v_mat[j], d_v[j]) * v_mat[j]) / v_norms[j]
        np.add.at(grad_y, ids, d_mean / len(ids))
    return loss, grad_x, grad_y


def _rank_of_diagonal(scores: np.ndarray, keys: list[tuple]) -> list[int]:
    """Engine-order rank of each row's own column (ties by ascending key)."""
    ranks = []
    for i in range(scores.shape[0]):
        row = scores[i]
        own = row[i]
        better = int(np.sum(row > own))
        tied_better = sum(
            1 for j in range(len(row)) if j != i and row[j] == own and keys[j] < keys[i]
        )
        ranks.append(1 + better + tied_better)
    return ranks


def train(
    train_pairs: Sequence[AugmentedRecord],
    valid_pairs: Sequence[AugmentedRecord] = (),
    config: TrainConfig | None = None,
) -> tuple[RetrievalModel, list[float]]:
    """Train the dual encoder; returns (model, per-epoch valid MRR trace).

    Identical seed, data, and config reproduce bit-identical parameters.
    """
    cfg = config or TrainConfig()
    cfg.validate()
    if not train_pairs:
        raise TrainingError("empty training set")

    vocab_x = Vocabulary.build((p.x_tokens for p in train_pairs), cfg.min_frequency)
    vocab_y = Vocabulary.build((p.y_tokens for p in train_pairs), cfg.min_frequency)

    rng = np.random.default_rng(cfg.seed)
    emb_x = xavier_uniform(rng, len(vocab_x), cfg.dim)
    emb_y = xavier_uniform(rng, len(vocab_y), cfg.dim)

    x_ids = [vocab_x.ids(p.x_tokens) for p in train_pairs]
    y_ids = [vocab_y.ids(p.y_tokens) for p in train_pairs]
    valid_x = [vocab_x.ids(p.x_tokens) for p in valid_pairs]
    valid_y = [vocab_y.ids(p.y_tokens) for p in valid_pairs]
    valid_keys = [p.source_key for p in valid_pairs]

    vel_x = np.zeros_like(emb_x)
    vel_y = np.zeros_like(emb_y)
    trace: list[float] = []
    n = len(train_pairs)

    for _epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grad_x, grad_y = softmax_loss_and_grads(
                emb_x,
                emb_y,
                [x_ids[i] for i in batch],
                [y_ids[i] for i in batch],
                cfg.temperature,
                cfg.margin_offset,
            )
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {_epoch}")
            if cfg.momentum > 0.0:
                vel_x = cfg.momentum * vel_x - cfg.lr * grad_x
                vel_y = cfg.momentum * vel_y - cfg.lr * grad_y
                emb_x += vel_x
                emb_y += vel_y
            else:
                emb_x -= cfg.lr * grad_x
                emb_y -= cfg.lr * grad_y
        if valid_pairs:
            q_mat, _ = _bag_forward(emb_x, valid_x)
            v_mat, _ = _bag_forward(emb_y, valid_y)
            scores = q_mat @ v_mat.T / cfg.temperature - cfg.margin_offset
            ranks = _rank_of_diagonal(scores, valid_keys)
            trace.append(float(np.mean([1.0 / r for r in ranks])))

    model = RetrievalModel(
        vocab_x=vocab_x,
        vocab_y=vocab_y,
        emb_x=emb_x,
        emb_y=emb_y,
        dim=cfg.dim,
        temperature=cfg.temperature,
        margin_offset=cfg.margin_offset,
        seed=cfg.seed,
        config=asdict(cfg),
    )
    return model, trace


@dataclass
class CodeIndex:
    """Embedded snippets ready for exhaustive ranking."""

    keys: list[tuple[str, str, str]]
    matrix: np.ndarray  # one unit row per entry
    display: list[str]

    def __len__(self) -> int:
        return len(self.keys)

    def entries(self):
        for i, key in enumerate(self.keys):
            yield (key, self.matrix[i], self.display[i])


def build_index(model: RetrievalModel, records: Iterable[AugmentedRecord]) -> CodeIndex:
    keys: list[tuple[str, str, str]] = []
    rows: list[np.ndarray] = []
    display: list[str] = []
    for record in records:
        keys.append(record.source_key)
        rows.append(embed_bag(record.y_tokens, model.vocab_y, model.emb_y))
        display.append(record.display or " ".join(record.y_tokens))
    matrix = np.vstack(rows) if rows else np.empty((0, model.dim))
    return CodeIndex(keys=keys, matrix=matrix, display=display)


def rank(
    model: RetrievalModel,
    index: CodeIndex,
    query_tokens: Sequence[str],
    k: int = 10,
) -> list[tuple[tuple[str, str, str], float]]:
    """Top-k entries by descending score, ties broken by ascending key."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        raise ValueError("empty index")
    q_vec = embed_bag(query_tokens, model.vocab_x, model.emb_x)
    scores = index.matrix @ q_vec / model.temperature - model.margin_offset
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.keys[i]))
    return [(index.keys[i], float(scores[i])) for i in order[: min(k, len(index))]]


class NbowScorer:
    """Pair scorer over a trained model, with embedding memoization."""

    def __init__(self, model: RetrievalModel):
        self.model = model
        self._x_cache: dict[tuple[str, ...], np.ndarray] = {}
        self._y_cache: dict[tuple[str, ...], np.ndarray] = {}

    def _embed_x(self, tokens: Sequence[str]) -> np.ndarray:
        key = tuple(tokens)
        vec = self._x_cache.get(key)
        if vec is None:
            vec = embed_bag(tokens, self.model.vocab_x, self.model.emb_x)
            self._x_cache[key] = vec
        return vec

    def _embed_y(self, tokens: Sequence[str]) -> np.ndarray:
        key = tuple(tokens)
        vec = self._y_cache.get(key)
        if vec is None:
            vec = embed_bag(tokens, self.model.vocab_y, self.model.emb_y)
            self._y_cache[key] = vec
        return vec

    def score_pair(self, x_tokens: Sequence[str], y_tokens: Sequence[str]) -> float:
        return score(
            self._embed_x(x_tokens),
            self._embed_y(y_tokens),
            self.model.temperature,
            self.model.margin_offset,
        )

    def score_many(self, x_tokens: Sequence[str], y_token_lists: Sequence[Sequence[str]]) -> list[float]:
        q_vec = self._embed_x(x_tokens)
        out = []
        for y_tokens in y_token_lists:
            v = self._embed_y(y_tokens)
            out.append(float(np.dot(q_vec, v)) / self.model.temperature - self.model.margin_offset)
        return out

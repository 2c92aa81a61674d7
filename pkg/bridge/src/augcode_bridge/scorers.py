"""Scorer backends selectable by model spec string.

    overlap            token-multiset overlap count (protocol smoke tests)
    tfidf:<corpus>     tf-idf cosine over the corpus file's code sides,
                       arithmetic pinned to match the host's native
                       baseline bit for bit
    hf:<model-dir>     mean-pooled transformer embeddings + cosine
                       (requires the optional transformers/torch extra)

The tf-idf weighting is w(t) = tf(t) * (ln((1+N)/(1+df(t))) + 1) with
document frequencies over the corpus code_tokens documents; norms and
dot products iterate tokens in sorted order so two independent
implementations of this recipe produce identical IEEE doubles.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from pathlib import Path


class ScorerLoadError(Exception):
    """The model spec cannot be loaded; serve must exit before handshake."""


class OverlapScorer:
    def score(self, x_tokens: list[str], y_tokens: list[str]) -> float:
        x = Counter(x_tokens)
        y = Counter(y_tokens)
        return float(sum((x & y).values()))


class TfidfScorer:
    def __init__(self, corpus_path: str):
        path = Path(corpus_path)
        if not path.exists():
            raise ScorerLoadError(f"corpus file not found: {corpus_path}")
        docs: list[list[str]] = []
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ScorerLoadError(f"{corpus_path}:{line_no}: bad JSON ({exc.msg})")
                tokens = obj.get("code_tokens")
                if not isinstance(tokens, list):
                    raise ScorerLoadError(f"{corpus_path}:{line_no}: missing code_tokens")
                docs.append([str(t) for t in tokens])
        self.n_docs = len(docs)
        df: dict[str, int] = {}
        for doc in docs:
            for token in set(doc):
                df[token] = df.get(token, 0) + 1
        self.idf = {t: math.log((1.0 + self.n_docs) / (1.0 + c)) + 1.0 for t, c in df.items()}
        self.default_idf = math.log(1.0 + self.n_docs) + 1.0
        self._cache: dict[tuple[str, ...], tuple[dict[str, float], float]] = {}

    def _weights(self, tokens: list[str]) -> tuple[dict[str, float], float]:
        key = tuple(tokens)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        tf: dict[str, int] = {}
        for token in tokens:
            tf[token] = tf.get(token, 0) + 1
        weights = {t: c * self.idf.get(t, self.default_idf) for t, c in tf.items()}
        norm_sq = 0.0
        for token in sorted(weights):
            norm_sq += weights[token] * weights[token]
        result = (weights, math.sqrt(norm_sq))
        self._cache[key] = result
        return result

    def score(self, x_tokens: list[str], y_tokens: list[str]) -> float:
        wx, nx = self._weights(x_tokens)
        wy, ny = self._weights(y_tokens)
        if nx == 0.0 or ny == 0.0:
            return 0.0
        dot = 0.0
        for token in sorted(wx.keys() & wy.keys()):
            dot += wx[token] * wy[token]
        return dot / (nx * ny)


class HfScorer:
    """Cosine of mean-pooled last-hidden-state embeddings of both sides."""

    def __init__(self, model_dir: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ScorerLoadError(f"transformers/torch not installed: {exc}")
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_dir)
            self.model = AutoModel.from_pretrained(model_dir)
        except Exception as exc:
            raise ScorerLoadError(f"cannot load checkpoint {model_dir!r}: {exc}")
        self.model.eval()
        self.torch = torch

    def _embed(self, tokens: list[str]):
        torch = self.torch
        text = " ".join(tokens) or "[UNK]"
        encoded = self.tokenizer(
            text, return_tensors="pt", truncation=True, max_length=256
        )
        with torch.no_grad():
            hidden = self.model(**encoded).last_hidden_state[0]
        vec = hidden.mean(dim=0)
        return vec / vec.norm().clamp_min(1e-12)

    def score(self, x_tokens: list[str], y_tokens: list[str]) -> float:
        return float(self._embed(x_tokens) @ self._embed(y_tokens))


def load_scorer(spec: str):
    if spec in ("overlap", "echo"):
        return OverlapScorer()
    if spec.startswith("tfidf:"):
        return TfidfScorer(spec.split(":", 1)[1])
    if spec.startswith("hf:"):
        return HfScorer(spec.split(":", 1)[1])
    raise ScorerLoadError(
        f"unknown model spec {spec!r}; expected overlap, tfidf:<corpus>, or hf:<dir>"
    )

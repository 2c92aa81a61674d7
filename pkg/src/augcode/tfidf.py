"""TF-IDF cosine baseline with the same scoring interface as the
trained engine.

Weights: w(t) = tf(t) * idf(t), idf(t) = ln((1 + N) / (1 + df(t))) + 1
with document frequencies taken over the code-side documents. All sums
iterate tokens in sorted order so scores are bit-reproducible across
independent implementations of the same formula.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .scenarios import AugmentedRecord


class TfidfScorer:
    """Deterministic tf-idf cosine scorer over a shared X/Y token space."""

    def __init__(self, documents: Iterable[Sequence[str]]):
        docs = [list(d) for d in documents]
        self.n_docs = len(docs)
        df: dict[str, int] = {}
        for doc in docs:
            for token in set(doc):
                df[token] = df.get(token, 0) + 1
        self.idf = {
            t: math.log((1.0 + self.n_docs) / (1.0 + c)) + 1.0 for t, c in df.items()
        }
        self.default_idf = math.log(1.0 + self.n_docs) + 1.0
        self._cache: dict[tuple[str, ...], tuple[dict[str, float], float]] = {}

    @classmethod
    def from_records(cls, records: Iterable[AugmentedRecord]) -> "TfidfScorer":
        return cls(r.y_tokens for r in records)

    def _weights(self, tokens: Sequence[str]) -> tuple[dict[str, float], float]:
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

    def score_pair(self, x_tokens: Sequence[str], y_tokens: Sequence[str]) -> float:
        wx, nx = self._weights(x_tokens)
        wy, ny = self._weights(y_tokens)
        if nx == 0.0 or ny == 0.0:
            return 0.0
        dot = 0.0
        for token in sorted(wx.keys() & wy.keys()):
            dot += wx[token] * wy[token]
        return dot / (nx * ny)

    def score_many(
        self, x_tokens: Sequence[str], y_token_lists: Sequence[Sequence[str]]
    ) -> list[float]:
        return [self.score_pair(x_tokens, y) for y in y_token_lists]


def tfidf_baseline(records: Iterable[AugmentedRecord]) -> TfidfScorer:
    """Non-learned baseline over a dataset's code sides."""
    return TfidfScorer.from_records(records)

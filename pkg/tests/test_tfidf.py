import math
from collections import Counter

from augcode.tfidf import TfidfScorer


def independent_cosine(docs, x_tokens, y_tokens):
    """Second implementation of the pinned weighting, vector style."""
    n = len(docs)
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    vocab = sorted(set(x_tokens) | set(y_tokens))

    def vec(tokens):
        tf = Counter(tokens)
        return [
            tf[t] * (math.log((1 + n) / (1 + df.get(t, 0))) + 1.0) if t in tf else 0.0
            for t in vocab
        ]

    vx, vy = vec(x_tokens), vec(y_tokens)
    dot = sum(a * b for a, b in zip(vx, vy))
    nx = math.sqrt(sum(a * a for a in vx))
    ny = math.sqrt(sum(b * b for b in vy))
    if nx == 0 or ny == 0:
        return 0.0
    return dot / (nx * ny)


def test_identical_multisets_score_one():
    scorer = TfidfScorer([["a", "b", "b"], ["c"]])
    assert abs(scorer.score_pair(["a", "b", "b"], ["b", "a", "b"]) - 1.0) < 1e-12


def test_disjoint_vocab_scores_zero():
    scorer = TfidfScorer([["a"], ["b"]])
    assert scorer.score_pair(["a"], ["b"]) == 0.0


def test_empty_side_scores_zero():
    scorer = TfidfScorer([["a"]])
    assert scorer.score_pair([], ["a"]) == 0.0


def test_rare_token_outweighs_common_one():
    docs = [["common", f"uniq{i}"] for i in range(50)]
    scorer = TfidfScorer(docs)
    shared_rare = scorer.score_pair(["uniq3", "x"], ["uniq3", "y"])
    shared_common = scorer.score_pair(["common", "x"], ["common", "y"])
    assert shared_rare > shared_common > 0


def test_twenty_doc_ranking_matches_independent_oracle():
    import random

    rng = random.Random(42)
    vocab = [f"w{i}" for i in range(12)]
    docs = [[rng.choice(vocab) for _ in range(rng.randint(2, 6))] for _ in range(20)]
    scorer = TfidfScorer(docs)
    query = ["w1", "w2", "w2", "w7"]

    ours = [scorer.score_pair(query, doc) for doc in docs]
    oracle = [independent_cosine(docs, query, doc) for doc in docs]
    for a, b in zip(ours, oracle):
        assert abs(a - b) < 1e-12
    rank_ours = sorted(range(20), key=lambda i: (-ours[i], i))
    rank_oracle = sorted(range(20), key=lambda i: (-oracle[i], i))
    assert rank_ours == rank_oracle


def test_score_many_matches_score_pair():
    scorer = TfidfScorer([["a", "b"], ["b", "c"], ["d"]])
    ys = [["a"], ["b", "c"], ["d", "d"]]
    assert scorer.score_many(["a", "b"], ys) == [
        scorer.score_pair(["a", "b"], y) for y in ys
    ]


def test_deterministic_across_instances():
    docs = [["a", "b"], ["b", "c", "c"], ["d"]]
    s1, s2 = TfidfScorer(docs), TfidfScorer(docs)
    value1 = s1.score_pair(["a", "c"], ["c", "b"])
    value2 = s2.score_pair(["a", "c"], ["c", "b"])
    assert value1 == value2

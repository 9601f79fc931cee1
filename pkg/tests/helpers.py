"""Shared builders for synthetic datasets, stores, and separable corpora."""

import numpy as np

from coherelint.corpus import COHERENT, INCOHERENT, CodeCommentPair
from coherelint.embedding import EncoderConfig, VectorStore


def make_pairs(n, project="Benchmark", prefix="p", start=0):
    """n alternating coherent/incoherent pairs with simple comment/code text."""
    pairs = []
    for k in range(n):
        label = COHERENT if k % 2 == 0 else INCOHERENT
        pairs.append(
            CodeCommentPair(
                id=f"{prefix}{start + k}",
                project=project,
                comment=f"returns the value {k}",
                code=f"return value{k};",
                label=label,
            )
        )
    return pairs


def random_store(tokens, dim, seed=0):
    """Store with float32-representable random vectors (binary round-trips exactly)."""
    rng = np.random.default_rng(seed)
    vectors = {
        t: rng.normal(size=dim).astype(np.float32).astype(np.float64)
        for t in tokens
    }
    return VectorStore(dim=dim, vectors=vectors)


def signal_matrices(n, T, D, seed=7, scale=0.3):
    """Separable (matrix, class) examples: one one-hot row decides the class."""
    rng = np.random.default_rng(seed)
    pos = np.zeros(D)
    pos[0] = 1.0
    neg = np.zeros(D)
    neg[1] = 1.0
    examples = []
    for k in range(n):
        m = rng.normal(scale=scale, size=(T, D))
        label = k % 2
        slot = int(rng.integers(T))
        m[slot] = pos if label else neg
        examples.append((m, label))
    return examples


SIGNAL_GOOD = "matches"
SIGNAL_BAD = "contradicts"
FILLERS = [f"word{i}" for i in range(6)]


def separable_token_corpus(n, seed=5):
    """Pairs whose label is decided by a single signal token in the comment.

    Every pair carries the same filler multiset in shuffled order, so the
    signal token is the only feature correlated with the label.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    for k in range(n):
        label = COHERENT if k % 2 == 0 else INCOHERENT
        signal = SIGNAL_GOOD if label == COHERENT else SIGNAL_BAD
        words = list(FILLERS)
        rng.shuffle(words)
        words.insert(int(rng.integers(len(words) + 1)), signal)
        pairs.append(
            CodeCommentPair(
                id=f"s{k}",
                project="Benchmark",
                comment=" ".join(words),
                code="",
                label=label,
            )
        )
    return pairs


def separable_token_store(dim=8, seed=3):
    return random_store(FILLERS + [SIGNAL_GOOD, SIGNAL_BAD], dim=dim, seed=seed)


def small_encoder(max_len=10, dim=8):
    return EncoderConfig(max_len=max_len, dim=dim)

"""Word-vector store, file formats, encoder, and a small skip-gram trainer.

The encoder turns a token sequence into a fixed max_len x dim matrix: one
vector row per token, prefix-truncated, zero-padded, with out-of-vocabulary
tokens mapped to zero rows and counted.
"""

import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .tokenizer import EmptyCorpus, TokenSequence, pair_tokens

FORMAT_TEXT = "text"
FORMAT_BINARY = "binary"


class VectorFileError(ValueError):
    pass


class BadHeader(VectorFileError):
    pass


class DimensionMismatch(VectorFileError):
    pass


class TruncatedFile(VectorFileError):
    pass


@dataclass
class VectorStore:
    dim: int
    vectors: dict
    oov_policy: str = "zero"
    duplicates: int = 0

    def lookup(self, token):
        """Vector for token, trying exact case then lowercase; None if absent."""
        v = self.vectors.get(token)
        if v is None:
            v = self.vectors.get(token.lower())
        return v

    def __contains__(self, token):
        return token in self.vectors or token.lower() in self.vectors

    def __len__(self):
        return len(self.vectors)


@dataclass
class EncoderConfig:
    max_len: int = 50
    dim: int = 300


@dataclass
class EmbeddedPair:
    matrix: np.ndarray
    true_len: int
    oov_count: int
    source_id: str


def _parse_header(line, path):
    parts = line.split()
    if len(parts) != 2:
        raise BadHeader(f"{path}: header must be '<vocab_size> <dim>', got {line!r}")
    try:
        vocab_size, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise BadHeader(f"{path}: non-integer header fields in {line!r}") from None
    if vocab_size < 0 or dim < 1:
        raise BadHeader(f"{path}: bad header values {vocab_size} {dim}")
    return vocab_size, dim


def load_word_vectors(path, fmt=FORMAT_TEXT):
    if fmt == FORMAT_TEXT:
        return _load_text(path)
    if fmt == FORMAT_BINARY:
        return _load_binary(path)
    raise ValueError(f"unknown vector format {fmt!r}")


def save_word_vectors(store, path, fmt=FORMAT_TEXT):
    if fmt == FORMAT_TEXT:
        _save_text(store, path)
    elif fmt == FORMAT_BINARY:
        _save_binary(store, path)
    else:
        raise ValueError(f"unknown vector format {fmt!r}")


def _load_text(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise BadHeader(f"{path}: empty header line")
        vocab_size, dim = _parse_header(header, path)
        vectors = {}
        duplicates = 0
        for k in range(vocab_size):
            line = fh.readline()
            if not line:
                raise TruncatedFile(
                    f"{path}: declared {vocab_size} words, file ends after {k}"
                )
            fields = line.rstrip("\n").split(" ")
            word = fields[0]
            values = fields[1:]
            if len(values) != dim:
                raise DimensionMismatch(
                    f"{path} line {k + 2}: expected {dim} values, got {len(values)}"
                )
            if word in vectors:
                duplicates += 1
            vectors[word] = np.array([float(v) for v in values], dtype=np.float64)
    return VectorStore(dim=dim, vectors=vectors, duplicates=duplicates)


def _save_text(store, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(store.vectors)} {store.dim}\n")
        for word, vec in store.vectors.items():
            fh.write(word + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")


def _load_binary(path):
    with open(path, "rb") as fh:
        header = fh.readline()
        if not header:
            raise BadHeader(f"{path}: empty file")
        vocab_size, dim = _parse_header(header.decode("ascii", "replace"), path)
        width = 4 * dim
        vectors = {}
        duplicates = 0
        for k in range(vocab_size):
            word_bytes = bytearray()
            while True:
                ch = fh.read(1)
                if not ch:
                    raise TruncatedFile(
                        f"{path}: declared {vocab_size} words, file ends after {k}"
                    )
                if ch == b" ":
                    break
                word_bytes.extend(ch)
            raw = fh.read(width)
            if len(raw) < width:
                raise TruncatedFile(
                    f"{path}: vector {k + 1} has {len(raw)} of {width} bytes"
                )
            word = word_bytes.decode("utf-8")
            if word in vectors:
                duplicates += 1
            vectors[word] = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return VectorStore(dim=dim, vectors=vectors, duplicates=duplicates)


def _save_binary(store, path):
    with open(path, "wb") as fh:
        fh.write(f"{len(store.vectors)} {store.dim}\n".encode("ascii"))
        for word, vec in store.vectors.items():
            fh.write(word.encode("utf-8") + b" ")
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def encode_pair(tokens, store, cfg):
    """Fixed-shape matrix for one token sequence.

    Row t holds the vector of token t for the first max_len tokens; the rest
    of the matrix stays zero. OOV tokens leave a zero row and bump oov_count.
    """
    if cfg.dim != store.dim:
        raise ValueError(f"encoder dim {cfg.dim} != store dim {store.dim}")
    if isinstance(tokens, TokenSequence):
        toks, source_id = tokens.tokens, tokens.source_id
    else:
        toks, source_id = list(tokens), ""
    kept = toks[:cfg.max_len]
    matrix = np.zeros((cfg.max_len, cfg.dim), dtype=np.float64)
    oov = 0
    for t, tok in enumerate(kept):
        vec = store.lookup(tok)
        if vec is None:
            oov += 1
        else:
            matrix[t] = vec
    return EmbeddedPair(
        matrix=matrix, true_len=len(kept), oov_count=oov, source_id=source_id
    )


def encode_dataset(pairs, store, cfg, split_identifiers=False):
    """Encode every pair in order; returns (encoded list, elapsed seconds)."""
    start = time.perf_counter()
    encoded = [
        encode_pair(pair_tokens(p, split_identifiers), store, cfg) for p in pairs
    ]
    elapsed = time.perf_counter() - start
    return encoded, elapsed


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def train_skipgram(
    pairs,
    dim=100,
    window=5,
    negatives=5,
    epochs=5,
    seed=0,
    min_count=1,
    lr=0.025,
):
    """Skip-gram with negative sampling over the pair token streams.

    Desk-scale stand-in for a pretrained vector file: deterministic for a
    given seed, linear learning-rate decay, unigram^0.75 negative sampling.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    sentences = [pair_tokens(p).tokens for p in pairs]
    counts = Counter()
    for sent in sentences:
        counts.update(sent)
    vocab = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    if not vocab:
        raise EmptyCorpus("no tokens with count >= min_count")
    index = {t: i for i, t in enumerate(vocab)}

    ids = [[index[t] for t in sent if t in index] for sent in sentences]
    ids = [sent for sent in ids if len(sent) >= 2]
    if not ids:
        raise EmptyCorpus("no sentence has two in-vocabulary tokens")

    freqs = np.array([counts[t] for t in vocab], dtype=np.float64) ** 0.75
    noise_cdf = np.cumsum(freqs / freqs.sum())

    rng = np.random.default_rng(seed)
    n_vocab = len(vocab)
    W = (rng.random((n_vocab, dim)) - 0.5) / dim
    C = np.zeros((n_vocab, dim))

    total = 0
    for sent in ids:
        for i in range(len(sent)):
            total += len(range(max(0, i - window), min(len(sent), i + window + 1))) - 1
    total *= epochs

    step = 0
    for _ in range(epochs):
        for sent in ids:
            for i, center in enumerate(sent):
                lo = max(0, i - window)
                hi = min(len(sent), i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    alpha = lr * max(1.0 - step / total, 1e-4)
                    step += 1
                    ctx = sent[j]
                    w = W[center]
                    # positive pair pulls center and context together
                    g = (1.0 - _sigmoid(w @ C[ctx])) * alpha
                    dw = g * C[ctx]
                    C[ctx] += g * w
                    # negatives push sampled words away
                    neg = np.searchsorted(noise_cdf, rng.random(negatives))
                    for n in neg:
                        gn = -_sigmoid(w @ C[n]) * alpha
                        dw += gn * C[n]
                        C[n] += gn * w
                    W[center] = w + dw
    vectors = {t: W[index[t]].copy() for t in vocab}
    return VectorStore(dim=dim, vectors=vectors)

import numpy as np
import pytest

from coherelint import embedding
from coherelint.corpus import COHERENT, CodeCommentPair
from coherelint.embedding import (
    BadHeader,
    DimensionMismatch,
    EncoderConfig,
    TruncatedFile,
    VectorStore,
    encode_dataset,
    encode_pair,
    load_word_vectors,
    save_word_vectors,
    train_skipgram,
)
from coherelint.tokenizer import EmptyCorpus, TokenSequence

from helpers import make_pairs, random_store


def test_text_parse_basic(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("2 3\nfoo 1 0 0\nbar 0 1 0\n")
    store = load_word_vectors(path, "text")
    assert len(store) == 2 and store.dim == 3
    assert np.array_equal(store.lookup("foo"), [1.0, 0.0, 0.0])
    assert store.lookup("missing") is None


def test_text_dimension_mismatch_names_line(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("2 3\nfoo 1 0 0\nbar 0 1\n")
    with pytest.raises(DimensionMismatch, match="line 3"):
        load_word_vectors(path, "text")


def test_bad_header(tmp_path):
    for content in ("not a header\n", "3\n", "a b\n", ""):
        path = tmp_path / "v.txt"
        path.write_text(content)
        with pytest.raises(BadHeader):
            load_word_vectors(path, "text")


def test_text_truncated(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("3 2\nfoo 1 0\n")
    with pytest.raises(TruncatedFile):
        load_word_vectors(path, "text")


def test_binary_truncated(tmp_path):
    store = random_store(["alpha", "beta"], dim=4, seed=1)
    path = tmp_path / "v.bin"
    save_word_vectors(store, path, "binary")
    data = path.read_bytes()
    path.write_bytes(data[:-6])
    with pytest.raises(TruncatedFile):
        load_word_vectors(path, "binary")


def test_duplicate_word_last_wins(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("3 2\nfoo 1 0\nbar 0 1\nfoo 5 5\n")
    store = load_word_vectors(path, "text")
    assert store.duplicates == 1
    assert np.array_equal(store.lookup("foo"), [5.0, 5.0])


def test_binary_round_trip_bit_exact(tmp_path):
    store = random_store(["open", "close", "file", "x1"], dim=6, seed=2)
    path = tmp_path / "v.bin"
    save_word_vectors(store, path, "binary")
    again = load_word_vectors(path, "binary")
    assert again.dim == store.dim
    assert set(again.vectors) == set(store.vectors)
    for word, vec in store.vectors.items():
        assert np.array_equal(again.vectors[word], vec)


def test_text_round_trip_six_decimals(tmp_path):
    store = random_store(["a", "b", "c"], dim=5, seed=3)
    path = tmp_path / "v.txt"
    save_word_vectors(store, path, "text")
    again = load_word_vectors(path, "text")
    for word, vec in store.vectors.items():
        assert np.allclose(again.vectors[word], vec, atol=1e-6, rtol=0)


def test_encode_pads_and_counts():
    store = random_store(["a", "b", "c"], dim=4, seed=4)
    cfg = EncoderConfig(max_len=50, dim=4)
    out = encode_pair(TokenSequence(["a", "b", "c"], "id1"), store, cfg)
    assert out.matrix.shape == (50, 4)
    assert out.true_len == 3 and out.oov_count == 0
    assert out.source_id == "id1"
    for t, tok in enumerate(["a", "b", "c"]):
        assert np.array_equal(out.matrix[t], store.vectors[tok])
    assert not out.matrix[3:].any()


def test_encode_prefix_truncation():
    store = random_store([f"t{i}" for i in range(120)], dim=3, seed=5)
    cfg = EncoderConfig(max_len=50, dim=3)
    tokens = [f"t{i}" for i in range(120)]
    out = encode_pair(tokens, store, cfg)
    assert out.true_len == 50
    for t in range(50):
        assert np.array_equal(out.matrix[t], store.vectors[tokens[t]])
    # anything past the prefix leaves no trace
    flat = out.matrix.ravel()
    for i in range(50, 120):
        assert store.vectors[tokens[i]][0] not in flat[150:]


def test_encode_oov_only():
    store = random_store(["known"], dim=4, seed=6)
    cfg = EncoderConfig(max_len=10, dim=4)
    out = encode_pair(["unseen"], store, cfg)
    assert out.oov_count == 1 and out.true_len == 1
    assert not out.matrix.any()


def test_encode_lowercase_fallback():
    store = VectorStore(dim=2, vectors={"inventory": np.array([1.0, 2.0])})
    cfg = EncoderConfig(max_len=5, dim=2)
    out = encode_pair(["Inventory"], store, cfg)
    assert out.oov_count == 0
    assert np.array_equal(out.matrix[0], [1.0, 2.0])


def test_encode_dim_mismatch_rejected():
    store = random_store(["a"], dim=3)
    with pytest.raises(ValueError):
        encode_pair(["a"], store, EncoderConfig(max_len=5, dim=4))


def reference_encode(tokens, store, max_len, dim):
    """Slow row-by-row encoder used as the independent oracle."""
    rows = []
    for tok in tokens[:max_len]:
        vec = store.vectors.get(tok)
        if vec is None:
            vec = store.vectors.get(tok.lower())
        rows.append(np.zeros(dim) if vec is None else np.asarray(vec, float))
    while len(rows) < max_len:
        rows.append(np.zeros(dim))
    return np.stack(rows)


def test_encoder_invariants_against_reference():
    rng = np.random.default_rng(8)
    vocab = [f"w{i}" for i in range(40)] + ["Case", "case"]
    store = random_store(vocab, dim=6, seed=9)
    cfg = EncoderConfig(max_len=12, dim=6)
    for _ in range(200):
        n = int(rng.integers(0, 30))
        tokens = [
            vocab[int(rng.integers(len(vocab)))] if rng.random() < 0.8 else "OOV"
            for _ in range(n)
        ]
        out = encode_pair(tokens, store, cfg)
        assert out.matrix.shape == (12, 6)
        assert out.true_len == min(n, 12)
        assert not out.matrix[out.true_len:].any()
        assert np.array_equal(out.matrix, reference_encode(tokens, store, 12, 6))


def test_encode_dataset_order_and_timing():
    pairs = make_pairs(25)
    store = random_store(["returns", "the", "value", "return"], dim=4, seed=10)
    cfg = EncoderConfig(max_len=8, dim=4)
    encoded, seconds = encode_dataset(pairs, store, cfg)
    assert len(encoded) == 25
    assert [e.source_id for e in encoded] == [p.id for p in pairs]
    assert seconds > 0


def test_skipgram_vocab_and_dim():
    pairs = make_pairs(8)
    store = train_skipgram(pairs, dim=16, epochs=1, seed=0, min_count=1)
    from coherelint.tokenizer import pair_tokens

    distinct = {t for p in pairs for t in pair_tokens(p).tokens}
    assert len(store) == len(distinct)
    for vec in store.vectors.values():
        assert vec.shape == (16,)


def test_skipgram_min_count_filters():
    pairs = [
        CodeCommentPair("a", "X", "alpha alpha beta", "", COHERENT),
        CodeCommentPair("b", "X", "alpha gamma", "", COHERENT),
    ]
    store = train_skipgram(pairs, dim=4, epochs=1, seed=0, min_count=2)
    assert set(store.vectors) == {"alpha"} or "alpha" in store.vectors
    assert "beta" not in store.vectors and "gamma" not in store.vectors


def test_skipgram_deterministic():
    pairs = make_pairs(10)
    a = train_skipgram(pairs, dim=8, epochs=2, seed=5)
    b = train_skipgram(pairs, dim=8, epochs=2, seed=5)
    for word in a.vectors:
        assert np.array_equal(a.vectors[word], b.vectors[word])


def test_skipgram_empty_corpus():
    with pytest.raises(EmptyCorpus):
        train_skipgram([], dim=4)
    lonely = [CodeCommentPair("a", "X", "word", "", COHERENT)]
    with pytest.raises(EmptyCorpus):
        train_skipgram(lonely, dim=4)


def _cosine(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def test_skipgram_cooccurrence_beats_random_pairs():
    pairs = []
    pid = 0
    for k in range(60):
        verb = "open" if k % 2 == 0 else "close"
        pairs.append(
            CodeCommentPair(str(pid), "X", f"{verb} file", "handle ready now", COHERENT)
        )
        pid += 1
    tok = 0
    for _ in range(40):
        words = " ".join(f"tok{tok + i}" for i in range(6))
        tok += 6
        pairs.append(CodeCommentPair(str(pid), "X", words, "", COHERENT))
        pid += 1
    store = train_skipgram(
        pairs, dim=16, window=2, negatives=5, epochs=10, seed=11, lr=0.01
    )
    target = _cosine(store.vectors["open"], store.vectors["file"])
    words = sorted(store.vectors)
    rng = np.random.default_rng(3)
    random_mean = np.mean([
        _cosine(store.vectors[words[i]], store.vectors[words[j]])
        for i, j in (rng.choice(len(words), size=2, replace=False) for _ in range(100))
    ])
    assert target > random_mean

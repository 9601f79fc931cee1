"""TF-IDF bag-of-words encoding plus a linear SVM trained with Pegasos-style
stochastic subgradient descent on the hinge loss.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import corpus
from .neurnet import read_model_file, write_model_file
from .tokenizer import EmptyCorpus, pair_tokens


class SingleClassTrainingSet(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass
class TfidfModel:
    vocabulary: dict
    idf: np.ndarray
    use_idf: bool = True


@dataclass
class LinearSvm:
    w: np.ndarray
    b: float
    lam: float


def tfidf_fit(train_pairs, use_idf=True, split_identifiers=False):
    """Vocabulary and smoothed idf weights from the training pairs.

    idf_t = ln((1+N)/(1+df_t)) + 1, so a term present in every document
    still gets weight 1. Set use_idf=False for raw bag-of-words counts.
    """
    if not train_pairs:
        raise EmptyCorpus("tfidf_fit needs a nonempty training corpus")
    docs = [pair_tokens(p, split_identifiers).tokens for p in train_pairs]
    vocab = sorted({t for doc in docs for t in doc})
    vocabulary = {t: i for i, t in enumerate(vocab)}
    df = np.zeros(len(vocab))
    for doc in docs:
        for t in set(doc):
            df[vocabulary[t]] += 1
    n = len(docs)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, use_idf=use_idf)


def _vectorize(model, tokens):
    counts = {}
    for t in tokens:
        col = model.vocabulary.get(t)
        if col is not None:
            counts[col] = counts.get(col, 0.0) + 1.0
    if not counts:
        return sparse.csr_matrix((1, len(model.vocabulary)))
    cols = np.fromiter(counts.keys(), dtype=np.intp, count=len(counts))
    vals = np.fromiter(counts.values(), dtype=np.float64, count=len(counts))
    if model.use_idf:
        vals = vals * model.idf[cols]
    norm = np.sqrt(np.sum(vals * vals))
    if norm > 0:
        vals = vals / norm
    return sparse.csr_matrix(
        (vals, (np.zeros(len(cols), dtype=np.intp), cols)),
        shape=(1, len(model.vocabulary)),
    )


def tfidf_transform(model, pair, split_identifiers=False):
    """L2-normalized sparse row vector (1, V); unseen tokens are dropped."""
    if isinstance(pair, corpus.CodeCommentPair):
        tokens = pair_tokens(pair, split_identifiers).tokens
    else:
        tokens = pair
    return _vectorize(model, tokens)


def tfidf_transform_all(model, pairs, split_identifiers=False):
    rows = [tfidf_transform(model, p, split_identifiers) for p in pairs]
    return sparse.vstack(rows, format="csr")


def hinge_objective(svm, X, y):
    """lam/2 ||w||^2 + mean hinge loss over (X, y) with y in {-1, +1}."""
    margins = np.asarray(X @ svm.w).ravel() + svm.b
    hinge = np.maximum(0.0, 1.0 - y * margins)
    return 0.5 * svm.lam * float(svm.w @ svm.w) + float(hinge.mean())


def _label_signs(labels):
    signs = np.empty(len(labels))
    for i, lab in enumerate(labels):
        signs[i] = 1.0 if lab == corpus.COHERENT else -1.0
    return signs


def svm_train(X, labels, lam=1e-4, epochs=50, seed=0):
    """Pegasos subgradient descent on lam/2 ||w||^2 + mean hinge loss.

    Step size 1/(lam * t); the bias is updated by the plain subgradient and
    left out of the regularizer. Returns the model and the objective value
    recorded after each epoch.
    """
    X = sparse.csr_matrix(X)
    y = _label_signs(labels)
    if len(set(y.tolist())) < 2:
        raise SingleClassTrainingSet("training set needs both classes")
    if X.shape[0] != len(y):
        raise DimensionMismatch(f"{X.shape[0]} rows vs {len(y)} labels")
    n, V = X.shape
    w = np.zeros(V)
    b = 0.0
    rng = np.random.default_rng(seed)
    t = 0
    objectives = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            row = X.getrow(i)
            margin = y[i] * ((row @ w).item() + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w[row.indices] += eta * y[i] * row.data
                b += eta * y[i]
        objectives.append(hinge_objective(LinearSvm(w=w, b=b, lam=lam), X, y))
    return LinearSvm(w=w.copy(), b=b, lam=lam), objectives


def svm_predict(svm, vec):
    """(label, margin) for one vector; coherent iff w.x + b >= 0."""
    if sparse.issparse(vec):
        if vec.shape[1] != svm.w.shape[0]:
            raise DimensionMismatch(
                f"vector has {vec.shape[1]} features, model has {svm.w.shape[0]}"
            )
        margin = (vec @ svm.w).item() + svm.b
    else:
        vec = np.asarray(vec, dtype=np.float64).ravel()
        if vec.shape[0] != svm.w.shape[0]:
            raise DimensionMismatch(
                f"vector has {vec.shape[0]} features, model has {svm.w.shape[0]}"
            )
        margin = float(vec @ svm.w) + svm.b
    label = corpus.COHERENT if margin >= 0.0 else corpus.INCOHERENT
    return label, margin


def save_svm(path, svm, tfidf):
    """Store the SVM and its vectorizer in the shared model container."""
    vocab = [None] * len(tfidf.vocabulary)
    for token, col in tfidf.vocabulary.items():
        vocab[col] = token
    config = {
        "kind": "svm",
        "lambda": svm.lam,
        "use_idf": tfidf.use_idf,
        "vocabulary": vocab,
    }
    arrays = [
        ("w", svm.w),
        ("idf", tfidf.idf),
        ("b", np.array([svm.b])),
    ]
    write_model_file(path, config, arrays)


def load_svm(path):
    config, arrays = read_model_file(path)
    if config.get("kind") != "svm":
        raise ValueError(f"{path}: kind '{config.get('kind')}' is not an SVM")
    svm = LinearSvm(w=arrays["w"], b=float(arrays["b"][0]), lam=config["lambda"])
    vocabulary = {token: i for i, token in enumerate(config["vocabulary"])}
    tfidf = TfidfModel(
        vocabulary=vocabulary, idf=arrays["idf"], use_idf=config["use_idf"]
    )
    return svm, tfidf

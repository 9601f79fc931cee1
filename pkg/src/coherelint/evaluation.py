"""Classification metrics, the per-project results table, and the embedding
time benchmark.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import corpus
from .baseline import LinearSvm, svm_predict, tfidf_fit, tfidf_transform_all
from .embedding import EmbeddedPair, encode_dataset
from .neurnet import RecurrentModel, forward_batch

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")
REPORT_ROWS = corpus.KNOWN_PROJECTS + ("All",)


class LengthMismatch(ValueError):
    pass


@dataclass
class MetricsReport:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    positive_class: str
    degenerate_flags: frozenset = field(default_factory=frozenset)


@dataclass
class TimingRecord:
    dataset: str
    method: str
    wall_minutes: float


def compute_metrics(predictions, labels, positive_class=corpus.COHERENT):
    """Confusion counts and accuracy/precision/recall/f1.

    Precision or recall with a zero denominator comes back as 0.0 together
    with a flag naming the degenerate case.
    """
    if len(predictions) != len(labels):
        raise LengthMismatch(
            f"{len(predictions)} predictions vs {len(labels)} labels"
        )
    if not labels:
        raise LengthMismatch("need at least one prediction/label pair")
    tp = fp = fn = tn = 0
    for pred, lab in zip(predictions, labels):
        if pred == positive_class:
            if lab == positive_class:
                tp += 1
            else:
                fp += 1
        else:
            if lab == positive_class:
                fn += 1
            else:
                tn += 1
    flags = set()
    accuracy = (tp + tn) / (tp + fp + fn + tn)
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.add("NoPositivePredictions")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.add("NoPositiveLabels")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return MetricsReport(
        tp=tp, fp=fp, fn=fn, tn=tn,
        accuracy=accuracy, precision=precision, recall=recall, f1=f1,
        positive_class=positive_class, degenerate_flags=frozenset(flags),
    )


def predict_labels(model, inputs, batch_size=256):
    """Label strings for a trained model over encoded inputs."""
    if isinstance(model, RecurrentModel):
        preds = []
        for start in range(0, len(inputs), batch_size):
            chunk = inputs[start:start + batch_size]
            X = np.stack([
                x.matrix if isinstance(x, EmbeddedPair) else np.asarray(x)
                for x in chunk
            ])
            _, probs = forward_batch(model, X)
            preds.extend(corpus.LABELS[i] for i in probs.argmax(axis=1))
        return preds
    if isinstance(model, LinearSvm):
        if sparse.issparse(inputs):
            rows = [inputs.getrow(i) for i in range(inputs.shape[0])]
        else:
            rows = inputs
        return [svm_predict(model, row)[0] for row in rows]
    raise TypeError(f"cannot predict with {type(model).__name__}")


def evaluate(model, test_set, positive_class=corpus.COHERENT):
    """Metrics of a trained model on (encoded input, label) pairs."""
    inputs = [x for x, _ in test_set]
    labels = [lab for _, lab in test_set]
    if isinstance(model, LinearSvm) and inputs:
        inputs = sparse.vstack(inputs, format="csr")
    predictions = predict_labels(model, inputs)
    return compute_metrics(predictions, labels, positive_class)


def per_project_report(reports, methods, positive_class=corpus.COHERENT):
    """Aligned text table and CSV for {(row, method): MetricsReport}.

    Rows are the five known projects plus All, with any extra project names
    appended; cells without a report render as a dash placeholder.
    """
    extra = sorted({row for row, _ in reports} - set(REPORT_ROWS))
    rows = [r for r in REPORT_ROWS if r != "All"] + extra + ["All"]

    lines = [f"positive class: {positive_class}"]
    name_w = max(len(r) for r in rows) + 2
    for metric in METRIC_NAMES:
        lines.append("")
        lines.append(metric.capitalize())
        header = " " * name_w + "".join(f"{m:>10}" for m in methods)
        lines.append(header)
        for row in rows:
            cells = []
            for method in methods:
                rep = reports.get((row, method))
                cells.append(
                    f"{getattr(rep, metric):>10.3f}" if rep else f"{'—':>10}"
                )
            lines.append(f"{row:<{name_w}}" + "".join(cells))
    text = "\n".join(lines) + "\n"

    csv_lines = ["row,method,metric,value"]
    for row in rows:
        for method in methods:
            rep = reports.get((row, method))
            if rep is None:
                continue
            for metric in METRIC_NAMES:
                csv_lines.append(f"{row},{method},{metric},{getattr(rep, metric)!r}")
    return text, "\n".join(csv_lines) + "\n"


def benchmark_embedding(datasets, methods, store=None, cfg=None):
    """Wall-clock embedding time per (dataset, method).

    `datasets` is a list of (name, pairs). Method "word_vectors" times
    encode_dataset against the store; "tfidf" times fit plus transform.
    """
    records = []
    for name, pairs in datasets:
        for method in methods:
            if method == "word_vectors":
                if store is None or cfg is None:
                    raise ValueError("word_vectors timing needs store and cfg")
                _, seconds = encode_dataset(pairs, store, cfg)
            elif method == "tfidf":
                start = time.perf_counter()
                model = tfidf_fit(pairs)
                tfidf_transform_all(model, pairs)
                seconds = time.perf_counter() - start
            else:
                raise ValueError(f"unknown embedding method {method!r}")
            records.append(
                TimingRecord(dataset=name, method=method, wall_minutes=seconds / 60.0)
            )
    return records


def format_timings(records):
    """Aligned text and CSV for embedding-time records."""
    lines = [f"{'dataset':<16}{'method':<16}{'minutes':>12}"]
    csv_lines = ["dataset,method,wall_minutes"]
    for r in records:
        lines.append(f"{r.dataset:<16}{r.method:<16}{r.wall_minutes:>12.5f}")
        csv_lines.append(f"{r.dataset},{r.method},{r.wall_minutes!r}")
    return "\n".join(lines) + "\n", "\n".join(csv_lines) + "\n"

"""Labeled code-comment dataset: CSV loading, validation, train/test splitting."""

import csv
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

COHERENT = "coherent"
INCOHERENT = "incoherent"
# Index 1 is the positive class throughout the package.
LABELS = (INCOHERENT, COHERENT)

KNOWN_PROJECTS = (
    "Benchmark",
    "CoffeeMaker",
    "JFreeChart060",
    "JFreeChart071",
    "JHotDraw741",
)

CSV_COLUMNS = ("id", "project", "comment", "code", "label")


class CorpusError(ValueError):
    """Base class for dataset validation failures."""


class MissingColumn(CorpusError):
    pass


class BadLabel(CorpusError):
    pass


class DuplicateId(CorpusError):
    pass


class EmptyFile(CorpusError):
    pass


class EmptyPair(CorpusError):
    pass


class TooFewPairs(CorpusError):
    pass


@dataclass(frozen=True)
class CodeCommentPair:
    id: str
    project: str
    comment: str
    code: str
    label: str


@dataclass
class DatasetSplit:
    train: list
    test: list
    seed: int
    ratio: float


def label_index(label):
    """Class index used by the numeric models (incoherent=0, coherent=1)."""
    return LABELS.index(label)


def load_csv(path):
    """Read labeled pairs from a CSV file.

    Expects a header with columns id,project,comment,code,label (any order,
    case-insensitive). Fields may contain commas, quotes, and newlines via
    standard double-quote escaping. Row order is preserved.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: file is empty")
        names = [h.strip().lower() for h in header]
        for col in CSV_COLUMNS:
            if col not in names:
                raise MissingColumn(f"{path}: header is missing column '{col}'")
        idx = {col: names.index(col) for col in CSV_COLUMNS}

        pairs = []
        seen = set()
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) < len(names):
                raise MissingColumn(
                    f"{path} row ending at line {line}: expected "
                    f"{len(names)} fields, got {len(row)}"
                )
            raw_label = row[idx["label"]]
            label = raw_label.strip().lower()
            if label not in LABELS:
                raise BadLabel(
                    f"{path} row ending at line {line}: label '{raw_label}' "
                    f"is not coherent/incoherent"
                )
            pid = row[idx["id"]]
            if pid in seen:
                raise DuplicateId(
                    f"{path} row ending at line {line}: duplicate id '{pid}'"
                )
            seen.add(pid)
            comment = row[idx["comment"]]
            code = row[idx["code"]]
            if not comment.strip() and not code.strip():
                raise EmptyPair(
                    f"{path} row ending at line {line}: comment and code both empty"
                )
            pairs.append(
                CodeCommentPair(pid, row[idx["project"]], comment, code, label)
            )
        if not pairs:
            raise EmptyFile(f"{path}: no data rows")
    return pairs


def write_csv(pairs, path):
    """Write pairs in the canonical column order; quoting only where needed."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for p in pairs:
            writer.writerow([p.id, p.project, p.comment, p.code, p.label])


def count_by_project(pairs):
    counts = defaultdict(int)
    for p in pairs:
        counts[p.project] += 1
    return dict(counts)


def split(pairs, ratio, seed, stratify=True):
    """Deterministic train/test partition.

    With stratify=True the partition is done per (project, label) stratum so
    small projects keep both labels in train whenever they can. Train size
    per stratum is floor(ratio * stratum size); the remainder goes to test.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0,1), got {ratio}")
    if len(pairs) < 2:
        raise TooFewPairs(f"need at least 2 pairs, got {len(pairs)}")

    if stratify:
        strata = defaultdict(list)
        for i, p in enumerate(pairs):
            strata[(p.project, p.label)].append(i)
    else:
        strata = {None: list(range(len(pairs)))}

    rng = np.random.default_rng(seed)
    train_ix, test_ix = [], []
    for key in sorted(strata, key=str):
        members = strata[key]
        perm = rng.permutation(len(members))
        k = int(np.floor(ratio * len(members)))
        chosen = {members[j] for j in perm[:k]}
        train_ix.extend(m for m in members if m in chosen)
        test_ix.extend(m for m in members if m not in chosen)

    if not train_ix or not test_ix:
        raise TooFewPairs(
            f"split of {len(pairs)} pairs at ratio {ratio} leaves one side empty"
        )
    train_ix.sort()
    test_ix.sort()
    return DatasetSplit(
        train=[pairs[i] for i in train_ix],
        test=[pairs[i] for i in test_ix],
        seed=seed,
        ratio=ratio,
    )

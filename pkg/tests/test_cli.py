import csv
import dataclasses
import xml.etree.ElementTree as ET

import pytest

from coherelint import corpus
from coherelint.cli import main
from coherelint.embedding import load_word_vectors, save_word_vectors
from coherelint.neurnet import load_model

from helpers import (
    FILLERS,
    SIGNAL_BAD,
    SIGNAL_GOOD,
    random_store,
    separable_token_corpus,
)


def make_dataset(path, n=40):
    pairs = separable_token_corpus(n)
    # move half to a second project so reports have two project rows
    pairs = [
        dataclasses.replace(p, project="CoffeeMaker") if k >= n // 2 else p
        for k, p in enumerate(pairs)
    ]
    corpus.write_csv(pairs, path)
    return pairs


def make_vectors(path):
    store = random_store(FILLERS + [SIGNAL_GOOD, SIGNAL_BAD], dim=8, seed=21)
    save_word_vectors(store, path, "text")
    return store


def write_config(path, data, vectors, extra=""):
    path.write_text(
        f"paths.data = {data}\n"
        f"paths.vectors = {vectors}\n"
        "paths.vectors_format = text\n"
        "encoder.max_len = 10\n"
        "encoder.dim = 8\n"
        "model.hidden = 8\n"
        "train.batch = 10\n"
        "train.epochs = 6\n"
        "train.lr = 0.01\n"
        "baseline.epochs = 20\n"
        "# comment lines are ignored\n"
        + extra
    )
    return str(path)


@pytest.fixture
def workspace(tmp_path):
    data = tmp_path / "pairs.csv"
    vectors = tmp_path / "vectors.txt"
    make_dataset(data)
    make_vectors(vectors)
    cfg = write_config(tmp_path / "run.cfg", data, vectors)
    return tmp_path, str(data), str(vectors), cfg


def test_split_writes_partition(workspace):
    tmp_path, data, _, cfg = workspace
    out_dir = tmp_path / "splits"
    rc = main(["split", "--config", cfg, "--paths.out_dir", str(out_dir)])
    assert rc == 0
    train = corpus.load_csv(out_dir / "train.csv")
    test = corpus.load_csv(out_dir / "test.csv")
    assert len(train) + len(test) == 40
    assert not {p.id for p in train} & {p.id for p in test}


def test_train_lstm_and_eval_single_model(workspace, capsys):
    tmp_path, data, _, cfg = workspace
    model_path = tmp_path / "m.co3d"
    rc = main(["train", "--config", cfg, "--paths.model_out", str(model_path)])
    assert rc == 0
    model = load_model(model_path)
    assert model.config.cell == "lstm" and model.config.hidden == 8

    report = tmp_path / "single.csv"
    rc = main([
        "eval", "--config", cfg,
        "--model", str(model_path),
        "--paths.report_out", str(report),
    ])
    assert rc == 0
    rows = list(csv.DictReader(report.open()))
    assert {r["method"] for r in rows} == {"lstm"}
    assert {r["row"] for r in rows} >= {"All"}


def test_train_svm(workspace):
    tmp_path, data, _, cfg = workspace
    model_path = tmp_path / "svm.co3d"
    rc = main([
        "train", "--config", cfg,
        "--model.cell", "svm",
        "--paths.model_out", str(model_path),
    ])
    assert rc == 0
    from coherelint.baseline import load_svm

    svm, tfidf = load_svm(model_path)
    assert len(tfidf.vocabulary) > 0


def test_flag_overrides_config(workspace, capsys):
    tmp_path, data, _, cfg = workspace
    rc = main([
        "train", "--config", cfg,
        "--train.epochs", "2",
        "--paths.model_out", str(tmp_path / "m2.co3d"),
    ])
    assert rc == 0
    assert "for 2 epochs" in capsys.readouterr().out


def test_eval_full_protocol_report(workspace):
    tmp_path, data, _, cfg = workspace
    report = tmp_path / "report.csv"
    rc = main([
        "eval", "--config", cfg,
        "--report.methods", "lstm,svm",
        "--paths.report_out", str(report),
    ])
    assert rc == 0
    rows = list(csv.DictReader(report.open()))
    seen = {(r["row"], r["method"]) for r in rows}
    for row in ("Benchmark", "CoffeeMaker", "All"):
        assert (row, "lstm") in seen and (row, "svm") in seen


def test_end_to_end_determinism(workspace):
    tmp_path, data, _, cfg = workspace
    outputs = []
    for run in ("one", "two"):
        out_dir = tmp_path / run
        out_dir.mkdir()
        rc = main(["split", "--config", cfg, "--paths.out_dir", str(out_dir)])
        assert rc == 0
        model = out_dir / "m.co3d"
        assert main([
            "train", "--config", cfg, "--paths.model_out", str(model),
        ]) == 0
        report = out_dir / "report.csv"
        assert main([
            "eval", "--config", cfg,
            "--report.methods", "lstm,svm",
            "--paths.report_out", str(report),
        ]) == 0
        outputs.append((
            (out_dir / "train.csv").read_bytes(),
            model.read_bytes(),
            report.read_bytes(),
        ))
    assert outputs[0] == outputs[1]


def test_missing_vectors_file_exit_1(workspace, capsys):
    tmp_path, data, _, _ = workspace
    rc = main([
        "train",
        "--data", data,
        "--vectors", str(tmp_path / "nope.txt"),
        "--paths.model_out", str(tmp_path / "m.co3d"),
    ])
    assert rc == 1
    assert "nope.txt" in capsys.readouterr().err


def test_unknown_config_key_exit_1(workspace, tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no.such.key = 1\n")
    rc = main(["split", "--config", str(bad)])
    assert rc == 1
    assert "no.such.key" in capsys.readouterr().err


def test_bad_cell_exit_1(workspace, capsys):
    tmp_path, data, vectors, cfg = workspace
    rc = main(["train", "--config", cfg, "--model.cell", "transformer"])
    assert rc == 1
    assert "transformer" in capsys.readouterr().err


def test_bad_label_in_data_exit_1(tmp_path, capsys):
    data = tmp_path / "bad.csv"
    data.write_text(
        "id,project,comment,code,label\na,X,hello,code,maybe\n"
    )
    rc = main(["split", "--data", str(data)])
    assert rc == 1
    assert "maybe" in capsys.readouterr().err


def test_explain_writes_html_and_csv(workspace):
    tmp_path, data, _, cfg = workspace
    model_path = tmp_path / "m.co3d"
    assert main([
        "train", "--config", cfg, "--paths.model_out", str(model_path),
    ]) == 0
    html_out = tmp_path / "attr.html"
    rc = main([
        "explain", "--config", cfg,
        "--model", str(model_path),
        "--pair-id", "s1",
        "--out", str(html_out),
    ])
    assert rc == 0
    text = html_out.read_text()
    ET.fromstring(text.split("\n", 1)[1])
    scores = tmp_path / "attr.csv"
    rows = list(csv.DictReader(scores.open()))
    assert rows and rows[0]["token"]


def test_explain_occlusion_method(workspace):
    tmp_path, data, _, cfg = workspace
    model_path = tmp_path / "m.co3d"
    assert main([
        "train", "--config", cfg, "--paths.model_out", str(model_path),
    ]) == 0
    rc = main([
        "explain", "--config", cfg,
        "--model", str(model_path),
        "--pair-id", "s2",
        "--explain.method", "occlusion",
        "--out", str(tmp_path / "occ.html"),
    ])
    assert rc == 0


def test_explain_rejects_svm(workspace, capsys):
    tmp_path, data, _, cfg = workspace
    model_path = tmp_path / "svm.co3d"
    assert main([
        "train", "--config", cfg, "--model.cell", "svm",
        "--paths.model_out", str(model_path),
    ]) == 0
    rc = main([
        "explain", "--config", cfg,
        "--model", str(model_path),
        "--pair-id", "s1",
        "--out", str(tmp_path / "x.html"),
    ])
    assert rc == 1
    assert "recurrent" in capsys.readouterr().err


def test_embed_convert_text_to_binary(workspace):
    tmp_path, _, vectors, _ = workspace
    out = tmp_path / "v.bin"
    rc = main([
        "embed", "--vectors", vectors, "--format", "text",
        "--paths.vectors_out", str(out),
        "--paths.vectors_out_format", "binary",
    ])
    assert rc == 0
    orig = load_word_vectors(vectors, "text")
    conv = load_word_vectors(out, "binary")
    assert set(orig.vectors) == set(conv.vectors)


def test_bench_writes_timings(workspace):
    tmp_path, data, _, cfg = workspace
    out = tmp_path / "timings.csv"
    rc = main(["bench", "--config", cfg, "--paths.timings_out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    datasets = {r["dataset"] for r in rows}
    assert "All" in datasets and "Benchmark" in datasets
    assert {r["method"] for r in rows} == {"word_vectors", "tfidf"}
    assert all(float(r["wall_minutes"]) > 0 for r in rows)


def test_help_lists_config_keys_with_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["train", "--help"])
    out = capsys.readouterr().out
    assert "--train.epochs" in out
    assert "(default: 30)" in out
    assert "--split.ratio" in out

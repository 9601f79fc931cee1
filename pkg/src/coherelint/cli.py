"""Command-line surface: split, train, eval, bench, explain, embed.

Configuration is a flat `key = value` file; every key can be overridden by a
flag of the same dotted name. All randomness flows through the seed keys, so
identical configs give identical outputs.
"""

import argparse
import os
import sys

from . import baseline, corpus, embedding, evaluation, interpret, neurnet
from .tokenizer import EmptyCorpus, pair_tokens


class CliError(ValueError):
    pass


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise CliError(f"expected true/false, got {text!r}")


# key: (type converter, default, help)
CONFIG_SCHEMA = {
    "paths.data": (str, None, "labeled pairs CSV"),
    "paths.vectors": (str, None, "word-vector file to load"),
    "paths.vectors_format": (str, "text", "vector file format: text|binary"),
    "paths.vectors_out": (str, None, "where to write vectors (embed)"),
    "paths.vectors_out_format": (str, "binary", "output vector format"),
    "paths.out_dir": (str, ".", "directory for split CSVs"),
    "paths.model": (str, None, "trained model file to load"),
    "paths.model_out": (str, "model.co3d", "where to write the trained model"),
    "paths.report_out": (str, "report.csv", "metrics report CSV"),
    "paths.timings_out": (str, "timings.csv", "embedding-time CSV"),
    "paths.html_out": (str, "attribution.html", "saliency HTML page"),
    "split.ratio": (float, 0.8, "train fraction"),
    "split.seed": (int, 13, "split shuffle seed"),
    "split.stratify": (_parse_bool, True, "stratify by (project, label)"),
    "encoder.max_len": (int, 50, "tokens kept per pair"),
    "encoder.dim": (int, 300, "word-vector dimension"),
    "model.cell": (str, "lstm", "classifier: rnn|lstm|svm"),
    "model.hidden": (int, 100, "recurrent hidden units"),
    "model.clip": (float, 5.0, "gradient clip norm; 0 disables"),
    "train.batch": (int, 50, "minibatch size"),
    "train.epochs": (int, 30, "training epochs"),
    "train.lr": (float, 0.001, "Adam learning rate"),
    "train.seed": (int, 13, "init and shuffle seed"),
    "embedding.window": (int, 5, "skip-gram context window"),
    "embedding.negatives": (int, 5, "skip-gram negative samples"),
    "embedding.epochs": (int, 5, "skip-gram epochs"),
    "embedding.min_count": (int, 1, "skip-gram min token count"),
    "embedding.seed": (int, 13, "skip-gram seed"),
    "embedding.lr": (float, 0.025, "skip-gram starting learning rate"),
    "baseline.lambda": (float, 1e-4, "SVM regularization strength"),
    "baseline.epochs": (int, 50, "SVM Pegasos epochs"),
    "baseline.raw_counts": (_parse_bool, False, "bag-of-words without idf"),
    "report.methods": (str, "lstm,rnn,svm", "methods for the eval report"),
    "report.projects": (str, "", "project rows; empty = all present"),
    "explain.pair_id": (str, None, "pair id to attribute"),
    "explain.method": (str, "grad_input", "grad_input|occlusion"),
    "tokenizer.split_identifiers": (_parse_bool, False, "split camelCase/underscores"),
}

# spec-named shorthand flags, mapped onto config keys
SHORTHANDS = {
    "--data": "paths.data",
    "--vectors": "paths.vectors",
    "--format": "paths.vectors_format",
    "--model": "paths.model",
    "--pair-id": "explain.pair_id",
}


def default_config():
    return {key: default for key, (_, default, _) in CONFIG_SCHEMA.items()}


def parse_config_file(path):
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    overrides = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise CliError(f"{path} line {lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            key, value = key.strip(), value.strip()
            if key not in CONFIG_SCHEMA:
                raise CliError(f"{path} line {lineno}: unknown config key '{key}'")
            conv = CONFIG_SCHEMA[key][0]
            try:
                overrides[key] = conv(value)
            except (TypeError, ValueError) as exc:
                raise CliError(f"{path} line {lineno}: bad value for {key}: {exc}")
    return overrides


def build_config(args):
    cfg = default_config()
    if args.config:
        cfg.update(parse_config_file(args.config))
    flags = vars(args)
    for flag, key in SHORTHANDS.items():
        name = flag.lstrip("-").replace("-", "_")
        if flags.get(name) is not None:
            cfg[key] = CONFIG_SCHEMA[key][0](flags[name])
    for key in CONFIG_SCHEMA:
        value = flags.get(key)
        if value is not None:
            cfg[key] = CONFIG_SCHEMA[key][0](value)
    if flags.get("out") is not None:
        cfg[flags["_out_key"]] = flags["out"]
    return cfg


def _require_file(path, what):
    if not path:
        raise CliError(f"no {what} given")
    if not os.path.exists(path):
        raise CliError(f"{what} not found: {path}")
    return path


def _load_pairs(cfg):
    path = _require_file(cfg["paths.data"], "dataset CSV (paths.data)")
    return corpus.load_csv(path)


def _load_or_train_store(cfg, pairs):
    if cfg["paths.vectors"]:
        path = _require_file(cfg["paths.vectors"], "vector file (paths.vectors)")
        store = embedding.load_word_vectors(path, cfg["paths.vectors_format"])
        if store.dim != cfg["encoder.dim"]:
            raise CliError(
                f"vector file dim {store.dim} != encoder.dim {cfg['encoder.dim']}"
            )
        return store
    print(
        f"no vector file given; training {cfg['encoder.dim']}-dim skip-gram "
        f"vectors on the dataset"
    )
    return embedding.train_skipgram(
        pairs,
        dim=cfg["encoder.dim"],
        window=cfg["embedding.window"],
        negatives=cfg["embedding.negatives"],
        epochs=cfg["embedding.epochs"],
        seed=cfg["embedding.seed"],
        min_count=cfg["embedding.min_count"],
        lr=cfg["embedding.lr"],
    )


def _encoder_cfg(cfg):
    return embedding.EncoderConfig(
        max_len=cfg["encoder.max_len"], dim=cfg["encoder.dim"]
    )


def _clip(cfg):
    return cfg["model.clip"] if cfg["model.clip"] > 0 else None


def _split_ids(cfg):
    return cfg["tokenizer.split_identifiers"]


def _train_recurrent(cfg, cell, train_pairs, store):
    encoded, _ = embedding.encode_dataset(
        train_pairs, store, _encoder_cfg(cfg), _split_ids(cfg)
    )
    examples = [
        (e, corpus.label_index(p.label)) for e, p in zip(encoded, train_pairs)
    ]
    model_cfg = neurnet.ModelConfig(
        cell=cell,
        input_dim=cfg["encoder.dim"],
        hidden=cfg["model.hidden"],
        clip_norm=_clip(cfg),
    )
    tc = neurnet.TrainConfig(
        batch_size=cfg["train.batch"],
        epochs=cfg["train.epochs"],
        seed=cfg["train.seed"],
        lr=cfg["train.lr"],
    )
    return neurnet.train(model_cfg, examples, tc)


def _train_svm(cfg, train_pairs):
    tfidf = baseline.tfidf_fit(
        train_pairs, use_idf=not cfg["baseline.raw_counts"],
        split_identifiers=_split_ids(cfg),
    )
    X = baseline.tfidf_transform_all(tfidf, train_pairs, _split_ids(cfg))
    labels = [p.label for p in train_pairs]
    svm, objectives = baseline.svm_train(
        X, labels,
        lam=cfg["baseline.lambda"],
        epochs=cfg["baseline.epochs"],
        seed=cfg["train.seed"],
    )
    return svm, tfidf, objectives


def cmd_split(cfg):
    pairs = _load_pairs(cfg)
    ds = corpus.split(
        pairs, cfg["split.ratio"], cfg["split.seed"], cfg["split.stratify"]
    )
    out_dir = cfg["paths.out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    train_path = os.path.join(out_dir, "train.csv")
    test_path = os.path.join(out_dir, "test.csv")
    corpus.write_csv(ds.train, train_path)
    corpus.write_csv(ds.test, test_path)
    print(f"{len(pairs)} pairs -> {len(ds.train)} train, {len(ds.test)} test")
    print(f"wrote {train_path} and {test_path}")
    return 0


def cmd_train(cfg):
    pairs = _load_pairs(cfg)
    ds = corpus.split(
        pairs, cfg["split.ratio"], cfg["split.seed"], cfg["split.stratify"]
    )
    cell = cfg["model.cell"]
    out = cfg["paths.model_out"]
    if cell == "svm":
        svm, tfidf, objectives = _train_svm(cfg, ds.train)
        baseline.save_svm(out, svm, tfidf)
        print(
            f"svm trained on {len(ds.train)} pairs; "
            f"final objective {objectives[-1]:.6f}"
        )
    elif cell in (neurnet.CELL_RNN, neurnet.CELL_LSTM):
        store = _load_or_train_store(cfg, ds.train)
        model, history = _train_recurrent(cfg, cell, ds.train, store)
        neurnet.save_model(model, out)
        last = history[-1]
        print(
            f"{cell} trained on {len(ds.train)} pairs for {len(history)} epochs; "
            f"final loss {last['loss']:.6f}, "
            f"train accuracy {last['train_accuracy']:.4f}"
        )
    else:
        raise CliError(f"model.cell must be rnn, lstm, or svm, got '{cell}'")
    print(f"wrote {out}")
    return 0


def _project_rows(pairs, cfg):
    present = []
    seen = {p.project for p in pairs}
    for name in corpus.KNOWN_PROJECTS:
        if name in seen:
            present.append(name)
    present.extend(sorted(seen - set(corpus.KNOWN_PROJECTS)))
    wanted = [p for p in cfg["report.projects"].split(",") if p.strip()]
    if wanted:
        present = [p for p in present if p in wanted]
    return present


def _eval_single_model(cfg):
    pairs = _load_pairs(cfg)
    ds = corpus.split(
        pairs, cfg["split.ratio"], cfg["split.seed"], cfg["split.stratify"]
    )
    path = _require_file(cfg["paths.model"], "model file (paths.model)")
    file_cfg, _ = neurnet.read_model_file(path)
    kind = file_cfg.get("kind")
    if kind == "svm":
        svm, tfidf = baseline.load_svm(path)
        X = baseline.tfidf_transform_all(tfidf, ds.test, _split_ids(cfg))
        predictions = evaluation.predict_labels(svm, X)
    elif kind in (neurnet.CELL_RNN, neurnet.CELL_LSTM):
        model = neurnet.load_model(path)
        if model.config.input_dim != cfg["encoder.dim"]:
            raise CliError(
                f"model input dim {model.config.input_dim} != "
                f"encoder.dim {cfg['encoder.dim']}"
            )
        store = _load_or_train_store(cfg, pairs)
        encoded, _ = embedding.encode_dataset(
            ds.test, store, _encoder_cfg(cfg), _split_ids(cfg)
        )
        predictions = evaluation.predict_labels(model, encoded)
    else:
        raise CliError(f"{path}: unknown model kind '{kind}'")

    labels = [p.label for p in ds.test]
    reports = {}
    for row in _project_rows(ds.test, cfg) + ["All"]:
        idx = [
            i for i, p in enumerate(ds.test) if row == "All" or p.project == row
        ]
        if not idx:
            continue
        reports[(row, kind)] = evaluation.compute_metrics(
            [predictions[i] for i in idx], [labels[i] for i in idx]
        )
    return reports, [kind]


def _eval_full_protocol(cfg):
    pairs = _load_pairs(cfg)
    methods = [m.strip() for m in cfg["report.methods"].split(",") if m.strip()]
    for m in methods:
        if m not in ("rnn", "lstm", "svm"):
            raise CliError(f"report.methods entry '{m}' is not rnn/lstm/svm")
    store = None
    if any(m in ("rnn", "lstm") for m in methods):
        store = _load_or_train_store(cfg, pairs)

    rows = _project_rows(pairs, cfg) + ["All"]
    reports = {}
    for row in rows:
        subset = pairs if row == "All" else [p for p in pairs if p.project == row]
        try:
            ds = corpus.split(
                subset, cfg["split.ratio"], cfg["split.seed"], cfg["split.stratify"]
            )
        except corpus.TooFewPairs as exc:
            print(f"skipping {row}: {exc}")
            continue
        test_labels = [p.label for p in ds.test]
        for method in methods:
            if method == "svm":
                svm, tfidf, _ = _train_svm(cfg, ds.train)
                X = baseline.tfidf_transform_all(tfidf, ds.test, _split_ids(cfg))
                predictions = evaluation.predict_labels(svm, X)
            else:
                model, _ = _train_recurrent(cfg, method, ds.train, store)
                encoded, _ = embedding.encode_dataset(
                    ds.test, store, _encoder_cfg(cfg), _split_ids(cfg)
                )
                predictions = evaluation.predict_labels(model, encoded)
            reports[(row, method)] = evaluation.compute_metrics(
                predictions, test_labels
            )
            rep = reports[(row, method)]
            print(
                f"{row} / {method}: accuracy {rep.accuracy:.3f}, "
                f"f1 {rep.f1:.3f} on {len(ds.test)} test pairs"
            )
    return reports, methods


def cmd_eval(cfg):
    if cfg["paths.model"]:
        reports, methods = _eval_single_model(cfg)
    else:
        reports, methods = _eval_full_protocol(cfg)
    text, csv_text = evaluation.per_project_report(reports, methods)
    print(text)
    out = cfg["paths.report_out"]
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text)
    print(f"wrote {out}")
    return 0


def cmd_bench(cfg):
    pairs = _load_pairs(cfg)
    datasets = [
        (row, [p for p in pairs if p.project == row])
        for row in _project_rows(pairs, cfg)
    ]
    datasets.append(("All", pairs))
    store = _load_or_train_store(cfg, pairs)
    records = evaluation.benchmark_embedding(
        datasets, ["word_vectors", "tfidf"], store=store, cfg=_encoder_cfg(cfg)
    )
    text, csv_text = evaluation.format_timings(records)
    print(text)
    out = cfg["paths.timings_out"]
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text)
    print(f"wrote {out}")
    return 0


def cmd_explain(cfg):
    pair_id = cfg["explain.pair_id"]
    if not pair_id:
        raise CliError("no pair id given (--pair-id)")
    pairs = _load_pairs(cfg)
    matches = [p for p in pairs if p.id == pair_id]
    if not matches:
        raise CliError(f"pair id '{pair_id}' not found in {cfg['paths.data']}")
    pair = matches[0]

    path = _require_file(cfg["paths.model"], "model file (paths.model)")
    file_cfg, _ = neurnet.read_model_file(path)
    if file_cfg.get("kind") not in (neurnet.CELL_RNN, neurnet.CELL_LSTM):
        raise CliError("explain needs a recurrent model (rnn or lstm)")
    model = neurnet.load_model(path)

    store = _load_or_train_store(cfg, pairs)
    tokens = pair_tokens(pair, _split_ids(cfg)).tokens
    encoded = embedding.encode_pair(tokens, store, _encoder_cfg(cfg))

    method = cfg["explain.method"]
    if method == interpret.METHOD_GRAD_INPUT:
        report = interpret.saliency_grad_input(model, tokens, encoded)
    elif method == interpret.METHOD_OCCLUSION:
        report = interpret.saliency_occlusion(model, tokens, encoded)
    else:
        raise CliError("explain.method must be grad_input or occlusion")

    html_out = cfg["paths.html_out"]
    with open(html_out, "w", encoding="utf-8") as fh:
        fh.write(interpret.render_html(report))
    csv_out = os.path.splitext(html_out)[0] + ".csv"
    with open(csv_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(interpret.scores_csv(report))
    print(
        f"pair {pair_id} predicted {report.predicted} "
        f"(p = {report.predicted_prob:.4f}) by {report.method}"
    )
    print(f"wrote {html_out} and {csv_out}")
    return 0


def cmd_embed(cfg):
    if cfg["paths.vectors"]:
        path = _require_file(cfg["paths.vectors"], "vector file (paths.vectors)")
        store = embedding.load_word_vectors(path, cfg["paths.vectors_format"])
        print(
            f"loaded {len(store)} vectors of dim {store.dim} "
            f"({store.duplicates} duplicate words)"
        )
    elif cfg["paths.data"]:
        pairs = _load_pairs(cfg)
        store = embedding.train_skipgram(
            pairs,
            dim=cfg["encoder.dim"],
            window=cfg["embedding.window"],
            negatives=cfg["embedding.negatives"],
            epochs=cfg["embedding.epochs"],
            seed=cfg["embedding.seed"],
            min_count=cfg["embedding.min_count"],
            lr=cfg["embedding.lr"],
        )
        print(f"trained {len(store)} vectors of dim {store.dim}")
    else:
        raise CliError("embed needs --vectors to load or --data to train from")
    if cfg["paths.vectors_out"]:
        out = cfg["paths.vectors_out"]
        embedding.save_word_vectors(store, out, cfg["paths.vectors_out_format"])
        print(f"wrote {out} ({cfg['paths.vectors_out_format']})")
    return 0


COMMANDS = {
    "split": (cmd_split, "split a dataset CSV into train.csv and test.csv"),
    "train": (cmd_train, "train one classifier and save it"),
    "eval": (cmd_eval, "per-project metrics report"),
    "bench": (cmd_bench, "embedding-time benchmark"),
    "explain": (cmd_explain, "token attribution HTML for one pair"),
    "embed": (cmd_embed, "load, train, convert, or save word vectors"),
}

# main output flag per command
OUT_KEYS = {
    "split": "paths.out_dir",
    "train": "paths.model_out",
    "eval": "paths.report_out",
    "bench": "paths.timings_out",
    "explain": "paths.html_out",
    "embed": "paths.vectors_out",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="coherelint",
        description="train and inspect code-comment coherence classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument(
            "--out", help=f"shorthand for --{OUT_KEYS[name]}", default=None
        )
        for flag, key in SHORTHANDS.items():
            _, default, help_text2 = CONFIG_SCHEMA[key]
            p.add_argument(
                flag, help=f"{help_text2} (default: {default})", default=None
            )
        for key, (_, default, help_text2) in CONFIG_SCHEMA.items():
            p.add_argument(
                f"--{key}",
                dest=key,
                default=None,
                help=f"{help_text2} (default: {default})",
                metavar="V",
            )
        p.set_defaults(_out_key=OUT_KEYS[name])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        cfg = build_config(args)
        return handler(cfg)
    except (
        CliError,
        corpus.CorpusError,
        embedding.VectorFileError,
        neurnet.ModelFileError,
        EmptyCorpus,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except neurnet.NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - safety net, no stack traces
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

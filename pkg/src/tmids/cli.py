"""Command-line front end: ``tmids <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .classify import evaluate, knn_scalar_batch, knn_vector
from .clustering import ClusterModel, kmeans_fit
from .errors import ConfigError, ParseError, TmidsError
from .freqpat import apriori
from .ingest import (
    FrequencyMatrix,
    GeneratorConfig,
    build_matrix,
    generate_synthetic,
    parse_kdd_csv,
    parse_trace_file,
    write_trace_file,
)
from .pipeline import PipelineConfig, dump_json, run_pipeline, write_artifacts
from .scalar_reduce import ScalarFeatureSet, reduce_test, reduce_train
from .similarity import MEASURES, FeatureStats, SimilarityMeasure
from .spectral import SpectralReport, analyze, reduce_matrix

log = logging.getLogger("tmids")


def _open_read(path):
    try:
        return open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _read_json(path):
    with _open_read(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path} is not valid JSON: {exc}") from None


def _load_matrix(path) -> FrequencyMatrix:
    return FrequencyMatrix.from_dict(_read_json(path))


def _write_matrix(matrix: FrequencyMatrix, path) -> None:
    dump_json(matrix.to_dict(), Path(path))


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# -- subcommands ------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = GeneratorConfig.from_dict(_read_json(args.spec))
    traces = generate_synthetic(cfg, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        write_trace_file(traces, fh)
    log.info("wrote %d traces to %s", len(traces), args.out)
    return 0


def cmd_ingest(args) -> int:
    with _open_read(args.input) as fh:
        if args.format == "kdd-csv":
            cmap = _read_json(args.category_map) if args.category_map else None
            matrix = parse_kdd_csv(fh, cmap).to_matrix()
        else:
            vocab = _load_matrix(args.vocab_from).vocab if args.vocab_from else None
            matrix = build_matrix(parse_trace_file(fh), args.mode, vocab)
    if matrix.dropped:
        print(f"dropped {sum(matrix.dropped.values())} out-of-vocabulary tokens: "
              + ", ".join(f"{t}={n}" for t, n in sorted(matrix.dropped.items())),
              file=sys.stderr)
    zero = matrix.zero_rows()
    if zero:
        print(f"warning: {len(zero)} all-zero rows (first: {zero[0]})", file=sys.stderr)
    _write_matrix(matrix, args.out)
    return 0


def cmd_reduce(args) -> int:
    matrix = _load_matrix(args.matrix)
    if args.selection:
        report = SpectralReport.from_dict(_read_json(args.selection))
    else:
        if not 0 < args.energy_fraction <= 1:
            raise ConfigError(f"energy fraction out of range (0, 1]: {args.energy_fraction}")
        report = analyze(matrix, args.energy_fraction, not args.no_kaiser, args.keep_count)
        if args.report:
            dump_json(report.to_dict(), Path(args.report))
    _write_matrix(reduce_matrix(matrix, report.selected_columns), args.out)
    return 0


def cmd_cluster(args) -> int:
    matrix = _load_matrix(args.matrix)
    k = args.k
    if k is None:
        if matrix.labels is None or any(lab is None for lab in matrix.labels):
            raise ConfigError("--k is required for unlabeled matrices")
        k = len(set(matrix.labels))
    measure = SimilarityMeasure(args.measure, FeatureStats.from_values(matrix.values))
    model = kmeans_fit(matrix, k, measure, args.seed, args.max_iter, args.tol,
                       n_init=args.n_init)
    dump_json(model.to_dict(), Path(args.out))
    return 0


def cmd_compress(args) -> int:
    matrix = _load_matrix(args.matrix)
    model = ClusterModel.from_dict(_read_json(args.model))
    if args.train_matrix:
        scalars = reduce_test(matrix, model, _load_matrix(args.train_matrix))
    else:
        scalars = reduce_train(matrix, model)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        scalars.write_csv(fh)
    return 0


def _write_predictions(path, ids, preds, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sample_id", "prediction", "label"))
        for sid, p, lab in zip(ids, preds, labels):
            w.writerow((sid, p, "" if lab is None else lab))


def cmd_classify(args) -> int:
    if args.train_matrix:
        if not args.test_matrix:
            raise ConfigError("--test-matrix is required with --train-matrix")
        train = _load_matrix(args.train_matrix)
        test = _load_matrix(args.test_matrix)
        if train.vocab.tokens != test.vocab.tokens:
            raise ConfigError("train and test matrices use different vocabularies")
        measure = SimilarityMeasure(args.measure, FeatureStats.from_values(train.values))
        order = [args.normal_label] + sorted(set(train.labels) - {args.normal_label})
        preds = [knn_vector(train, row, measure, args.k, order) for row in test.values]
        ids, labels = test.rows, test.label_list()
    else:
        if not (args.train and args.test):
            raise ConfigError("give --train/--test scalar CSVs or --train-matrix/--test-matrix")
        with _open_read(args.train) as fh:
            train = ScalarFeatureSet.read_csv(fh, "train")
        with _open_read(args.test) as fh:
            test = ScalarFeatureSet.read_csv(fh, "test")
        order = [args.normal_label] + sorted(set(train.labels) - {args.normal_label})
        preds = knn_scalar_batch(train, test.values, args.k, order)
        ids, labels = test.sample_ids, test.labels
    _write_predictions(args.out, ids, preds, labels)
    return 0


def cmd_mine(args) -> int:
    matrix = _load_matrix(args.matrix)
    if args.binarize and matrix.mode != "binary":
        matrix = FrequencyMatrix(matrix.rows, matrix.vocab, "binary",
                                 (matrix.values > 0).astype(float), matrix.labels)
    result = apriori(matrix, args.min_support)
    dump_json(result.to_dict(), Path(args.out))
    if args.text:
        _write_text(args.text, result.render() + "\n")
    return 0


def _read_label_csv(path, column) -> dict[str, str]:
    with _open_read(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "sample_id" not in reader.fieldnames \
                or column not in reader.fieldnames:
            raise ParseError(f"{path}: expected columns sample_id and {column}", 1)
        out = {}
        for rowno, row in enumerate(reader, start=2):
            sid = row["sample_id"]
            if sid in out:
                raise ParseError(f"{path}: duplicate sample_id {sid!r}", rowno)
            out[sid] = row[column]
        return out


def cmd_eval(args) -> int:
    preds = _read_label_csv(args.predictions, "prediction")
    truth = _read_label_csv(args.truth, "label") if args.truth else \
        _read_label_csv(args.predictions, "label")
    missing = [sid for sid in preds if sid not in truth]
    if missing:
        raise ConfigError(f"no truth label for {len(missing)} samples, e.g. {missing[0]!r}")
    ids = list(preds)
    report = evaluate([preds[i] for i in ids], [truth[i] for i in ids], args.normal_label)
    dump_json(report.to_dict(), Path(args.out))
    print(report.render())
    return 0


_RUN_OVERRIDES = ("train", "test", "input_format", "seed", "test_fraction", "category_map",
                  "matrix_mode", "energy_fraction", "keep_count", "measure", "k", "max_iter",
                  "n_init", "tol", "knn_k", "normal_label")


def cmd_run(args) -> int:
    raw = {}
    if args.config:
        raw = dict(vars(PipelineConfig.load(args.config)))
    for key in _RUN_OVERRIDES:
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    if args.no_kaiser:
        raw["kaiser"] = False
    if args.no_figures:
        raw["figures"] = False
    cfg = PipelineConfig.from_mapping(raw)
    result = run_pipeline(cfg)
    write_artifacts(result, args.out)
    print(result.evaluation.render())
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tmids", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic trace file")
    g.add_argument("--spec", required=True, help="generator config (JSON)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    g = sub.add_parser("ingest", help="build a frequency matrix from traces or KDD CSV")
    g.add_argument("--input", required=True)
    g.add_argument("--format", choices=("trace", "kdd-csv"), default="trace")
    g.add_argument("--mode", choices=("count", "binary", "normalized"), default="count")
    g.add_argument("--vocab-from", help="reuse the vocabulary of an existing matrix JSON")
    g.add_argument("--category-map", help="attack name -> class JSON table (kdd-csv)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_ingest)

    g = sub.add_parser("reduce", help="SVD-based syscall selection")
    g.add_argument("--matrix", required=True)
    g.add_argument("--energy-fraction", type=float, default=0.9)
    g.add_argument("--no-kaiser", action="store_true")
    g.add_argument("--keep-count", type=int)
    g.add_argument("--selection", help="apply the columns of an existing spectral report")
    g.add_argument("--report", help="write the spectral report JSON here")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_reduce)

    g = sub.add_parser("cluster", help="k-means under a similarity measure")
    g.add_argument("--matrix", required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--measure", choices=MEASURES, default="idsim")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--max-iter", type=int, default=100)
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--n-init", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_cluster)

    g = sub.add_parser("compress", help="map samples to one scalar feature")
    g.add_argument("--matrix", required=True)
    g.add_argument("--model", required=True)
    g.add_argument("--train-matrix", help="training matrix; switches to test-set mode")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_compress)

    g = sub.add_parser("classify", help="k-nearest-neighbour classification")
    g.add_argument("--train", help="training scalar CSV")
    g.add_argument("--test", help="test scalar CSV")
    g.add_argument("--train-matrix", help="training matrix JSON (vector kNN)")
    g.add_argument("--test-matrix", help="test matrix JSON (vector kNN)")
    g.add_argument("--measure", choices=MEASURES, default="cosine")
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--normal-label", default="normal")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_classify)

    g = sub.add_parser("mine", help="frequent syscall itemsets (Apriori)")
    g.add_argument("--matrix", required=True)
    g.add_argument("--min-support", type=float, required=True)
    g.add_argument("--binarize", action="store_true", help="threshold a non-binary matrix first")
    g.add_argument("--out", required=True)
    g.add_argument("--text", help="also write a sorted plain-text listing")
    g.set_defaults(func=cmd_mine)

    g = sub.add_parser("eval", help="evaluation report from prediction/truth CSVs")
    g.add_argument("--predictions", required=True)
    g.add_argument("--truth", help="CSV with sample_id,label (default: label column of predictions)")
    g.add_argument("--normal-label", default="normal")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_eval)

    g = sub.add_parser("run", help="full pipeline with artifacts and figures")
    g.add_argument("--config", help="flat JSON config (a run manifest works too)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--train")
    g.add_argument("--test")
    g.add_argument("--input-format", choices=("trace", "kdd-csv", "synthetic"))
    g.add_argument("--seed", type=int)
    g.add_argument("--test-fraction", type=float)
    g.add_argument("--category-map")
    g.add_argument("--matrix-mode", choices=("count", "binary", "normalized"))
    g.add_argument("--energy-fraction", type=float)
    g.add_argument("--no-kaiser", action="store_true")
    g.add_argument("--keep-count", type=int)
    g.add_argument("--measure", choices=MEASURES)
    g.add_argument("--k", type=int)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--n-init", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--knn-k", type=int)
    g.add_argument("--normal-label")
    g.add_argument("--no-figures", action="store_true")
    g.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TmidsError, OSError) as exc:
        print(f"tmids {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

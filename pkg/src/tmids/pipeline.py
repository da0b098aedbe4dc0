"""End-to-end run: ingest, spectral reduction, clustering, scalar compression, kNN, evaluation."""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__
from .classify import EvaluationReport, evaluate, knn_scalar_batch
from .clustering import ClusterModel, kmeans_fit
from .errors import ConfigError, TmidsError
from .ingest import (
    FrequencyMatrix,
    GeneratorConfig,
    build_matrix,
    generate_synthetic,
    parse_kdd_csv,
    parse_trace_file,
    stratified_split,
)
from .scalar_reduce import ScalarFeatureSet, reduce_test, reduce_train
from .similarity import MEASURES, FeatureStats, SimilarityMeasure
from .spectral import SpectralReport, analyze, reduce_matrix

log = logging.getLogger(__name__)

INPUT_FORMATS = ("trace", "kdd-csv", "synthetic")


class StageError(TmidsError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {cause}")


@dataclass
class PipelineConfig:
    """Resolved run configuration; every field lands in the run manifest.

    For ``input_format="synthetic"`` the ``train`` path names a generator
    config (JSON) and traces are drawn with ``seed``.
    """

    train: str
    seed: int
    input_format: str = "trace"
    test: str | None = None
    test_fraction: float = 0.2
    category_map: str | None = None
    matrix_mode: str = "normalized"
    energy_fraction: float = 0.9
    kaiser: bool = True
    keep_count: int | None = None
    measure: str = "idsim"
    k: int | None = None
    max_iter: int = 100
    n_init: int = 10
    tol: float = 1e-6
    knn_k: int = 1
    normal_label: str = "normal"
    figures: bool = True

    def validate(self) -> "PipelineConfig":
        if self.input_format not in INPUT_FORMATS:
            raise ConfigError(f"input format must be one of {INPUT_FORMATS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if not 0 < self.energy_fraction <= 1:
            raise ConfigError(f"energy fraction out of range (0, 1]: {self.energy_fraction}")
        if self.test is None and not 0 < self.test_fraction < 1:
            raise ConfigError(f"test fraction out of range (0, 1): {self.test_fraction}")
        if self.matrix_mode not in ("count", "binary", "normalized"):
            raise ConfigError(f"unknown matrix mode {self.matrix_mode!r}")
        if self.measure not in MEASURES:
            raise ConfigError(f"unknown measure {self.measure!r}; choose from {MEASURES}")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.keep_count is not None and self.keep_count < 1:
            raise ConfigError("keep_count must be >= 1")
        if self.knn_k < 1 or self.max_iter < 1 or self.n_init < 1 or self.tol < 0:
            raise ConfigError("knn_k, max_iter and n_init must be >= 1, tol >= 0")
        return self

    @classmethod
    def from_mapping(cls, d: Mapping[str, Any], base_dir: Path | None = None) -> "PipelineConfig":
        """Build from a flat key/value mapping; keys starting with ``_`` are metadata."""
        known = {f.name for f in fields(cls)}
        d = {k.replace("-", "_"): v for k, v in d.items() if not k.startswith("_")}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "train" not in d or d["train"] is None:
            raise ConfigError("config needs an input path ('train')")
        if "seed" not in d or d["seed"] is None:
            raise ConfigError("a seed is required")
        for key in ("train", "test", "category_map"):
            if d.get(key) is not None and base_dir is not None:
                d[key] = str((base_dir / d[key]).resolve())
        return cls(**d).validate()

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict) or any(isinstance(v, (dict, list)) for v in raw.values()):
            raise ConfigError("config must be a flat JSON object of scalar values")
        return cls.from_mapping(raw, path.parent)

    def manifest(self) -> dict:
        d = asdict(self)
        for key in ("train", "test", "category_map"):
            if d[key] is not None:
                d[key] = str(Path(d[key]).resolve())
        d["_tool_version"] = __version__
        d["_numpy_version"] = np.__version__
        d["_python_version"] = platform.python_version()
        return d


@dataclass
class RunResult:
    config: PipelineConfig
    train_matrix: FrequencyMatrix
    test_matrix: FrequencyMatrix
    spectral: SpectralReport
    model: ClusterModel
    train_scalars: ScalarFeatureSet
    test_scalars: ScalarFeatureSet
    predictions: list[str]
    evaluation: EvaluationReport


def _read_text(path: str, stage: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StageError(stage, OSError(f"cannot read {path}: {exc.strerror}")) from None


def _load_matrices(cfg: PipelineConfig) -> tuple[FrequencyMatrix, FrequencyMatrix]:
    if cfg.input_format == "kdd-csv":
        cmap = None
        if cfg.category_map:
            cmap = json.loads(_read_text(cfg.category_map, "ingest"))
        train = parse_kdd_csv(io.StringIO(_read_text(cfg.train, "ingest")), cmap)
        if cfg.test:
            test = parse_kdd_csv(io.StringIO(_read_text(cfg.test, "ingest")), cmap,
                                 codings=train.codings, id_prefix="t")
            return train.to_matrix(), test.to_matrix()
        full = train.to_matrix()
        tr, te = stratified_split(full.rows, full.labels, cfg.test_fraction, cfg.seed)
        pick = lambda idx: FrequencyMatrix(tuple(full.rows[i] for i in idx), full.vocab,  # noqa: E731
                                           full.mode, full.values[idx],
                                           tuple(full.labels[i] for i in idx))
        return pick(tr), pick(te)

    if cfg.input_format == "synthetic":
        gen = GeneratorConfig.from_dict(json.loads(_read_text(cfg.train, "ingest")))
        traces = generate_synthetic(gen, cfg.seed)
        test_traces = None
    else:
        traces = parse_trace_file(io.StringIO(_read_text(cfg.train, "ingest")))
        test_traces = None
        if cfg.test:
            test_traces = parse_trace_file(io.StringIO(_read_text(cfg.test, "ingest")))
    if test_traces is None:
        tr, te = stratified_split(traces, [t.label for t in traces], cfg.test_fraction, cfg.seed)
        traces, test_traces = [traces[i] for i in tr], [traces[i] for i in te]
    train_m = build_matrix(traces, cfg.matrix_mode)
    test_m = build_matrix(test_traces, cfg.matrix_mode, vocab=train_m.vocab)
    if test_m.dropped:
        log.info("dropped %d unseen tokens from the test set", sum(test_m.dropped.values()))
    return train_m, test_m


def run_pipeline(cfg: PipelineConfig) -> RunResult:
    cfg.validate()
    stage = "ingest"
    try:
        train_m, test_m = _load_matrices(cfg)
        if train_m.labels is None or any(lab is None for lab in train_m.labels):
            raise ConfigError("training samples must all be labeled")
        zero = train_m.zero_rows()
        if zero:
            log.warning("%d all-zero training rows, e.g. %s", len(zero), zero[0])

        stage = "reduce"
        report = analyze(train_m, cfg.energy_fraction, cfg.kaiser, cfg.keep_count)
        train_r = reduce_matrix(train_m, report.selected_columns)
        test_r = reduce_matrix(test_m, report.selected_columns)

        stage = "cluster"
        stats = FeatureStats.from_values(train_r.values)
        measure = SimilarityMeasure(cfg.measure, stats)
        k = cfg.k if cfg.k is not None else len(set(train_r.labels))
        model = kmeans_fit(train_r, k, measure, cfg.seed, cfg.max_iter, cfg.tol,
                           n_init=cfg.n_init)

        stage = "compress"
        train_s = reduce_train(train_r, model)
        test_s = reduce_test(test_r, model, train_r)

        stage = "classify"
        order = [cfg.normal_label] + sorted(set(train_s.labels) - {cfg.normal_label})
        preds = knn_scalar_batch(train_s, test_s.values, cfg.knn_k, order)

        stage = "eval"
        truth = list(test_s.labels)
        if any(t is None for t in truth):
            raise ConfigError("test samples must be labeled for evaluation")
        ev = evaluate(preds, truth, cfg.normal_label)
    except StageError:
        raise
    except TmidsError as exc:
        raise StageError(stage, exc) from exc
    return RunResult(cfg, train_r, test_r, report, model, train_s, test_s, preds, ev)


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def write_predictions(ids, predictions, labels, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sample_id", "prediction", "label"))
        for sid, p, lab in zip(ids, predictions, labels):
            w.writerow((sid, p, "" if lab is None else lab))


def write_artifacts(result: RunResult, out_dir: str | Path) -> list[Path]:
    """Write every run artifact into ``out_dir`` and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "manifest": out / "manifest.json",
        "spectral": out / "spectral.json",
        "model": out / "model.json",
        "train": out / "train_scalars.csv",
        "test": out / "test_scalars.csv",
        "pred": out / "predictions.csv",
        "eval": out / "evaluation.json",
        "table": out / "evaluation.txt",
    }
    dump_json(result.config.manifest(), paths["manifest"])
    spectral = result.spectral.to_dict()
    dump_json(spectral, paths["spectral"])
    dump_json(result.model.to_dict(), paths["model"])
    for key, scalars in (("train", result.train_scalars), ("test", result.test_scalars)):
        with paths[key].open("w", encoding="utf-8", newline="") as fh:
            scalars.write_csv(fh)
    write_predictions(result.test_scalars.sample_ids, result.predictions,
                      result.test_scalars.labels, paths["pred"])
    dump_json(result.evaluation.to_dict(), paths["eval"])
    paths["table"].write_text(result.evaluation.render() + "\n", encoding="utf-8")
    written = list(paths.values())
    if result.config.figures:
        from .plots import write_run_figures

        written += write_run_figures(result, out / "figures")
    return written

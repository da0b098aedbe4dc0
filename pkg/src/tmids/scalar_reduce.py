"""Compress each sample to one scalar: summed centroid distances plus nearest-neighbour distance."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np

from .clustering import ClusterModel
from .errors import ParseError, ValidationError
from .ingest import FrequencyMatrix

CSV_HEADER = ("sample_id", "cluster", "scalar", "label")


@dataclass(frozen=True, eq=False)
class ScalarFeatureSet:
    sample_ids: tuple[str, ...]
    values: np.ndarray
    labels: tuple[str | None, ...]
    cluster_of: np.ndarray
    source: str

    def __post_init__(self):
        if self.source not in ("train", "test"):
            raise ValidationError(f"source must be train or test, got {self.source!r}")
        n = len(self.sample_ids)
        if not (len(self.values) == len(self.labels) == len(self.cluster_of) == n):
            raise ValidationError("scalar feature columns differ in length")
        if not np.all(np.isfinite(self.values)) or np.any(np.asarray(self.values) < 0):
            raise ValidationError("scalar features must be finite and >= 0")

    def __len__(self):
        return len(self.sample_ids)

    def write_csv(self, stream: IO[str]) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for sid, c, v, lab in zip(self.sample_ids, self.cluster_of, self.values, self.labels):
            w.writerow((sid, int(c), repr(float(v)), "" if lab is None else lab))

    @classmethod
    def read_csv(cls, stream: IO[str], source: str = "train") -> "ScalarFeatureSet":
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)}", 1)
        ids, clusters, values, labels = [], [], [], []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", rowno)
            try:
                clusters.append(int(row[1]))
                values.append(float(row[2]))
            except ValueError:
                raise ParseError("cluster/scalar field is not numeric", rowno) from None
            ids.append(row[0])
            labels.append(row[3] or None)
        return cls(tuple(ids), np.array(values), tuple(labels), np.array(clusters, dtype=int),
                   source)


def _sum_columns(d: np.ndarray) -> np.ndarray:
    # fixed left-to-right order so results match a plain per-sample loop
    total = np.zeros(d.shape[0])
    for c in range(d.shape[1]):
        total = total + d[:, c]
    return total


def reduce_train(matrix: FrequencyMatrix, model: ClusterModel) -> ScalarFeatureSet:
    x = matrix.values
    if len(model.assignments) != x.shape[0]:
        raise ValidationError(
            f"model has {len(model.assignments)} assignments for {x.shape[0]} rows")
    if model.centroids.shape[1] != x.shape[1]:
        raise ValidationError("matrix columns do not match the model centroids")
    measure = model.measure
    d1 = _sum_columns(measure.pairwise(x, model.centroids))
    d2 = np.zeros(x.shape[0])
    for c in range(model.k):
        idx = model.members(c)
        if idx.size < 2:
            continue
        d = measure.pairwise(x[idx], x[idx])
        np.fill_diagonal(d, np.inf)
        d2[idx] = d.min(axis=1)
    return ScalarFeatureSet(matrix.rows, d1 + d2, tuple(matrix.label_list()),
                            model.assignments.copy(), "train")


def reduce_test(matrix: FrequencyMatrix, model: ClusterModel, train_matrix: FrequencyMatrix
                ) -> ScalarFeatureSet:
    """Scalar features for unseen samples against a fitted model.

    The nearest neighbour is searched among the training members of the
    cluster each test sample is assigned to.
    """
    if matrix.vocab.tokens != train_matrix.vocab.tokens:
        raise ValidationError("test vocabulary does not match the training vocabulary")
    if len(model.assignments) != train_matrix.shape[0]:
        raise ValidationError("model assignments do not align with the training matrix")
    x = matrix.values
    train = train_matrix.values
    measure = model.measure
    dc = measure.pairwise(x, model.centroids)
    cluster_of = np.argmin(dc, axis=1)
    d1 = _sum_columns(dc)
    d2 = np.zeros(x.shape[0])
    for c in range(model.k):
        idx = np.flatnonzero(cluster_of == c)
        members = model.members(c)
        if idx.size == 0 or members.size == 0:
            continue
        d2[idx] = measure.pairwise(x[idx], train[members]).min(axis=1)
    return ScalarFeatureSet(matrix.rows, d1 + d2, tuple(matrix.label_list()), cluster_of, "test")


def value_bound(k: int) -> float:
    """Upper bound on any scalar when distances lie in [0, 1]."""
    return float(k + 1)


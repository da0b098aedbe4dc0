"""Nearest-neighbour classifiers and detection metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .ingest import FrequencyMatrix
from .scalar_reduce import ScalarFeatureSet
from .similarity import SimilarityMeasure


def _vote(neighbors: list[tuple[float, str]], class_order: Sequence[str] | None) -> str:
    """Majority label among ``(distance, label)`` pairs sorted nearest-first.

    Vote ties go to the label whose nearest member is closest, then to the
    earlier label in ``class_order`` (lexicographic when not given).
    """
    counts: dict[str, int] = {}
    nearest: dict[str, float] = {}
    for d, lab in neighbors:
        counts[lab] = counts.get(lab, 0) + 1
        nearest.setdefault(lab, d)
    rank = {lab: i for i, lab in enumerate(class_order or ())}

    def key(lab):
        return (-counts[lab], nearest[lab], rank.get(lab, len(rank)), lab)

    return min(counts, key=key)


def knn_scalar(train: ScalarFeatureSet, query_value: float, k: int = 1,
               class_order: Sequence[str] | None = None) -> str:
    if any(lab is None for lab in train.labels):
        raise ValidationError("training scalars must all be labeled")
    n = len(train)
    if n == 0:
        raise ValidationError("empty training set")
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} must lie in [1, {n}]")
    d = np.abs(np.asarray(train.values) - query_value)
    order = np.lexsort((np.arange(n), d))[:k]
    return _vote([(float(d[i]), train.labels[i]) for i in order], class_order)


def knn_scalar_batch(train: ScalarFeatureSet, queries, k: int = 1,
                     class_order: Sequence[str] | None = None) -> list[str]:
    return [knn_scalar(train, float(q), k, class_order) for q in queries]


def knn_vector(train: FrequencyMatrix, query, measure: SimilarityMeasure, k: int = 1,
               class_order: Sequence[str] | None = None) -> str:
    """Majority label among the ``k`` most similar training rows."""
    if train.labels is None or any(lab is None for lab in train.labels):
        raise ValidationError("training matrix must be fully labeled")
    n = train.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} must lie in [1, {n}]")
    query = np.asarray(query, dtype=float)
    if query.shape != (train.shape[1],):
        raise ValidationError(f"query length {query.shape} does not match {train.shape[1]}")
    sim = measure.pairwise_similarity(query[None, :], train.values)[0]
    order = np.lexsort((np.arange(n), -sim))[:k]
    return _vote([(-float(sim[i]), train.labels[i]) for i in order], class_order)


@dataclass
class EvaluationReport:
    class_order: list[str]
    confusion: list[list[int]]
    accuracy: float
    detection_rate: float
    false_alarm_rate: float
    per_class_recall: list[float]
    normal_label: str
    detection_rate_defined: bool = True
    false_alarm_rate_defined: bool = True
    n_samples: int = field(init=False)

    def __post_init__(self):
        self.n_samples = int(sum(map(sum, self.confusion)))

    def to_dict(self) -> dict:
        return {
            "class_order": self.class_order,
            "normal_label": self.normal_label,
            "n_samples": self.n_samples,
            "confusion": self.confusion,
            "accuracy": self.accuracy,
            "detection_rate": self.detection_rate,
            "detection_rate_defined": self.detection_rate_defined,
            "false_alarm_rate": self.false_alarm_rate,
            "false_alarm_rate_defined": self.false_alarm_rate_defined,
            "per_class_recall": self.per_class_recall,
        }

    def render(self) -> str:
        labels = self.class_order
        width = max([len("truth\\pred")] + [len(x) for x in labels] + [6])
        lines = ["truth\\pred".ljust(width) + "".join(x.rjust(width + 1) for x in labels)
                 + "recall".rjust(width + 1)]
        for lab, row, rec in zip(labels, self.confusion, self.per_class_recall):
            lines.append(lab.ljust(width) + "".join(str(c).rjust(width + 1) for c in row)
                         + f"{rec:.4f}".rjust(width + 1))
        lines.append("")
        lines.append(f"samples          {self.n_samples}")
        lines.append(f"accuracy         {self.accuracy:.4f}")
        dr = f"{self.detection_rate:.4f}" + ("" if self.detection_rate_defined else " (no attacks)")
        fa = f"{self.false_alarm_rate:.4f}" + ("" if self.false_alarm_rate_defined
                                               else " (no normals)")
        lines.append(f"detection rate   {dr}")
        lines.append(f"false alarm rate {fa}")
        return "\n".join(lines)


def evaluate(predictions: Sequence[str], truth: Sequence[str], normal_label: str = "normal",
             class_order: Sequence[str] | None = None) -> EvaluationReport:
    """Confusion matrix plus accuracy, detection rate and false-alarm rate.

    All attack classes count as one positive class for the detection and
    false-alarm rates; per-class recall keeps the finer view.
    """
    if len(predictions) != len(truth):
        raise ValidationError(
            f"length mismatch: {len(predictions)} predictions vs {len(truth)} truths")
    if class_order is None:
        others = sorted((set(truth) | set(predictions)) - {normal_label})
        class_order = [normal_label] + others
    else:
        class_order = list(class_order)
        if normal_label not in class_order:
            raise ValidationError(f"normal label {normal_label!r} missing from class order")
        class_order.remove(normal_label)
        class_order.insert(0, normal_label)
        missing = (set(truth) | set(predictions)) - set(class_order)
        if missing:
            raise ValidationError(f"labels missing from class order: {sorted(missing)}")
    pos = {c: i for i, c in enumerate(class_order)}
    conf = np.zeros((len(class_order), len(class_order)), dtype=int)
    for p, t in zip(predictions, truth):
        conf[pos[t], pos[p]] += 1
    total = conf.sum()
    accuracy = float(np.trace(conf) / total) if total else 0.0
    normal_row = conf[0]
    attack_rows = conf[1:]
    n_normal = int(normal_row.sum())
    n_attack = int(attack_rows.sum())
    far = float(normal_row[1:].sum() / n_normal) if n_normal else 0.0
    dr = float(attack_rows[:, 1:].sum() / n_attack) if n_attack else 0.0
    row_sums = conf.sum(axis=1)
    recall = [float(conf[i, i] / s) if s else 0.0 for i, s in enumerate(row_sums)]
    return EvaluationReport(class_order, conf.tolist(), accuracy, dr, far, recall,
                            normal_label, n_attack > 0, n_normal > 0)

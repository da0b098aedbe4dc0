"""SVD dominance analysis: Kaiser filtering, energy retention, syscall pruning."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .ingest import FrequencyMatrix


@dataclass(frozen=True)
class ColumnStats:
    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray  # bool per column


@dataclass
class SpectralReport:
    singular_values: list[float]
    eigenvalues: list[float]
    kaiser_retained: list[int]
    energy_retained: list[int]
    syscall_scores: list[float]
    selected_columns: list[int]
    energy_fraction_achieved: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "SpectralReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def standardize(matrix: FrequencyMatrix | np.ndarray) -> tuple[np.ndarray, ColumnStats]:
    """Center every column and scale it to unit variance (divisor n - 1).

    Zero-variance columns are centered only and flagged in the statistics.
    """
    x = np.asarray(getattr(matrix, "values", matrix), dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValidationError("insufficient samples: standardization needs n >= 2")
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    centered = x - mean
    flat = std == 0
    scale = np.where(flat, 1.0, std)
    z = centered / scale
    # guard against rounding drift in the column means
    z -= z.mean(axis=0)
    return z, ColumnStats(mean, std, flat)


def svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD returning ``(U, S, V)`` with ``U @ diag(S) @ V.T == a``."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValidationError("svd input contains non-finite entries")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return u, s, vt.T


def eigenvalues(singular_values, n_samples: int) -> np.ndarray:
    return np.asarray(singular_values, dtype=float) ** 2 / (n_samples - 1)


def kaiser_filter(eigvals) -> list[int]:
    """Indices of components with eigenvalue >= 1; the largest one if none pass."""
    lam = np.asarray(eigvals, dtype=float)
    if lam.size == 0:
        raise ValidationError("kaiser_filter needs at least one eigenvalue")
    keep = [int(i) for i in np.flatnonzero(lam >= 1.0)]
    return keep or [int(np.argmax(lam))]


def energy_retain(singular_values, fraction: float) -> tuple[list[int], float]:
    """Smallest prefix whose squared singular values reach ``fraction`` of the total.

    Returns ``(indices, achieved_fraction)``.
    """
    if not 0 < fraction <= 1:
        raise ValidationError(f"energy fraction out of range: {fraction}")
    s2 = np.asarray(singular_values, dtype=float) ** 2
    total = s2.sum()
    if s2.size == 0 or total == 0:
        raise ValidationError("zero-energy matrix")
    cum = np.cumsum(s2) / total
    if fraction >= 1.0:
        # full energy means every component carrying any energy
        count = int(np.flatnonzero(s2 > 0)[-1]) + 1
    else:
        count = int(np.searchsorted(cum, fraction, side="left")) + 1
        count = min(count, s2.size)
    return list(range(count)), float(cum[count - 1])


def select_syscalls(v: np.ndarray, s, components, keep_count: int | None = None
                    ) -> tuple[list[int], np.ndarray]:
    """Score columns by loading energy and keep the dominant ones.

    score_j = sum over the chosen components of s_i**2 * V[j, i]**2. Without
    ``keep_count`` columns scoring at least the mean are kept.
    """
    comps = sorted(set(int(c) for c in components))
    if not comps:
        raise ValidationError("select_syscalls needs at least one component")
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    scores = (v[:, comps] ** 2 * s[comps] ** 2).sum(axis=1)
    if keep_count is not None:
        if keep_count < 1:
            raise ValidationError("keep_count must be >= 1")
        order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
        selected = sorted(order[:keep_count])
    else:
        selected = [int(j) for j in np.flatnonzero(scores >= scores.mean())]
    return selected, scores


def reduce_matrix(matrix: FrequencyMatrix, selected) -> FrequencyMatrix:
    cols = sorted(set(int(c) for c in selected))
    if not cols:
        raise ValidationError("empty column selection")
    if cols[0] < 0 or cols[-1] >= matrix.shape[1]:
        raise ValidationError(f"selected columns out of range 0..{matrix.shape[1] - 1}")
    values = matrix.values[:, cols]
    if matrix.mode == "normalized":
        sums = values.sum(axis=1, keepdims=True)
        values = np.divide(values, sums, out=np.zeros_like(values), where=sums > 0)
    return FrequencyMatrix(matrix.rows, matrix.vocab.subset(cols), matrix.mode, values,
                           matrix.labels, dict(matrix.dropped))


def analyze(matrix: FrequencyMatrix, energy_fraction: float = 0.9, kaiser: bool = True,
            keep_count: int | None = None) -> SpectralReport:
    """Standardize, decompose and pick the dominant syscall columns.

    Kaiser filtering runs first; the energy prefix is then taken within the
    Kaiser-retained components.
    """
    z, _ = standardize(matrix)
    n = z.shape[0]
    _, s, v = svd(z)
    lam = eigenvalues(s, n)
    if not np.any(s > 0):
        raise ValidationError("zero-energy matrix: every column is constant")
    kept = kaiser_filter(lam) if kaiser else list(range(len(s)))
    prefix, achieved = energy_retain(s[kept], energy_fraction)
    energy_idx = [kept[i] for i in prefix]
    selected, scores = select_syscalls(v, s, energy_idx, keep_count)
    return SpectralReport(
        singular_values=[float(x) for x in s],
        eigenvalues=[float(x) for x in lam],
        kaiser_retained=kept,
        energy_retained=energy_idx,
        syscall_scores=[float(x) for x in scores],
        selected_columns=selected,
        energy_fraction_achieved=achieved,
    )

"""K-means with a pluggable similarity measure.

Only the assignment metric changes; centroids stay arithmetic member means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import FrequencyMatrix
from .similarity import FeatureStats, SimilarityMeasure


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    stats: FeatureStats
    measure_kind: str
    seed: int
    iterations_run: int
    converged: bool

    @property
    def measure(self) -> SimilarityMeasure:
        return SimilarityMeasure(self.measure_kind, self.stats)

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == c)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "measure": self.measure_kind,
            "seed": self.seed,
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "centroids": self.centroids.tolist(),
            "assignments": [int(a) for a in self.assignments],
            "stats": self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "ClusterModel":
        return cls(int(d["k"]), np.array(d["centroids"], dtype=float),
                   np.array(d["assignments"], dtype=int), FeatureStats.from_dict(d["stats"]),
                   d["measure"], int(d["seed"]), int(d["iterations_run"]),
                   bool(d["converged"]))


def _as_values(matrix) -> np.ndarray:
    return np.asarray(getattr(matrix, "values", matrix), dtype=float)


def assign(sample, model: ClusterModel) -> int:
    """Index of the nearest centroid; ties go to the lowest index."""
    d = model.measure.pairwise(np.atleast_2d(sample), model.centroids)[0]
    return int(np.argmin(d))


def handle_empty_clusters(x: np.ndarray, assignments: np.ndarray, dist: np.ndarray, k: int
                          ) -> np.ndarray:
    """Reseed empty clusters with the samples farthest from their centroid.

    ``dist`` holds each sample's distance to every current centroid. Donors
    are drawn only from clusters that keep at least one other member, and
    farthest-distance ties resolve to the lowest sample index.
    """
    assignments = assignments.copy()
    own = dist[np.arange(len(x)), assignments]
    for c in range(k):
        if np.any(assignments == c):
            continue
        sizes = np.bincount(assignments, minlength=k)
        candidates = np.flatnonzero(sizes[assignments] > 1)
        if candidates.size == 0:
            break
        best = candidates[np.argmax(own[candidates])]
        assignments[best] = c
        own[best] = 0.0
    return assignments


def _centroids(x, assignments, k, previous):
    out = previous.copy()
    for c in range(k):
        idx = assignments == c
        if idx.any():
            out[c] = x[idx].mean(axis=0)
    return out


def _fit_once(x, k, measure, init, max_iter, tol):
    centroids = x[list(init)].copy()
    assignments = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        dist = measure.pairwise(x, centroids)
        new = np.argmin(dist, axis=1)
        new = handle_empty_clusters(x, new, dist, k)
        updated = _centroids(x, new, k, centroids)
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        stable = assignments is not None and np.array_equal(new, assignments)
        assignments, centroids = new, updated
        if stable or shift <= tol:
            converged = True
            break
    return centroids, assignments, it, converged


def within_cluster_distance(x, centroids, assignments, measure) -> float:
    """Total distance of every row to its own centroid."""
    d = measure.pairwise(x, centroids)
    return float(d[np.arange(len(x)), assignments].sum())


def kmeans_fit(matrix: FrequencyMatrix | np.ndarray, k: int, measure: SimilarityMeasure,
               seed: int, max_iter: int = 100, tol: float = 1e-6,
               init: list[int] | None = None, n_init: int = 1) -> ClusterModel:
    """Cluster rows into ``k`` groups under ``measure``.

    Initial centroids are ``k`` distinct rows drawn with ``seed`` unless
    explicit row indices are passed as ``init``. Stops once assignments repeat,
    the largest centroid shift (L2) is at most ``tol``, or after ``max_iter``
    rounds. With ``n_init > 1`` that many seeded draws are fitted and the one
    with the lowest total within-cluster distance wins (earliest on ties).
    """
    x = _as_values(matrix)
    n = x.shape[0]
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of samples ({n})")
    if max_iter < 1 or tol < 0 or n_init < 1:
        raise ValidationError("max_iter and n_init must be >= 1, tol >= 0")
    if init is not None:
        if len(set(init)) != k or not all(0 <= i < n for i in init):
            raise ValidationError("init must name k distinct rows")
        inits = [list(init)]
    else:
        rng = np.random.default_rng(seed)
        inits = [sorted(int(i) for i in rng.choice(n, size=k, replace=False))
                 for _ in range(n_init)]
    best = None
    for start in inits:
        fit = _fit_once(x, k, measure, start, max_iter, tol)
        score = within_cluster_distance(x, fit[0], fit[1], measure) if len(inits) > 1 else 0.0
        if best is None or score < best[0]:
            best = (score, fit)
    centroids, assignments, it, converged = best[1]
    return ClusterModel(k, centroids, assignments, measure.stats or FeatureStats.from_values(x),
                        measure.kind, int(seed), it, converged)

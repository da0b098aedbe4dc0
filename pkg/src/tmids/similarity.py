"""IDSIM Gaussian similarity, cosine and binary Jaccard.

Every measure works on single vectors and, through :meth:`SimilarityMeasure.pairwise`,
on whole blocks of rows. The scalar helpers route through the same kernels so
a single-pair call returns exactly the corresponding pairwise entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SIGMA_FLOOR = 1e-6
MEASURES = ("idsim", "cosine", "jaccard")

# rows per block when materializing (n, k, m) difference tensors
_BLOCK_ELEMS = 2_000_000


@dataclass(frozen=True, eq=False)
class FeatureStats:
    """Per-column mean and training-set standard deviation."""

    mu: np.ndarray
    sigma: np.ndarray
    sigma_floor: float = SIGMA_FLOOR

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        if mu.shape != sigma.shape or mu.ndim != 1:
            raise ValidationError("mu and sigma must be 1-D with equal length")
        if np.any(sigma < 0) or not self.sigma_floor > 0:
            raise ValidationError("sigma must be >= 0 and sigma_floor > 0")
        for a in (mu, sigma):
            a.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_values(cls, values, sigma_floor: float = SIGMA_FLOOR) -> "FeatureStats":
        x = np.asarray(values, dtype=float)
        sigma = x.std(axis=0, ddof=1) if x.shape[0] > 1 else np.zeros(x.shape[1])
        return cls(x.mean(axis=0), sigma, sigma_floor)

    @property
    def effective_sigma(self) -> np.ndarray:
        return np.maximum(self.sigma, self.sigma_floor)

    def __len__(self):
        return len(self.mu)

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist(),
                "sigma_floor": self.sigma_floor}

    @classmethod
    def from_dict(cls, d) -> "FeatureStats":
        return cls(np.array(d["mu"], dtype=float), np.array(d["sigma"], dtype=float),
                   float(d.get("sigma_floor", SIGMA_FLOOR)))


# -- elementwise pieces -----------------------------------------------------

def exists_indicator(x, mu):
    """1 where the sample or the reference uses the syscall, else 0."""
    return ((np.asarray(x) > 0) | (np.asarray(mu) > 0)).astype(float)


def gaussian_term(x, mu, sigma):
    """exp(-(x - mu)**2 / sigma) where the syscall exists on either side, else 0.

    The exponent divides by ``sigma`` itself, not its square.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    g = np.exp(-((x - mu) ** 2) / sigma)
    out = np.where((x > 0) | (mu > 0), g, 0.0)
    return float(out) if out.ndim == 0 else out


def _check_pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def _idsim_parts(x, ref, sigma):
    """Return (sum of gaussian terms, number of existing features) along the last axis."""
    exists = (x > 0) | (ref > 0)
    g = np.where(exists, np.exp(-((x - ref) ** 2) / sigma), 0.0)
    return g.sum(axis=-1), exists.sum(axis=-1)


def _favg_kernel(x, ref, sigma):
    num, den = _idsim_parts(x, ref, sigma)
    return np.divide(num, den, out=np.zeros(np.shape(num)), where=den > 0), den


def _idsim_kernel(x, ref, sigma):
    favg, den = _favg_kernel(x, ref, sigma)
    return np.where(den > 0, (1.0 + favg) / 2.0, 0.0)


def _cosine_kernel(a, b):
    dot = (a * b).sum(axis=-1)
    na = np.sqrt((a * a).sum(axis=-1))
    nb = np.sqrt((b * b).sum(axis=-1))
    denom = na * nb
    out = np.divide(dot, denom, out=np.zeros(np.shape(dot)), where=denom > 0)
    return np.clip(out, 0.0, 1.0)


def _jaccard_kernel(a, b):
    a = a > 0
    b = b > 0
    inter = (a & b).sum(axis=-1)
    union = (a | b).sum(axis=-1)
    return np.divide(inter, union, out=np.ones(np.shape(inter)), where=union > 0)


def _stats_sigma(stats: FeatureStats, m: int) -> np.ndarray:
    if len(stats) != m:
        raise ValidationError(f"length mismatch: stats cover {len(stats)} features, vectors {m}")
    return stats.effective_sigma


# -- public pairwise measures ----------------------------------------------

def f_avg(sample, reference, stats: FeatureStats) -> float:
    """Mean Gaussian term over the features present in either vector (0 if none)."""
    x, r = _check_pair(sample, reference)
    return float(_favg_kernel(x, r, _stats_sigma(stats, x.shape[-1]))[0])


def idsim(sample, reference, stats: FeatureStats) -> float:
    """(1 + f_avg) / 2, or 0 when neither vector uses any syscall."""
    x, r = _check_pair(sample, reference)
    return float(_idsim_kernel(x, r, _stats_sigma(stats, x.shape[-1])))


def cosine(a, b) -> float:
    a, b = _check_pair(a, b)
    return float(_cosine_kernel(a, b))


def jaccard(a, b) -> float:
    """|a & b| / |a | b| after thresholding at > 0; two empty sets give 1."""
    a, b = _check_pair(a, b)
    return float(_jaccard_kernel(a, b))


@dataclass(frozen=True, eq=False)
class SimilarityMeasure:
    kind: str
    stats: FeatureStats | None = None

    def __post_init__(self):
        if self.kind not in MEASURES:
            raise ValidationError(f"unknown measure {self.kind!r}; choose from {MEASURES}")
        if self.kind == "idsim" and self.stats is None:
            raise ValidationError("idsim needs feature statistics")

    def similarity(self, a, b) -> float:
        if self.kind == "idsim":
            return idsim(a, b, self.stats)
        if self.kind == "cosine":
            return cosine(a, b)
        return jaccard(a, b)

    def distance(self, a, b) -> float:
        return 1.0 - self.similarity(a, b)

    def _kernel(self, x, ref):
        if self.kind == "idsim":
            return _idsim_kernel(x, ref, _stats_sigma(self.stats, x.shape[-1]))
        if self.kind == "cosine":
            return _cosine_kernel(x, ref)
        return _jaccard_kernel(x, ref)

    def pairwise_similarity(self, a, b) -> np.ndarray:
        """(len(a), len(b)) matrix of similarities; rows of ``b`` act as references."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        if a.shape[1] != b.shape[1]:
            raise ValidationError(f"length mismatch: {a.shape[1]} vs {b.shape[1]} features")
        out = np.empty((a.shape[0], b.shape[0]))
        step = max(1, _BLOCK_ELEMS // max(1, b.size))
        for start in range(0, a.shape[0], step):
            blk = a[start:start + step]
            out[start:start + step] = self._kernel(blk[:, None, :], b[None, :, :])
        return out

    def pairwise(self, a, b) -> np.ndarray:
        """Distance matrix ``1 - similarity`` between the rows of ``a`` and ``b``."""
        return 1.0 - self.pairwise_similarity(a, b)


def distance(measure: SimilarityMeasure, a, b) -> float:
    return measure.distance(a, b)

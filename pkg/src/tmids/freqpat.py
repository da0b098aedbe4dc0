"""Level-wise Apriori over a binary process x syscall matrix."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ValidationError
from .ingest import FrequencyMatrix


@dataclass(frozen=True)
class Itemset:
    items: tuple[str, ...]
    count: int
    support: float


@dataclass
class FrequentItemsets:
    min_support: float
    n_rows: int
    itemsets: list[Itemset]

    def as_map(self) -> dict[frozenset, int]:
        return {frozenset(s.items): s.count for s in self.itemsets}

    def to_dict(self) -> dict:
        return {
            "min_support": self.min_support,
            "n_rows": self.n_rows,
            "itemsets": [{"items": list(s.items), "count": s.count, "support": s.support}
                         for s in self.itemsets],
        }

    def render(self) -> str:
        lines = [f"# min_support={self.min_support} rows={self.n_rows}"]
        for s in self.itemsets:
            lines.append(f"{{{', '.join(s.items)}}}\t{s.count}\t{s.support:.6f}")
        return "\n".join(lines)


def _frequent(count: int, n: int, min_support: float) -> bool:
    return count / n >= min_support


def apriori(matrix: FrequencyMatrix, min_support: float) -> FrequentItemsets:
    """All syscall sets contained in at least ``min_support`` of the rows."""
    if matrix.mode != "binary":
        raise ValidationError(
            f"apriori needs a binary matrix, got mode {matrix.mode!r}; rebuild with mode=binary")
    if not 0 < min_support <= 1:
        raise ValidationError(f"min_support must lie in (0, 1], got {min_support}")
    n, m = matrix.shape
    if n == 0 or m == 0:
        raise ValidationError("empty matrix")
    x = matrix.values.astype(bool)
    tokens = matrix.vocab.tokens

    found: dict[tuple[int, ...], int] = {}
    level = []
    for j in range(m):
        c = int(x[:, j].sum())
        if _frequent(c, n, min_support):
            found[(j,)] = c
            level.append((j,))
    size = 1
    while level:
        size += 1
        prev = set(level)
        candidates = []
        for a, b in combinations(level, 2):
            if a[:-1] != b[:-1]:
                continue
            cand = a + (b[-1],) if a[-1] < b[-1] else b + (a[-1],)
            # prune: every (size-1)-subset must already be frequent
            if all(sub in prev for sub in combinations(cand, size - 1)):
                candidates.append(cand)
        level = []
        for cand in sorted(candidates):
            c = int(np.all(x[:, list(cand)], axis=1).sum())
            if _frequent(c, n, min_support):
                found[cand] = c
                level.append(cand)
    sets = [Itemset(tuple(tokens[j] for j in cols), c, c / n) for cols, c in found.items()]
    sets.sort(key=lambda s: (len(s.items), s.items))
    return FrequentItemsets(min_support, n, sets)

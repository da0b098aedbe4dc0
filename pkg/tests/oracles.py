"""Brute-force reference implementations used only by the tests.

These are deliberately naive (pure Python loops, ``math`` instead of numpy)
so they share no code path with the package.
"""

import math
from itertools import combinations


def literal_gaussian(x, mu, sigma):
    if x > 0 or mu > 0:
        return math.exp(-((x - mu) ** 2) / sigma)
    return 0.0


def literal_exists(x, mu):
    return 1 if (x > 0 or mu > 0) else 0


def literal_favg(sample, reference, sigma, floor=1e-6):
    """Two loops: the numerator and the denominator sums over features."""
    num = 0.0
    for s in range(len(sample)):
        num += literal_gaussian(sample[s], reference[s], max(sigma[s], floor))
    den = 0
    for s in range(len(sample)):
        den += literal_exists(sample[s], reference[s])
    return num / den if den else 0.0


def literal_idsim(sample, reference, sigma, floor=1e-6):
    den = sum(literal_exists(a, b) for a, b in zip(sample, reference))
    if den == 0:
        return 0.0
    return (1 + literal_favg(sample, reference, sigma, floor)) / 2


def literal_cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return min(1.0, max(0.0, dot / (na * nb)))


def literal_jaccard(a, b):
    sa = {i for i, x in enumerate(a) if x > 0}
    sb = {i for i, x in enumerate(b) if x > 0}
    if not sa | sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def scalar_oracle_train(rows, centroids, assignments, dist):
    """All-pairs / all-centroids double loop."""
    out = []
    for i, row in enumerate(rows):
        d1 = 0.0
        for c in centroids:
            d1 += dist(row, c)
        d2 = None
        for j, other in enumerate(rows):
            if j != i and assignments[j] == assignments[i]:
                d = dist(row, other)
                d2 = d if d2 is None else min(d2, d)
        out.append(d1 + (d2 or 0.0))
    return out


def scalar_oracle_test(rows, train_rows, centroids, train_assignments, dist):
    out, clusters = [], []
    for row in rows:
        dc = [dist(row, c) for c in centroids]
        best = min(range(len(dc)), key=lambda c: (dc[c], c))
        d1 = 0.0
        for d in dc:
            d1 += d
        pool = [dist(row, t) for t, a in zip(train_rows, train_assignments) if a == best]
        out.append(d1 + (min(pool) if pool else 0.0))
        clusters.append(best)
    return out, clusters


def knn_oracle(dists, labels, k, class_order):
    """Sort everything, take k, vote; ties: nearest member, then class order."""
    ranked = sorted(range(len(dists)), key=lambda i: (dists[i], i))[:k]
    tally = {}
    for i in ranked:
        lab = labels[i]
        votes, best = tally.get(lab, (0, math.inf))
        tally[lab] = (votes + 1, min(best, dists[i]))
    top = max(v for v, _ in tally.values())
    tied = [lab for lab, (v, _) in tally.items() if v == top]
    closest = min(tally[lab][1] for lab in tied)
    tied = [lab for lab in tied if tally[lab][1] == closest]
    tied.sort(key=lambda lab: class_order.index(lab))
    return tied[0]


def itemsets_oracle(rows, tokens, min_support):
    """Exhaustive 2^m enumeration of item sets."""
    n, m = len(rows), len(tokens)
    out = {}
    for size in range(1, m + 1):
        for cols in combinations(range(m), size):
            count = sum(1 for r in rows if all(r[c] for c in cols))
            if count / n >= min_support:
                out[frozenset(tokens[c] for c in cols)] = count
    return out

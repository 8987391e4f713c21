"""Independent brute-force oracles shared by the metric and acceptance tests.

These deliberately avoid the library's code paths: plain Python loops and
literal formula透 evaluations only.
"""

import math

import numpy as np


def brute_mean_l2(gen, train):
    D = len(gen[0])
    total = 0.0
    for g in gen:
        s = 0.0
        for x in train:
            s += math.sqrt(sum((gi - xi) ** 2 for gi, xi in zip(g, x)))
        total += s / len(train) / math.sqrt(D)
    return total / len(gen)


def brute_wasserstein(a, b):
    """Integrate |F_a - F_b| over the pooled sample points."""
    pts = sorted(set(list(a) + list(b)))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        fa = sum(1 for v in a if v <= lo) / len(a)
        fb = sum(1 for v in b if v <= lo) / len(b)
        total += abs(fa - fb) * (hi - lo)
    return total


def brute_js(a, b, bins):
    """Literal base-2 JSD formula over shared histograms."""
    lo = min(np.min(a), np.min(b))
    hi = max(np.max(a), np.max(b))
    p, _ = np.histogram(a, bins=bins, range=(lo, hi))
    q, _ = np.histogram(b, bins=bins, range=(lo, hi))
    p = p / len(a)
    q = q / len(b)
    m = (p + q) / 2
    jsd = 0.0
    for pi, qi, mi in zip(p, q, m):
        if pi > 0:
            jsd += 0.5 * pi * math.log2(pi / mi)
        if qi > 0:
            jsd += 0.5 * qi * math.log2(qi / mi)
    return math.sqrt(jsd)


def brute_pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sx = math.sqrt(sum((a - mx) ** 2 for a in x))
    sy = math.sqrt(sum((b - my) ** 2 for b in y))
    return cov / (sx * sy)

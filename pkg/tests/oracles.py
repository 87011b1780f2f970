"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package kernels; each oracle recomputes its
quantity from the definitions with plain Python loops.
"""

import itertools
from fractions import Fraction

import numpy as np


def subset_mask(elems):
    m = 0
    for e in elems:
        m |= 1 << e
    return m


def chain_sum(values, x, perm):
    """sum_i x[perm[i]] * (f(S_i) - f(S_{i-1})) along the chain of perm."""
    total = 0.0
    prev = values[0]
    mask = 0
    for j in perm:
        mask |= 1 << j
        total += x[j] * (values[mask] - prev)
        prev = values[mask]
    return total


def lovasz_perm_max(values, x):
    """Lovász extension of a submodular f on x >= 0 as a max over all chains."""
    k = len(x)
    return max(chain_sum(values, x, perm) for perm in itertools.permutations(range(k)))


def lovasz_sorted(values, x):
    """Extension from one descending sort (no tie-break assumptions)."""
    perm = sorted(range(len(x)), key=lambda i: -x[i])
    return chain_sum(values, x, perm)


def lovasz_levelsets(values, x):
    """Choquet-integral form: integral over t of f({x >= t}) for x >= 0."""
    levels = sorted(set([0.0] + [float(v) for v in x]))
    total = 0.0
    for lo, hi in zip(levels[:-1], levels[1:]):
        S = subset_mask(i for i in range(len(x)) if x[i] >= hi)
        total += (hi - lo) * values[S]
    return total


def hinge_oracle(values, u, y):
    w = [max(1.0 - ui * yi, 0.0) for ui, yi in zip(u, y)]
    return lovasz_perm_max(values, w)


def all_labels(k):
    return [np.array(t, dtype=float) for t in itertools.product([-1.0, 1.0], repeat=k)]


def label_bitmask(y):
    return subset_mask(i for i, c in enumerate(y) if c > 0)


def expected_oracle(values, u, p):
    k = len(u)
    total = 0.0
    for y in all_labels(k):
        total += p[label_bitmask(y)] * hinge_oracle(values, u, y)
    return total


def abstain_sets_oracle(values, v, y):
    """f of strict errors plus f of strict errors together with abstentions."""
    k = len(v)
    strict = {i for i in range(k) if v[i] * y[i] < 0}
    abst = {i for i in range(k) if v[i] == 0}
    return values[subset_mask(strict)] + values[subset_mask(strict | abst)]


def abstain_exact_oracle(values, v, y):
    ev = [Fraction(float(a)) for a in values]
    k = len(v)
    strict = {i for i in range(k) if v[i] * y[i] < 0}
    abst = {i for i in range(k) if v[i] == 0}
    return ev[subset_mask(strict)] + ev[subset_mask(strict | abst)]


def finite_difference(fn, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def sup_distance_grid(W, x, n=60):
    """Crude upper bound on the sup-norm distance from x to conv(W) by sampling weights."""
    W = np.asarray(W, dtype=float)
    m = W.shape[0]
    best = np.inf
    for lam in itertools.product(range(n + 1), repeat=m - 1):
        if sum(lam) > n:
            continue
        w = np.array(list(lam) + [n - sum(lam)], dtype=float) / n
        best = min(best, np.max(np.abs(w @ W - x)))
    return best

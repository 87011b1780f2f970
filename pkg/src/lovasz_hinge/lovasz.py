"""Lovász extension, Lovász hinge, and the simplicial decomposition of the cube.

Permutations are 0-based index arrays ordering coordinates from largest to
smallest; ties are broken by ascending index.  ``sign_star`` maps 0 to +1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .setfn import SetFunction, find_submodularity_violation, mask_of
from .spaces import labels

DIST_TOL = 1e-9


def sign(u) -> np.ndarray:
    return np.sign(np.asarray(u, dtype=np.float64)).astype(np.int64)


def sign_star(u) -> np.ndarray:
    return np.where(np.asarray(u, dtype=np.float64) >= 0, 1, -1).astype(np.int64)


def clip(u) -> np.ndarray:
    """Coordinate-wise projection onto [-1, 1]^k."""
    u = np.asarray(u, dtype=np.float64)
    return np.sign(u) * np.minimum(np.abs(u), 1.0)


def sort_order(x) -> np.ndarray:
    """Descending order of x, ties by ascending index."""
    return np.argsort(-np.asarray(x, dtype=np.float64), kind="stable")


def _vector(x, k: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != k:
        raise ValueError(f"{what} has length {x.shape[0]}, expected k={k}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} must be finite")
    return x


def _check_domain(x, strict: bool):
    if strict and np.any(x < 0):
        raise ValueError(f"Lovász extension is evaluated on the nonnegative orthant; got {x.tolist()} (pass strict=False to allow)")


def _lovasz_exact(f: SetFunction, x) -> Fraction:
    xs = [Fraction(v) if not isinstance(v, Fraction) else v for v in x]
    order = sorted(range(f.k), key=lambda i: -xs[i])
    vals = f.exact_values
    mask = 0
    prev = vals[0]
    total = Fraction(0)
    for j in order:
        mask |= 1 << j
        total += xs[j] * (vals[mask] - prev)
        prev = vals[mask]
    return total


def lovasz_extension(f: SetFunction, x, strict: bool = True, exact: bool = False):
    """F(x): sort x descending and telescope the marginal gains of f."""
    if exact:
        x = list(x)
        if len(x) != f.k:
            raise ValueError(f"x has length {len(x)}, expected k={f.k}")
        _check_domain(np.array([float(v) for v in x]), strict)
        return _lovasz_exact(f, x)
    x = _vector(x, f.k, "x")
    _check_domain(x, strict)
    return float(K.active.lovasz_rows(f.values, x[None, :])[0][0])


def lovasz_extension_batch(f: SetFunction, X, strict: bool = True) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64).reshape(-1, f.k)
    _check_domain(X, strict)
    return K.active.lovasz_rows(f.values, X)[0]


def lovasz_subgradient(f: SetFunction, x, strict: bool = True) -> np.ndarray:
    """Gradient of the linear piece selected by the tie-broken sort of x."""
    x = _vector(x, f.k, "x")
    _check_domain(x, strict)
    return K.active.lovasz_rows(f.values, x[None, :])[1][0]


def hinge(f: SetFunction, u, y, exact: bool = False):
    """Lovász hinge F((1 - u * y)_+)."""
    if exact:
        u = [Fraction(v) if not isinstance(v, Fraction) else v for v in u]
        y = [int(v) for v in np.asarray(y).reshape(-1)]
        w = [max(Fraction(1) - ui * yi, Fraction(0)) for ui, yi in zip(u, y)]
        return _lovasz_exact(f, w)
    u = _vector(u, f.k, "u")
    y = _vector(y, f.k, "y")
    return float(K.active.hinge_rows(f.values, u[None, :], y[None, :])[0])


def hinge_batch(f: SetFunction, U, Y) -> np.ndarray:
    """Row-wise hinge for paired arrays of points and labels."""
    U = np.ascontiguousarray(U, dtype=np.float64).reshape(-1, f.k)
    Y = np.ascontiguousarray(np.broadcast_to(np.asarray(Y, dtype=np.float64), U.shape))
    return K.active.hinge_rows(f.values, U, Y)


def hinge_subgradient(f: SetFunction, u, y) -> np.ndarray:
    u = _vector(u, f.k, "u")
    y = _vector(y, f.k, "y")
    w = 1.0 - u * y
    h = lovasz_subgradient(f, np.maximum(w, 0.0))
    return -y * h * (w > 0)


def weighted_hinge(w, u, y) -> float:
    """Closed form of the hinge for a modular function with weights w."""
    w, u, y = (np.asarray(a, dtype=np.float64) for a in (w, u, y))
    return float(np.sum(np.maximum(1.0 - u * y, 0.0) * w))


def zero_one_hinge(u, y) -> float:
    """Closed form of the hinge for the 0-1 set function."""
    u, y = np.asarray(u, dtype=np.float64), np.asarray(y, dtype=np.float64)
    return float(np.max(np.maximum(1.0 - u * y, 0.0)))


def check_distribution(p, k: int, tol: float = DIST_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.shape[0] != 1 << k:
        raise ValueError(f"distribution has {p.shape[0]} entries, expected 2^k = {1 << k}")
    if np.any(p < -tol) or not np.all(np.isfinite(p)):
        raise ValueError("distribution has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {p.sum()!r}, not 1")
    return np.ascontiguousarray(p)


def expected_hinge(f: SetFunction, u, p) -> float:
    """Sum over labels y of p_y * hinge(f, u, y)."""
    p = check_distribution(p, f.k)
    u = _vector(u, f.k, "u")
    return float(K.active.expected_hinge(f.values, labels(f.k), p, u)[0])


def expected_hinge_subgradient(f: SetFunction, u, p) -> np.ndarray:
    p = check_distribution(p, f.k)
    u = _vector(u, f.k, "u")
    return K.active.expected_hinge(f.values, labels(f.k), p, u)[1]


def expected_hinge_batch(f: SetFunction, U, p) -> np.ndarray:
    p = check_distribution(p, f.k)
    U = np.ascontiguousarray(U, dtype=np.float64).reshape(-1, f.k)
    return K.active.expected_hinge_batch(f.values, labels(f.k), p, U)


# ---------------------------------------------------------------------------
# cells of the cube


def chain_indicators(perm) -> np.ndarray:
    """Rows 1_{perm, i} for i = 0..k: indicator of the first i elements."""
    perm = np.asarray(perm, dtype=np.int64)
    k = perm.shape[0]
    out = np.zeros((k + 1, k), dtype=np.int64)
    for i in range(1, k + 1):
        out[i] = out[i - 1]
        out[i, perm[i - 1]] = 1
    return out


def cell_vertices(perm, y) -> np.ndarray:
    """Vertices 1_{perm, i} * y, i = 0..k, of the signed simplex cell."""
    return chain_indicators(perm) * np.asarray(y, dtype=np.int64)[None, :]


@dataclass(frozen=True)
class Barycentric:
    """Point of [-1, 1]^k written as a convex combination of its cell's vertices."""

    perm: np.ndarray
    label: np.ndarray
    alpha: np.ndarray

    def vertices(self) -> np.ndarray:
        return cell_vertices(self.perm, self.label)

    def support(self) -> np.ndarray:
        """Indices i with nonzero weight; the smallest vertex set containing the point."""
        return np.nonzero(self.alpha != 0)[0]

    def support_vertices(self) -> np.ndarray:
        return self.vertices()[self.support()]

    def reconstruct(self) -> np.ndarray:
        return self.alpha @ self.vertices()


def barycentric(u) -> Barycentric:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if np.any(np.abs(u) > 1) or not np.all(np.isfinite(u)):
        raise ValueError(f"barycentric coordinates need u in [-1, 1]^k, got {u.tolist()}")
    y = sign_star(u)
    a = np.abs(u)
    perm = sort_order(a)
    s = np.concatenate([[1.0], a[perm], [0.0]])
    alpha = s[:-1] - s[1:]
    return Barycentric(perm, y, alpha)


# ---------------------------------------------------------------------------
# convexity


def convexity_gap(f: SetFunction, x, z, lam: float) -> float:
    """lam F(x) + (1 - lam) F(z) - F(lam x + (1 - lam) z); negative means nonconvex."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    mid = lam * x + (1 - lam) * z
    F = lovasz_extension_batch(f, np.stack([x, z, mid]))
    return float(lam * F[0] + (1 - lam) * F[1] - F[2])


def convexity_violation(f: SetFunction, tol: float | None = None):
    """Points (x, z, 1/2) on which F fails midpoint convexity, or None.

    Built from a local submodularity violation (S, i, j): the midpoint of
    1_{S+i} and 1_{S+j} has F = (f(S) + f(S+i+j)) / 2.
    """
    w = find_submodularity_violation(f, tol)
    if w is None:
        return None
    x = np.zeros(f.k)
    z = np.zeros(f.k)
    S = mask_of(w.S)
    for e in range(f.k):
        if S >> e & 1:
            x[e] = z[e] = 1.0
    x[w.i - 1] = 1.0
    z[w.j - 1] = 1.0
    return x, z, 0.5

"""Discrete target losses, their properties, and minimizer faces of the hinge.

``target_loss`` is the structured binary loss f({r != y}) on sign reports;
``abstain_loss`` is its abstain extension on {-1, 0, 1}^k reports,
f({v y < 0}) + f({v y <= 0}).  A property is the set of reports whose
expected loss is within ``tol`` of the minimum.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .lovasz import cell_vertices, check_distribution, expected_hinge_batch
from .setfn import DEFAULT_TOL, SetFunction
from .spaces import as_label, as_report, fmt, label_index, labels, parse, report_index, reports

MAX_TABLE_K = 8
MAX_FACE_K = 4
NORM_TOL = 1e-12


class CapacityError(ValueError):
    """Exhaustive enumeration requested beyond the supported size."""


def _mask(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    return bits @ (1 << np.arange(bits.shape[-1], dtype=np.int64))


# ---------------------------------------------------------------------------
# losses


def target_loss(f: SetFunction, r, y) -> float:
    """f applied to the set of mispredicted coordinates; r must have no zeros."""
    r = as_report(r)
    y = as_label(y)
    if np.any(r == 0):
        raise ValueError("target_loss needs a report in {-1, 1}^k; use abstain_loss for reports with zeros")
    return float(f.values[_mask(r != y)])


def abstain_loss(f: SetFunction, v, y, exact: bool = False):
    """f({v y < 0}) + f({v y <= 0})."""
    v = as_report(v)
    y = as_label(y)
    vy = v * y
    lo, hi = int(_mask(vy < 0)), int(_mask(vy <= 0))
    if exact:
        return f.exact_values[lo] + f.exact_values[hi]
    return float(f.values[lo] + f.values[hi])


def abstain_loss_symdiff(f: SetFunction, v, y) -> float:
    """Same loss written with S_v = {v > 0}, S_y = {y > 0}, A_v = {v = 0}."""
    v = as_report(v)
    y = as_label(y)
    Sv, Sy, Av = int(_mask(v > 0)), int(_mask(y > 0)), int(_mask(v == 0))
    d = Sv ^ Sy
    return float(f.values[d & ~Av] + f.values[d | Av])


def _check_table_k(k: int):
    if k > MAX_TABLE_K:
        raise CapacityError(f"loss tables are limited to k <= {MAX_TABLE_K}, got k={k}")


@lru_cache(maxsize=64)
def abstain_table(f: SetFunction) -> np.ndarray:
    """(3^k, 2^k) table of the abstain loss, rows by report index, columns by label."""
    _check_table_k(f.k)
    VY = reports(f.k)[:, None, :] * labels(f.k)[None, :, :]
    T = f.values[_mask(VY < 0)] + f.values[_mask(VY <= 0)]
    T.setflags(write=False)
    return T


@lru_cache(maxsize=64)
def target_table(f: SetFunction) -> np.ndarray:
    """(2^k, 2^k) table of the target loss, rows and columns by label bitmask."""
    _check_table_k(f.k)
    Y = labels(f.k)
    T = f.values[_mask(Y[:, None, :] != Y[None, :, :])]
    T.setflags(write=False)
    return T


def abstain_table_exact(f: SetFunction) -> list:
    _check_table_k(f.k)
    V, Y = reports(f.k), labels(f.k)
    ev = f.exact_values
    out = []
    for v in V:
        row = []
        for y in Y:
            vy = v * y
            row.append(ev[int(_mask(vy < 0))] + ev[int(_mask(vy <= 0))])
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# properties


@dataclass(frozen=True)
class Property:
    """Expected losses of a finite report set and its minimizer set."""

    reports: np.ndarray
    values: np.ndarray
    minimum: float
    members: np.ndarray
    tol: float

    @property
    def minimizers(self) -> np.ndarray:
        return self.reports[self.members]

    def strings(self) -> list[str]:
        return [fmt(r) for r in self.minimizers]

    def contains(self, v) -> bool:
        v = np.asarray(v)
        return bool(np.any(np.all(self.minimizers == v, axis=1)))

    def value_of(self, v):
        v = np.asarray(v)
        hit = np.nonzero(np.all(self.reports == v, axis=1))[0]
        if hit.size == 0:
            raise KeyError(fmt(v))
        return self.values[hit[0]]


def _property(R, values, tol: float) -> Property:
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("property of an empty report set")
    m = values.min()
    members = np.nonzero(values <= m + tol)[0]
    return Property(np.asarray(R), values, m, members, tol)


def expected_target(lossfn, reps, p) -> np.ndarray:
    """Expected loss of each report under p, for a generic loss(r, y)."""
    reps = [np.asarray(r) for r in reps]
    if not reps:
        raise ValueError("expected_target needs a nonempty report set")
    k = reps[0].shape[0]
    p = check_distribution(p, k)
    Y = labels(k)
    return np.array([sum(p[b] * lossfn(r, Y[b]) for b in range(1 << k) if p[b] != 0) for r in reps], dtype=np.float64)


def target_property(lossfn, reps, p, tol: float = DEFAULT_TOL) -> Property:
    """argmin set of a generic loss over a finite report set."""
    reps = [np.asarray(r) for r in reps]
    return _property(np.array(reps), expected_target(lossfn, reps, p), tol)


def abstain_property(f: SetFunction, p, tol: float = DEFAULT_TOL) -> Property:
    """Property of the abstain loss over all of {-1, 0, 1}^k."""
    p = check_distribution(p, f.k)
    return _property(reports(f.k), abstain_table(f) @ p, tol)


def structured_property(f: SetFunction, p, tol: float = DEFAULT_TOL) -> Property:
    """Property of the target loss over sign reports {-1, 1}^k."""
    p = check_distribution(p, f.k)
    return _property(labels(f.k).astype(np.int64), target_table(f) @ p, tol)


def embedded_minimizer_set(f: SetFunction, p, tol: float = DEFAULT_TOL) -> Property:
    return abstain_property(f, p, tol)


def expected_abstain_exact(f: SetFunction, p) -> list:
    """Exact expected abstain loss of every report; p given as rationals."""
    p = [Fraction(x) for x in p]
    if sum(p) != 1:
        raise ValueError(f"exact distribution sums to {sum(p)}, not 1")
    T = abstain_table_exact(f)
    return [sum((t * q for t, q in zip(row, p) if q), Fraction(0)) for row in T]


# ---------------------------------------------------------------------------
# minimizer faces


@dataclass(frozen=True)
class SignedSimplexFace:
    """Face of the cell P_{perm, y} spanned by vertices 1_{perm, i} * y, i in verts."""

    perm: tuple
    y: tuple
    verts: tuple

    def cell_vertices(self) -> np.ndarray:
        return cell_vertices(self.perm, self.y)

    def vertices(self) -> np.ndarray:
        return self.cell_vertices()[list(self.verts)]

    def report_indices(self) -> tuple:
        return tuple(sorted(int(r) for r in report_index(self.vertices())))

    def point(self, weights) -> np.ndarray:
        w = np.asarray(weights, dtype=np.float64)
        return w @ self.vertices()

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return self.point(rng.dirichlet(np.ones(len(self.verts))))


@lru_cache(maxsize=None)
def _cells(k: int):
    out = []
    for perm in itertools.permutations(range(k)):
        for b in range(1 << k):
            y = tuple(int(c) for c in labels(k)[b])
            idx = report_index(cell_vertices(perm, y))
            out.append((perm, y, tuple(int(i) for i in idx)))
    return tuple(out)


def minimizer_faces(f: SetFunction, p, tol: float = DEFAULT_TOL) -> list[SignedSimplexFace]:
    """Maximal faces of the cube cells on which the expected hinge is minimal.

    The expected hinge is affine on every cell, so its minimizers within a
    cell form the face spanned by the cell vertices attaining the minimum
    over {-1, 0, 1}^k.  Faces are deduplicated by vertex set, only
    inclusion-maximal ones are kept, and the result is sorted by vertex set.
    """
    if f.k > MAX_FACE_K:
        raise CapacityError(f"minimizer_faces enumerates k! 2^k cells and is limited to k <= {MAX_FACE_K}, got k={f.k}")
    p = check_distribution(p, f.k)
    vals = expected_hinge_batch(f, reports(f.k).astype(np.float64), p)
    M = vals <= vals.min() + tol
    seen: dict = {}
    for perm, y, idx in _cells(f.k):
        sel = tuple(i for i in range(f.k + 1) if M[idx[i]])
        if not sel:
            continue
        key = frozenset(idx[i] for i in sel)
        if key not in seen:
            seen[key] = SignedSimplexFace(perm, y, sel)
    keys = [s for s in seen if not any(s < t for t in seen)]
    keys.sort(key=lambda s: (len(s), sorted(s)))
    return [seen[s] for s in keys]


def face_vertex_reports(faces) -> set:
    """Report indices of all vertices of the given faces."""
    return set(itertools.chain.from_iterable(F.report_indices() for F in faces))


# ---------------------------------------------------------------------------
# distributions


def uniform(k: int) -> np.ndarray:
    return np.full(1 << k, 1.0 / (1 << k))


def point_mass(y) -> np.ndarray:
    y = as_label(y)
    p = np.zeros(1 << y.shape[0])
    p[label_index(y)] = 1.0
    return p


def mixture(y, eps: float) -> np.ndarray:
    """(1 - eps) * uniform + eps * point mass at y."""
    y = as_label(y)
    return (1.0 - eps) * uniform(y.shape[0]) + eps * point_mass(y)


def mixture_exact(y, eps) -> list:
    y = as_label(y)
    n = 1 << y.shape[0]
    eps = Fraction(eps)
    p = [(1 - eps) / n] * n
    p[int(label_index(y))] += eps
    return p


def relabel(p, r) -> np.ndarray:
    """(p . r)_y = p_{y r}: the distribution of Y r when Y ~ p."""
    r = as_label(r)
    k = r.shape[0]
    p = np.asarray(p)
    flip = int(_mask(r < 0))
    return p[np.arange(1 << k) ^ flip]


def dirichlet(k: int, rng: np.random.Generator, alpha: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(1 << k, alpha))


def simplex_grid(k: int, step: float = 0.05) -> np.ndarray:
    """All distributions on 2^k outcomes with coordinates in multiples of step."""
    n = int(round(1.0 / step))
    if abs(n * step - 1.0) > 1e-12:
        raise ValueError(f"grid step {step} must divide 1")
    m = 1 << k
    if m > 8:
        raise CapacityError(f"simplex grid is limited to k <= 3, got k={k}")
    rows = []
    for bars in itertools.combinations(range(n + m - 1), m - 1):
        b = (-1,) + bars + (n + m - 1,)
        rows.append([b[i + 1] - b[i] - 1 for i in range(m)])
    return np.array(rows, dtype=np.float64) / n


def normalize(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("distribution has negative or non-finite entries")
    s = p.sum()
    if s <= 0:
        raise ValueError("distribution has zero total mass")
    if abs(s - 1.0) > NORM_TOL:
        warnings.warn(f"distribution sums to {s!r}; normalizing", stacklevel=2)
    return p / s


def from_spec(spec: dict, k: int | None = None) -> np.ndarray:
    """Distribution from the JSON format.

    ``{"k": 2, "p": {"++": 0.375, ...}}`` (missing labels get 0), or
    ``{"kind": "uniform"}``, ``{"kind": "point", "y": "++"}``,
    ``{"kind": "theorem3" | "mixture", "y": "++", "eps": 0.1667}``.
    """
    if not isinstance(spec, dict):
        raise ValueError("distribution spec must be a JSON object")
    kind = spec.get("kind", "table" if "p" in spec else None)
    if "k" in spec:
        if k is not None and int(spec["k"]) != k:
            raise ValueError(f"distribution has k={spec['k']} but the set function has k={k}")
        k = int(spec["k"])
    if kind == "table":
        table = spec["p"]
        if isinstance(table, dict):
            keys = list(table)
            kk = len(parse(keys[0])) if keys else k
            if k is None:
                k = kk
            p = np.zeros(1 << k)
            for key, val in table.items():
                y = as_label(parse(key))
                if y.shape[0] != k:
                    raise ValueError(f"label {key!r} has length {y.shape[0]}, expected {k}")
                p[label_index(y)] += float(val)
        else:
            p = np.asarray(table, dtype=np.float64)
            if k is None:
                k = int(p.shape[0]).bit_length() - 1
            if p.shape[0] != 1 << k:
                raise ValueError(f"distribution list has {p.shape[0]} entries, expected {1 << k}")
        return normalize(p)
    if kind == "uniform":
        if k is None:
            raise ValueError("uniform distribution needs k")
        return uniform(k)
    if kind in ("point", "theorem3", "mixture"):
        y = as_label(spec["y"])
        if k is not None and y.shape[0] != k:
            raise ValueError(f"label {spec['y']!r} has length {y.shape[0]}, expected {k}")
        if kind == "point":
            return point_mass(y)
        return mixture(y, float(spec["eps"]))
    raise ValueError(f"unknown distribution kind {kind!r}; expected table, uniform, point, theorem3")


def load_distribution(path, k: int | None = None) -> np.ndarray:
    with open(Path(path)) as fh:
        return from_spec(json.load(fh), k)


def to_spec(p, k: int) -> dict:
    Y = labels(k)
    return {"k": k, "p": {fmt(Y[b]): float(p[b]) for b in range(1 << k)}}

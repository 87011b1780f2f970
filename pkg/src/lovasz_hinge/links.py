"""Link envelope, calibrated links, and region maps.

The envelope of a point u is computed on the clipped point: sort |u|
descending, add sentinels 1 + eps in front and -eps at the end, and keep
chain position i whenever the gap between entries i and i + 1 is at least
2 eps.  Position i stands for the report 1_{perm, i} * sign*(u).

Gap comparisons that land within ``GAP_BAND`` of 2 eps in floating point are
re-decided exactly, treating every float input as the rational it encodes,
so boundary points are classified the same way on every backend.

``envelope_bruteforce`` recomputes the envelope from its definition: the
intersection of all face vertex sets whose convex hull is sup-norm closer
than eps to the clipped point.
"""

from __future__ import annotations

import colorsys
import csv
import hashlib
import io
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels as K
from .lovasz import cell_vertices, clip, sign_star
from .spaces import fmt, report_index, reports
from .target import CapacityError, _cells

MAX_BRUTE_K = 3
# float LP optima within this distance of eps are settled exactly
LP_MARGIN = 1e-10
# relative slack when checking eps <= 1/(2k), so the float 1/(2k) is accepted
EPS_REL_SLACK = 1e-12
MIN_RESOLUTION = 8


def check_eps(eps: float, k: int | None = None) -> float:
    """Validate eps > 0, and eps <= 1/(2k) when k is given."""
    eps = float(eps)
    if not np.isfinite(eps) or eps <= 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if k is not None and eps > (1.0 / (2 * k)) * (1 + EPS_REL_SLACK):
        raise ValueError(
            f"eps must lie in (0, 1/(2k)] = (0, {1.0 / (2 * k):.17g}] for the envelope to be nonempty "
            f"everywhere; got eps={eps!r} with k={k}"
        )
    return eps


def _points(U) -> np.ndarray:
    U = np.asarray(U, dtype=np.float64)
    if U.ndim == 1:
        U = U[None, :]
    if not np.all(np.isfinite(U)):
        raise ValueError("points must be finite")
    return np.ascontiguousarray(U)


# ---------------------------------------------------------------------------
# closed form


def _exact_qual(u, eps: float) -> np.ndarray:
    a = [Fraction(float(min(abs(x), 1.0))) for x in u]
    order = sorted(range(len(a)), key=lambda i: -a[i])
    e = Fraction(eps)
    s = [1 + e] + [a[i] for i in order] + [-e]
    return np.array([s[i] - s[i + 1] >= 2 * e for i in range(len(a) + 1)])


def envelope_positions(U, eps: float):
    """Chain order, signs, and qualifying positions for a batch of points.

    Returns ``(order, sgn, qual)``; ``qual[r, i]`` says whether
    ``1_{order[r], i} * sgn[r]`` is in the envelope of ``U[r]``.
    """
    eps = check_eps(eps)
    U = _points(U)
    order, sgn, qual, unsure = K.active.envelope_gaps(U, eps)
    for r in np.nonzero(unsure.any(axis=1))[0]:
        qual[r] = _exact_qual(U[r], eps)
    return order, sgn, qual


def _chain_report(order, sgn, i) -> np.ndarray:
    v = np.zeros(order.shape[0], dtype=np.int64)
    v[order[:i]] = 1
    return v * sgn


def envelope(u, eps: float) -> frozenset:
    """Set of reports (as int tuples) allowed at u."""
    order, sgn, qual = envelope_positions(u, eps)
    return frozenset(tuple(_chain_report(order[0], sgn[0], i).tolist()) for i in np.nonzero(qual[0])[0])


def envelope_codes(U, eps: float) -> np.ndarray:
    """Envelope of every row as a bitset over base-3 report indices."""
    order, sgn, qual = envelope_positions(U, eps)
    n, k = order.shape
    if k > MAX_BRUTE_K:
        raise CapacityError(f"report bitsets are limited to k <= {MAX_BRUTE_K}, got k={k}")
    codes = np.zeros(n, dtype=np.int64)
    chain = np.zeros((n, k), dtype=np.int64)
    rows = np.arange(n)
    for i in range(k + 1):
        if i > 0:
            chain[rows, order[:, i - 1]] = 1
        idx = report_index(chain * sgn)
        codes |= np.where(qual[:, i], np.left_shift(np.int64(1), idx), 0)
    return codes


def _select(U, eps: float, largest: bool) -> np.ndarray:
    U = _points(U)
    check_eps(eps, U.shape[1])
    order, sgn, qual = envelope_positions(U, eps)
    n, k = order.shape
    if not np.all(qual.any(axis=1)):
        bad = int(np.nonzero(~qual.any(axis=1))[0][0])
        raise ValueError(f"empty envelope at u={U[bad].tolist()} with eps={eps!r}")
    pos = np.arange(k + 1)[None, :]
    if largest:
        i = np.where(qual, pos, -1).max(axis=1)
    else:
        i = np.where(qual, pos, k + 1).min(axis=1)
    inside = np.arange(k)[None, :] < i[:, None]
    V = np.zeros((n, k), dtype=np.int64)
    np.put_along_axis(V, order, inside.astype(np.int64), axis=1)
    return V * sgn


def link_star_batch(U, eps: float) -> np.ndarray:
    return _select(U, eps, largest=True)


def link_diamond_batch(U, eps: float) -> np.ndarray:
    return _select(U, eps, largest=False)


def link_star(u, eps: float) -> np.ndarray:
    """Envelope member with the fewest abstentions."""
    return link_star_batch(u, eps)[0]


def link_diamond(u, eps: float) -> np.ndarray:
    """Envelope member with the most abstentions."""
    return link_diamond_batch(u, eps)[0]


def threshold_link_batch(U, c: float) -> np.ndarray:
    if not c > 0:
        raise ValueError(f"threshold c must be positive, got {c!r}")
    U = _points(U)
    return np.where(np.abs(U) < c, 0, np.sign(U)).astype(np.int64)


def threshold_link(u, c: float) -> np.ndarray:
    return threshold_link_batch(u, c)[0]


def sign_link_batch(U) -> np.ndarray:
    return sign_star(_points(U))


@dataclass(frozen=True)
class Link:
    """A named batch link; calling it on a single point returns one report."""

    name: str
    batch: Callable[[np.ndarray], np.ndarray]
    eps: float | None = None

    def __call__(self, u) -> np.ndarray:
        return self.batch(np.asarray(u, dtype=np.float64)[None, :])[0]


def make_link(name: str, eps: float | None = None, k: int | None = None) -> Link:
    """``star``, ``diamond`` (need eps), ``threshold:c``, or ``sign``."""
    name = name.strip()
    if name in ("star", "diamond"):
        if eps is None:
            if k is None:
                raise ValueError(f"link {name!r} needs eps")
            eps = 1.0 / (2 * k)
        check_eps(eps, k)
        fn = link_star_batch if name == "star" else link_diamond_batch
        return Link(name, lambda U, fn=fn, e=eps: fn(U, e), eps)
    if name.startswith("threshold"):
        _, _, c = name.partition(":")
        try:
            c = float(c) if c else 0.5
        except ValueError:
            raise ValueError(f"bad threshold in link {name!r}") from None
        threshold_link_batch(np.zeros((1, 1)), c)
        return Link(f"threshold:{c:g}", lambda U, c=c: threshold_link_batch(U, c))
    if name == "sign":
        return Link("sign", sign_link_batch)
    raise ValueError(f"unknown link {name!r}; expected star, diamond, threshold:c or sign")


# ---------------------------------------------------------------------------
# brute force from the definition


@dataclass(frozen=True)
class _FaceTable:
    verts: np.ndarray  # (nf, k + 1, k), padded
    sizes: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    masks: np.ndarray  # report-index bitsets


@lru_cache(maxsize=None)
def face_table(k: int) -> _FaceTable:
    """Every distinct nonempty vertex subset of every cell, deduplicated."""
    if k > MAX_BRUTE_K:
        raise CapacityError(f"brute-force envelope enumerates all faces and is limited to k <= {MAX_BRUTE_K}, got k={k}")
    seen: dict = {}
    for perm, y, idx in _cells(k):
        V = cell_vertices(perm, y)
        for r in range(1, k + 2):
            for sub in itertools.combinations(range(k + 1), r):
                key = frozenset(idx[i] for i in sub)
                if key not in seen:
                    seen[key] = V[list(sub)]
    keys = sorted(seen, key=lambda s: (len(s), sorted(s)))
    nf = len(keys)
    verts = np.zeros((nf, k + 1, k))
    sizes = np.zeros(nf, dtype=np.int64)
    lo = np.zeros((nf, k))
    hi = np.zeros((nf, k))
    masks = np.zeros(nf, dtype=np.int64)
    for f, key in enumerate(keys):
        W = seen[key]
        verts[f, : len(W)] = W
        sizes[f] = len(W)
        lo[f] = W.min(axis=0)
        hi[f] = W.max(axis=0)
        for r in key:
            masks[f] |= 1 << r
    return _FaceTable(verts, sizes, lo, hi, masks)


def _solve_exact(M, rhs):
    n = len(M)
    M = [row[:] + [b] for row, b in zip(M, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                fac = M[r][col] / M[col][col]
                M[r] = [a - fac * b for a, b in zip(M[r], M[col])]
    return [M[r][n] / M[r][r] for r in range(n)]


def lp_distance_exact(W, x) -> Fraction:
    """Exact sup-norm distance from x to conv(W), by basic-solution enumeration."""
    W = [[int(c) for c in w] for w in np.asarray(W)]
    x = [Fraction(v) for v in x]
    m, k = len(W), len(x)
    A, b = [], []
    for j in range(k):
        A.append([Fraction(W[i][j]) for i in range(m)] + [Fraction(-1)])
        b.append(x[j])
        A.append([Fraction(-W[i][j]) for i in range(m)] + [Fraction(-1)])
        b.append(-x[j])
    for i in range(m):
        row = [Fraction(0)] * (m + 1)
        row[i] = Fraction(-1)
        A.append(row)
        b.append(Fraction(0))
    eq = [Fraction(1)] * m + [Fraction(0)]
    best = None
    for combo in itertools.combinations(range(len(A)), m):
        z = _solve_exact([eq] + [A[r] for r in combo], [Fraction(1)] + [b[r] for r in combo])
        if z is None:
            continue
        if all(sum((a * zz for a, zz in zip(A[r], z)), Fraction(0)) <= b[r] for r in range(len(A))):
            if best is None or z[m] < best:
                best = z[m]
    return best


def lp_distance(W, x) -> float:
    """Float sup-norm distance from x to conv(W)."""
    W = np.ascontiguousarray(W, dtype=np.float64)
    return float(K.active.lp_distance(W, W.shape[0], np.ascontiguousarray(x, dtype=np.float64)))


def envelope_bruteforce_codes(U, eps: float) -> np.ndarray:
    eps = check_eps(eps)
    U = _points(U)
    k = U.shape[1]
    T = face_table(k)
    X = np.ascontiguousarray(clip(U))
    status = K.active.face_status(X, eps, T.verts, T.sizes, T.lo, T.hi, LP_MARGIN)
    full = np.int64((1 << 3 ** k) - 1)
    codes = np.full(X.shape[0], full, dtype=np.int64)
    e = Fraction(eps)
    for r in range(X.shape[0]):
        near = status[r] == 1
        for f in np.nonzero(status[r] == 2)[0]:
            W = T.verts[f, : T.sizes[f]]
            if lp_distance_exact(W, X[r]) < e:
                near[f] = True
        codes[r] = np.bitwise_and.reduce(T.masks[near]) if near.any() else full
    return codes


def envelope_bruteforce(u, eps: float) -> frozenset:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    return decode(envelope_bruteforce_codes(u, eps)[0], u.shape[0])


def decode(code: int, k: int) -> frozenset:
    """Report bitset to a set of int tuples."""
    V = reports(k)
    return frozenset(tuple(V[r].tolist()) for r in range(3 ** k) if int(code) >> r & 1)


# ---------------------------------------------------------------------------
# region maps


WHICH = ("star", "diamond", "envelope")


@dataclass(frozen=True)
class RegionMap:
    """Grid of codes; ``codes[j, i]`` is the cell at x = xs[i], y = ys[j].

    For ``star`` and ``diamond`` a code is a base-3 report index, for
    ``envelope`` a bitset over report indices.
    """

    which: str
    eps: float
    k: int
    xs: np.ndarray
    ys: np.ndarray
    codes: np.ndarray
    axes: tuple = (0, 1)
    base: tuple = ()

    def label(self, code: int) -> str:
        if self.which == "envelope":
            return "|".join(fmt(np.array(v)) for v in sorted(decode(code, self.k), key=lambda t: report_index(np.array(t))))
        return fmt(reports(self.k)[int(code)])

    def report_at(self, x: float, y: float) -> str:
        i = int(np.argmin(np.abs(self.xs - x)))
        j = int(np.argmin(np.abs(self.ys - y)))
        return self.label(self.codes[j, i])

    def cell_counts(self) -> dict:
        vals, counts = np.unique(self.codes, return_counts=True)
        return {self.label(v): int(c) for v, c in zip(vals, counts)}


def cell_centers(resolution: int) -> np.ndarray:
    # integer numerators keep the grid exactly symmetric under negation
    return (2.0 * np.arange(resolution) + 1.0 - resolution) / resolution


def region_map(eps: float, resolution: int, which: str = "star", k: int = 2, axes=(0, 1), base=None) -> RegionMap:
    """Sample [-1, 1]^2 (or a 2-D slice of [-1, 1]^k) at cell centers."""
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}, got {which!r}")
    if k < 2:
        raise ValueError("region maps need k >= 2")
    if which == "envelope":
        check_eps(eps)
    else:
        check_eps(eps, k)
    a0, a1 = (int(a) for a in axes)
    if a0 == a1 or not (0 <= a0 < k and 0 <= a1 < k):
        raise ValueError(f"bad slice axes {axes!r} for k={k}")
    base = np.zeros(k) if base is None else np.asarray(base, dtype=np.float64).reshape(-1)
    if base.shape[0] != k:
        raise ValueError(f"slice base point must have length {k}")
    c = cell_centers(resolution)
    X, Y = np.meshgrid(c, c)
    U = np.tile(base, (resolution * resolution, 1))
    U[:, a0] = X.ravel()
    U[:, a1] = Y.ravel()
    if which == "envelope":
        codes = envelope_codes(U, eps)
    else:
        fn = link_star_batch if which == "star" else link_diamond_batch
        codes = report_index(fn(U, eps))
    return RegionMap(which, float(eps), k, c, c.copy(), codes.reshape(resolution, resolution), (a0, a1), tuple(base.tolist()))


def count_regions(rm: RegionMap) -> dict:
    """Number of 4-connected components per code."""
    from scipy import ndimage

    out = {}
    for v in np.unique(rm.codes):
        _, n = ndimage.label(rm.codes == v)
        out[rm.label(v)] = int(n)
    return out


def region_csv(rm: RegionMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "report"])
    labels = {int(v): rm.label(v) for v in np.unique(rm.codes)}
    for j, yv in enumerate(rm.ys):
        for i, xv in enumerate(rm.xs):
            w.writerow([repr(float(xv)), repr(float(yv)), labels[int(rm.codes[j, i])]])
    return buf.getvalue()


def _report_color(idx: int, k: int) -> str:
    # fixed palette: hue from the report index, lightness from the abstain count
    v = reports(k)[idx]
    n = 3 ** k
    zeros = int(np.sum(v == 0))
    h = (idx * 0.61803398875) % 1.0
    light = 0.45 + 0.35 * zeros / max(k, 1)
    r, g, b = colorsys.hls_to_rgb(h, light, 0.65 if idx != (n - 1) // 2 else 0.0)
    return "#%02x%02x%02x" % (round(r * 255), round(g * 255), round(b * 255))


def _set_color(code: int) -> str:
    d = hashlib.sha256(str(int(code)).encode()).digest()
    return "#%02x%02x%02x" % (d[0], d[1], d[2])


def palette(k: int) -> list[str]:
    return [_report_color(i, k) for i in range(3 ** k)]


def region_svg(rm: RegionMap, size: int = 400) -> str:
    """SVG with run-length merged rectangles per row; y increases upward."""
    res = rm.codes.shape[0]
    scale = size / res
    color = (lambda c: _set_color(c)) if rm.which == "envelope" else (lambda c: _report_color(int(c), rm.k))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" shape-rendering="crispEdges">',
        f"<title>{rm.which} eps={rm.eps!r}</title>",
    ]
    for j in range(res):
        row = rm.codes[j]
        top = (res - 1 - j) * scale
        start = 0
        for i in range(1, res + 1):
            if i == res or row[i] != row[start]:
                out.append(
                    f'<rect x="{start * scale:.6g}" y="{top:.6g}" width="{(i - start) * scale:.6g}" '
                    f'height="{scale:.6g}" fill="{color(row[start])}"/>'
                )
                start = i
    for v in np.unique(rm.codes):
        jj, ii = np.nonzero(rm.codes == v)
        cx = (ii.mean() + 0.5) * scale
        cy = (res - 1 - jj.mean() + 0.5) * scale
        out.append(
            f'<text x="{cx:.6g}" y="{cy:.6g}" font-size="{max(8, size // 40)}" font-family="monospace" '
            f'text-anchor="middle" dominant-baseline="middle">{rm.label(v)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_region_map(rm: RegionMap, out_dir, stem: str | None = None) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or f"map_{rm.which}"
    csv_path = out_dir / f"{stem}.csv"
    svg_path = out_dir / f"{stem}.svg"
    csv_path.write_text(region_csv(rm))
    svg_path.write_text(region_svg(rm))
    return csv_path, svg_path

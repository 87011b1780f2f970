"""Checks that tie the surrogate, the target losses and the links together.

* ``inconsistency_witness`` builds a mixed distribution on which the sign
  link fails for a non-modular f, with all evidence in exact arithmetic.
* ``calibration_scan`` samples distributions, locates near-optimal
  surrogate points (descent trajectories, minimizer faces, boundary points
  and small perturbations), and flags near-optimal points that link outside
  the target property.
* ``embedding_check`` and ``envelope_containment_check`` compare the
  discrete property with the minimizer faces of the expected hinge.
* ``subgradient_descent`` is a generic projected subgradient method; the
  expected-hinge version runs in a compiled kernel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .lovasz import barycentric, check_distribution, clip, expected_hinge_batch, hinge
from .links import Link, envelope_codes
from .setfn import (
    DEFAULT_TOL,
    SetFunction,
    budget_additive,
    concave_cardinality,
    is_modular,
    mean_value_exact,
    modular,
    prune_null_elements,
    random_submodular,
    zero_one,
)
from .spaces import as_label, fmt, label_index, labels, report_index, reports
from .target import (
    abstain_loss,
    abstain_property,
    abstain_table,
    expected_abstain_exact,
    face_vertex_reports,
    minimizer_faces,
    mixture_exact,
    relabel,
    simplex_grid,
    structured_property,
    target_table,
    uniform,
)

OPT_TOL = 1e-7
RESTARTS = 20
SCAN_STEPS = 400
SCAN_EPOCH = 20
START_BOX = 1.5


class NoWitnessError(ValueError):
    """Raised for modular f: the sign link is consistent and no witness exists."""


# ---------------------------------------------------------------------------
# descent


@dataclass
class DescentResult:
    u: np.ndarray
    value: float
    trajectory: np.ndarray | None = None


def _step_size(rule: str, c: float, t: int, epoch: int) -> float:
    if rule == "sqrt":
        return c / math.sqrt(t)
    if rule in ("halving", "geometric"):
        return c * 0.5 ** ((t - 1) // epoch)
    raise ValueError(f"unknown step rule {rule!r}; expected 'sqrt' or 'halving'")


def subgradient_descent(
    objective: Callable[[np.ndarray], float],
    subgradient: Callable[[np.ndarray], np.ndarray],
    u0,
    steps: int,
    c: float = 1.0,
    rule: str = "sqrt",
    epoch: int = 50,
    project: Callable[[np.ndarray], np.ndarray] = clip,
    record: bool = False,
) -> DescentResult:
    """Projected subgradient descent returning the best iterate seen.

    ``rule="sqrt"`` uses c / sqrt(t); ``rule="halving"`` halves the step
    every ``epoch`` steps and restarts each epoch from the best point.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    u = project(np.asarray(u0, dtype=np.float64))
    best_u, best = u.copy(), math.inf
    traj = [] if record else None
    for t in range(1, steps + 2):
        if rule == "halving" and t > 1 and (t - 1) % epoch == 0:
            u = best_u.copy()
        val = float(objective(u))
        if not math.isfinite(val):
            raise FloatingPointError(f"non-finite objective {val!r} at step {t}, u={u.tolist()}")
        if record:
            traj.append(u.copy())
        if val < best:
            best, best_u = val, u.copy()
        if t == steps + 1:
            break
        g = np.asarray(subgradient(u), dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite subgradient at step {t}, u={u.tolist()}")
        u = project(u - _step_size(rule, c, t, epoch) * g)
    return DescentResult(best_u, best, np.array(traj) if record else None)


def descend_expected_hinge(
    f: SetFunction, p, u0, steps: int, c: float = 1.0, rule: str = "geometric", epoch: int = SCAN_EPOCH, record: bool = False
) -> DescentResult:
    """Compiled descent on the expected hinge (same iteration as above)."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    p = check_distribution(p, f.k)
    code = {"sqrt": K.RULE_SQRT, "halving": K.RULE_HALVING, "geometric": K.RULE_GEOMETRIC}.get(rule)
    if code is None:
        raise ValueError(f"unknown step rule {rule!r}")
    u0 = np.ascontiguousarray(u0, dtype=np.float64)
    u, val, traj, ok = K.active.descend(f.values, labels(f.k), p, u0, int(steps), float(c), code, int(epoch), bool(record))
    if not ok:
        raise FloatingPointError("non-finite value or subgradient during descent")
    return DescentResult(u, float(val), traj if record else None)


def polish_in_cell(f: SetFunction, p, u) -> DescentResult:
    """Best of u and the vertices of the cube cell containing clip(u).

    The expected hinge is affine on each cell, so its minimum over the cell
    is attained at a vertex; this removes the residual error that
    subgradient steps leave in narrow valleys.
    """
    x = clip(u)
    W = barycentric(x).vertices().astype(np.float64)
    cand = np.concatenate([x[None, :], W])
    vals = expected_hinge_batch(f, cand, p)
    j = int(np.argmin(vals))
    return DescentResult(cand[j], float(vals[j]))


def minimize_expected_hinge(
    f: SetFunction,
    p,
    rng: np.random.Generator,
    restarts: int = RESTARTS,
    steps: int = SCAN_STEPS,
    rule: str = "geometric",
    epoch: int = SCAN_EPOCH,
    c: float = 1.0,
    record: bool = False,
    polish: bool = True,
) -> tuple[DescentResult, list]:
    """Best of several descents from uniform starts in [-1.5, 1.5]^k.

    Returns the best result (polished unless ``polish=False``) and the raw
    runs.
    """
    runs = [
        descend_expected_hinge(f, p, rng.uniform(-START_BOX, START_BOX, f.k), steps, c, rule, epoch, record)
        for _ in range(restarts)
    ]
    best = min(runs, key=lambda r: r.value)
    if polish:
        pol = polish_in_cell(f, p, best.u)
        if pol.value < best.value:
            best = pol
    return best, runs


def cube_lp_minimum(f: SetFunction, p) -> tuple[float, np.ndarray]:
    """Minimum of the expected hinge over [-1, 1]^k as a linear program.

    On the cube the hinge of label y is F(1 - u y), and for submodular f the
    extension is the maximum of s . x over the greedy vertices s of the base
    polytope, one per permutation.  Minimizing over the cube suffices since
    clipping never increases the hinge.
    """
    from scipy.optimize import linprog

    p = check_distribution(p, f.k)
    k = f.k
    Y = labels(k)
    S = []
    for perm in itertools.permutations(range(k)):
        s = np.zeros(k)
        mask = 0
        for j in perm:
            s[j] = f.values[mask | 1 << j] - f.values[mask]
            mask |= 1 << j
        S.append(s)
    S = np.unique(np.array(S), axis=0)
    L = Y.shape[0]
    # variables: u (k), t (L); t_y >= s . (1 - u * y)  <=>  -(s * y) . u - t_y <= -sum(s)
    rows, rhs = [], []
    for a in range(L):
        for s in S:
            row = np.zeros(k + L)
            row[:k] = -s * Y[a]
            row[k + a] = -1.0
            rows.append(row)
            rhs.append(-s.sum())
    cost = np.concatenate([np.zeros(k), p])
    bounds = [(-1.0, 1.0)] * k + [(None, None)] * L
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    return float(res.fun), res.x[:k]


# ---------------------------------------------------------------------------
# inconsistency witness


@dataclass
class WitnessReport:
    """Evidence that the sign link is not calibrated for a non-modular f.

    Everything is computed on the pruned function (elements with f({i}) = 0
    removed); ``kept`` maps original 1-based elements to pruned positions and
    ``v_full`` / ``y_prime_full`` lift the reports back with v_i = y_i on
    removed elements.
    """

    f_name: str
    k: int
    kept: dict
    eps_wit: Fraction
    eps_upper: Fraction
    eps_alt: Fraction
    y: np.ndarray
    v: np.ndarray
    y_prime: np.ndarray
    v_full: np.ndarray
    y_prime_full: np.ndarray
    loss_table: dict
    loss_table_prime: dict
    target_minimizers: list
    target_minimizers_prime: list
    abstain_minimizers: list
    minimum: Fraction
    best_in_labels: Fraction
    f_full: Fraction
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "f": self.f_name,
            "k": self.k,
            "kept_elements": {str(a): b for a, b in self.kept.items()},
            "eps_wit": float(self.eps_wit),
            "eps_wit_exact": str(self.eps_wit),
            "eps_upper_bound": float(self.eps_upper),
            "eps_alt_formula": float(self.eps_alt),
            "eps_alt_formula_valid": bool(0 < self.eps_alt < 1),
            "y": fmt(self.y),
            "v": fmt(self.v),
            "y_prime": fmt(self.y_prime),
            "v_full": fmt(self.v_full),
            "y_prime_full": fmt(self.y_prime_full),
            "min_abstain_value": float(self.minimum),
            "min_abstain_value_exact": str(self.minimum),
            "best_label_value": float(self.best_in_labels),
            "best_label_value_exact": str(self.best_in_labels),
            "f_full_set": float(self.f_full),
            "abstain_minimizers": self.abstain_minimizers,
            "target_minimizers": self.target_minimizers,
            "target_minimizers_prime": self.target_minimizers_prime,
            "loss_table": {key: float(val) for key, val in self.loss_table.items()},
            "loss_table_exact": {key: str(val) for key, val in self.loss_table.items()},
            "loss_table_prime": {key: float(val) for key, val in self.loss_table_prime.items()},
            "checks": dict(self.checks),
            "ok": self.ok,
        }


def _expected_target_exact(f: SetFunction, p) -> list:
    ev = f.exact_values
    Y = labels(f.k)
    out = []
    for r in Y:
        out.append(sum((q * ev[_diff_mask(r, y)] for y, q in zip(Y, p) if q), Fraction(0)))
    return out


def _diff_mask(r, y) -> int:
    return int(np.sum((r != y) << np.arange(r.shape[0])))


def inconsistency_witness(f: SetFunction, y, eps_wit=None) -> WitnessReport:
    """Mixed distribution (1 - eps) uniform + eps delta_y exposing an abstaining optimum."""
    y = as_label(y).astype(np.int64)
    if y.shape[0] != f.k:
        raise ValueError(f"y must be a label of length k={f.k}")
    g, kept = prune_null_elements(f)
    if g.k == 0 or is_modular(g):
        raise NoWitnessError("no witness exists (consistent case): f is modular after removing null elements")
    pos = [orig - 1 for orig in sorted(kept)]
    y1 = y[pos]
    fbar = mean_value_exact(g)
    ffull = g.exact_values[g.full]
    upper = 1 - ffull / (2 * fbar)
    alt = fbar / (2 * fbar - ffull)
    eps = upper / 2 if eps_wit is None else Fraction(eps_wit)
    if not 0 < eps < upper:
        raise ValueError(
            f"eps_wit must lie in (0, 1 - f([k])/(2 fbar)) = (0, {float(upper):.17g}) for this f; got {float(eps):.17g}"
        )

    V = reports(g.k)
    Y = labels(g.k).astype(np.int64)
    p = mixture_exact(y1, eps)
    table = expected_abstain_exact(g, p)
    m = min(table)
    mins = [i for i, val in enumerate(table) if val == m]
    label_rows = [int(report_index(r)) for r in Y]
    best_label = min(table[i] for i in label_rows)

    tgt = _expected_target_exact(g, p)
    tmin = min(tgt)
    target_mins = [b for b, val in enumerate(tgt) if val == tmin]

    nonlabel = [i for i in mins if np.any(V[i] == 0)]
    checks = {
        "target_property_is_y": target_mins == [int(label_index(y1))],
        "min_abstain_le_f_full": m <= ffull,
        "f_full_lt_best_label": ffull < best_label,
        "best_label_equals_mixture_value": best_label == (1 - eps) * 2 * fbar,
        "abstaining_minimizer_exists": bool(nonlabel),
    }
    v = V[nonlabel[0]] if nonlabel else V[mins[0]]
    y_prime = np.where(v == 0, -y1, y1)
    r = y1 * y_prime
    p_prime = mixture_exact(y_prime, eps)
    table_prime = expected_abstain_exact(g, p_prime)
    tgt_prime = _expected_target_exact(g, p_prime)
    tmin_prime = min(tgt_prime)
    target_mins_prime = [b for b, val in enumerate(tgt_prime) if val == tmin_prime]
    # relabeling: the table under p' is the table under p with reports multiplied by r
    perm = report_index(V * r[None, :])
    checks.update(
        {
            "v_not_a_label": bool(np.any(v == 0)),
            "y_prime_differs_exactly_on_abstentions": bool(np.array_equal(y_prime != y1, v == 0)),
            "relabeled_distribution_matches": [q for q in relabel(np.array(p, dtype=object), r)] == p_prime,
            "relabeled_table_matches": all(table_prime[int(perm[i])] == table[i] for i in range(len(table))),
            "v_minimizes_under_p_prime": table_prime[int(report_index(v))] == min(table_prime),
            "target_property_is_y_prime": target_mins_prime == [int(label_index(y_prime))],
        }
    )

    v_full = y.copy()
    yp_full = y.copy()
    v_full[pos] = v
    yp_full[pos] = y_prime
    fmt_t = lambda T: {fmt(V[i]): T[i] for i in range(len(T))}  # noqa: E731
    return WitnessReport(
        f_name=f.name,
        k=g.k,
        kept=kept,
        eps_wit=eps,
        eps_upper=upper,
        eps_alt=alt,
        y=y1,
        v=v,
        y_prime=y_prime,
        v_full=v_full,
        y_prime_full=yp_full,
        loss_table=fmt_t(table),
        loss_table_prime=fmt_t(table_prime),
        target_minimizers=[fmt(Y[b]) for b in target_mins],
        target_minimizers_prime=[fmt(Y[b]) for b in target_mins_prime],
        abstain_minimizers=[fmt(V[i]) for i in mins],
        minimum=m,
        best_in_labels=best_label,
        f_full=ffull,
        checks=checks,
    )


# ---------------------------------------------------------------------------
# calibration scans


@dataclass
class ScanViolation:
    dist_index: int
    p: np.ndarray
    u: np.ndarray
    report: np.ndarray
    margin: float
    surrogate_excess: float

    def to_dict(self) -> dict:
        return {
            "dist_index": self.dist_index,
            "p": self.p.tolist(),
            "u": self.u.tolist(),
            "report": fmt(self.report),
            "margin": self.margin,
            "surrogate_excess": self.surrogate_excess,
        }


@dataclass
class CalibrationReport:
    """Scan outcome for one link.

    ``margin`` of a violation is the target-loss excess of the linked
    report; ``min_margin`` is the smallest surrogate excess over all probes
    that link outside the property (inf if none do).
    """

    f_name: str
    link: str
    target: str
    n_dists: int
    n_probes: int = 0
    violations: list = field(default_factory=list)
    min_margin: float = math.inf
    max_descent_gap: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self, max_violations: int = 20) -> dict:
        return {
            "f": self.f_name,
            "link": self.link,
            "target": self.target,
            "n_dists": self.n_dists,
            "n_probes": self.n_probes,
            "n_violations": len(self.violations),
            "violations": [v.to_dict() for v in self.violations[:max_violations]],
            "min_margin": self.min_margin if math.isfinite(self.min_margin) else None,
            "max_descent_gap": self.max_descent_gap,
            "ok": self.ok,
        }


def sample_distributions(k: int, n: int, seed: int, sampler: str = "dirichlet") -> np.ndarray:
    """Dirichlet(1) draws with per-index generators, or the step-0.05 grid."""
    if sampler == "dirichlet":
        return np.array([np.random.default_rng([seed, i]).dirichlet(np.ones(1 << k)) for i in range(n)]).reshape(n, 1 << k)
    if sampler == "grid":
        return simplex_grid(k, 0.05)
    raise ValueError(f"unknown sampler {sampler!r}; expected 'dirichlet' or 'grid'")


_PERTURB_RADII = (1e-6, 1e-3, 0.05, 0.2)
_TINY = 1e-9


def _directions(k: int, rng: np.random.Generator, n_random: int) -> np.ndarray:
    eye = np.eye(k)
    rand = rng.choice([-1.0, 1.0], size=(n_random, k))
    return np.concatenate([eye, -eye, rand])


def _bisect(link: Link, A: np.ndarray, B: np.ndarray, iters: int = 40):
    """Shrink segments [A, B] with different link values onto the switch point."""
    lo, hi = A.copy(), B.copy()
    ra = report_index(link.batch(lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        same = report_index(link.batch(mid)) == ra
        lo[same] = mid[same]
        hi[~same] = mid[~same]
    return lo, hi


def _face_anchors(faces, rng: np.random.Generator, per_face: int = 3):
    """Vertices, centroids and random points of every face, grouped per face."""
    groups = []
    for F in faces:
        W = F.vertices().astype(np.float64)
        pts = [W, W.mean(axis=0, keepdims=True)]
        if len(W) > 1:
            pts.append(rng.dirichlet(np.ones(len(W)), size=per_face) @ W)
        groups.append(np.concatenate(pts))
    return groups


def _scan_one(f, p, links, rng, target, restarts, steps, opt_tol, tol):
    """Probe one distribution; returns per-link lists and bookkeeping."""
    k = f.k
    vals_v = abstain_table(f) @ p
    m = float(vals_v.min())
    if target == "abstain":
        prop = abstain_property(f, p, tol)
        member = np.zeros(3 ** k, dtype=bool)
        member[prop.members] = True
        tvals = vals_v
        tmin = m
    else:
        prop = structured_property(f, p, tol)
        tvals = target_table(f) @ p
        tmin = float(tvals.min())
        member = np.zeros(1 << k, dtype=bool)
        member[prop.members] = True

    best, runs = minimize_expected_hinge(f, p, rng, restarts, steps, record=True)
    gap = best.value - m
    faces = minimizer_faces(f, p, tol)
    groups = _face_anchors(faces, rng)
    anchors = np.concatenate(groups)
    traj = np.concatenate([r.trajectory for r in runs])

    base = [anchors]
    for link in links:
        # boundary points between anchors of one face that link differently
        A, B = [], []
        for G in groups:
            R = report_index(link.batch(G))
            i, j = np.nonzero(R[:, None] < R[None, :])
            A.append(G[i])
            B.append(G[j])
        A, B = np.concatenate(A), np.concatenate(B)
        if len(A):
            lo, hi = _bisect(link, A, B)
            base += [lo, hi]
    base = np.concatenate(base)
    D = _directions(k, rng, 4)
    tiny = (base[:, None, :] + _TINY * D[None, :, :]).reshape(-1, k)
    far = []
    for rad in _PERTURB_RADII:
        far.append(base + rad * rng.choice([-1.0, 1.0], size=base.shape))
        far.append(base + rad * rng.uniform(-1, 1, size=base.shape))
    P = np.concatenate([traj, base, tiny] + far)
    ev = expected_hinge_batch(f, P, p) - m
    out = []
    for link in links:
        R = link.batch(P)
        idx = report_index(R) if target == "abstain" else label_index(R)
        if target != "abstain" and np.any(R == 0):
            raise ValueError("structured target needs a link into {-1, 1}^k")
        wrong = ~member[idx]
        bad = np.nonzero(wrong & (ev <= opt_tol))[0]
        mm = float(ev[wrong].min()) if wrong.any() else math.inf
        viol = []
        for b in bad[:5]:
            viol.append((P[b].copy(), R[b].copy(), float(tvals[idx[b]] - tmin), float(ev[b])))
        out.append((viol, mm, len(bad)))
    return out, gap, P.shape[0]


def calibration_scan_many(
    f: SetFunction,
    links: Sequence[Link],
    n_dists: int = 1000,
    seed: int = 0,
    sampler: str = "dirichlet",
    target: str = "abstain",
    restarts: int = RESTARTS,
    steps: int = SCAN_STEPS,
    opt_tol: float = OPT_TOL,
    tol: float = DEFAULT_TOL,
    dists: np.ndarray | None = None,
) -> list[CalibrationReport]:
    """Scan several links on shared distributions and probes."""
    if target not in ("abstain", "structured"):
        raise ValueError(f"target must be 'abstain' or 'structured', got {target!r}")
    P = sample_distributions(f.k, n_dists, seed, sampler) if dists is None else np.asarray(dists, dtype=np.float64)
    reps = [CalibrationReport(f.name, L.name, target, len(P)) for L in links]
    for i, p in enumerate(P):
        rng = np.random.default_rng([seed, i, 1])
        per_link, gap, n = _scan_one(f, p, links, rng, target, restarts, steps, opt_tol, tol)
        for rep, (viol, mm, _) in zip(reps, per_link):
            rep.n_probes += n
            rep.min_margin = min(rep.min_margin, mm)
            rep.max_descent_gap = max(rep.max_descent_gap, gap)
            rep.violations += [ScanViolation(i, p.copy(), u, r, marg, ex) for u, r, marg, ex in viol]
    return reps


def calibration_scan(f: SetFunction, link: Link, n_dists: int = 1000, seed: int = 0, **kw) -> CalibrationReport:
    return calibration_scan_many(f, [link], n_dists, seed, **kw)[0]


# ---------------------------------------------------------------------------
# embedding and containment


@dataclass
class CheckReport:
    name: str
    f_name: str
    n_cases: int = 0
    failures: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self, max_failures: int = 20) -> dict:
        return {
            "check": self.name,
            "f": self.f_name,
            "n_cases": self.n_cases,
            "n_failures": len(self.failures),
            "failures": self.failures[:max_failures],
            **self.info,
            "ok": self.ok,
        }


def embedding_check(f: SetFunction, n_dists: int = 500, seed: int = 0, tol: float = DEFAULT_TOL) -> CheckReport:
    """Loss equality on all (v, y) and property-vs-minimizer-face agreement."""
    rep = CheckReport("embedding", f.name)
    V, Y = reports(f.k), labels(f.k)
    exact_fail = 0
    for v in V:
        for y in Y:
            a = abstain_loss(f, v, y, exact=True)
            h = hinge(f, [Fraction(int(c)) for c in v], y, exact=True)
            if a != h:
                exact_fail += 1
                rep.failures.append({"kind": "loss", "v": fmt(v), "y": fmt(y), "abstain": str(a), "hinge": str(h)})
    rep.info["loss_pairs"] = len(V) * len(Y)
    dists = [uniform(f.k)] + [np.eye(1 << f.k)[b] for b in range(1 << f.k)]
    dists += list(sample_distributions(f.k, n_dists, seed))
    for i, p in enumerate(dists):
        gamma = set(abstain_property(f, p, tol).members.tolist())
        verts = face_vertex_reports(minimizer_faces(f, p, tol))
        if gamma != verts:
            rep.failures.append(
                {
                    "kind": "property",
                    "dist_index": i,
                    "p": np.asarray(p).tolist(),
                    "property": sorted(fmt(V[j]) for j in gamma),
                    "face_vertices": sorted(fmt(V[j]) for j in verts),
                }
            )
    rep.n_cases = len(V) * len(Y) + len(dists)
    rep.info["distributions"] = len(dists)
    return rep


def envelope_containment_check(
    f: SetFunction, eps: float, n_dists: int = 200, n_probes: int = 50, seed: int = 0, tol: float = DEFAULT_TOL
) -> CheckReport:
    """Points within 0.9 eps of a minimizer face link only to minimizer vertices."""
    rep = CheckReport("envelope_containment", f.name, info={"eps": float(eps)})
    V = reports(f.k)
    dists = sample_distributions(f.k, n_dists, seed)
    for i, p in enumerate(dists):
        rng = np.random.default_rng([seed, i, 2])
        faces = minimizer_faces(f, p, tol)
        allowed = 0
        for r in face_vertex_reports(faces):
            allowed |= 1 << r
        pick = rng.integers(len(faces), size=n_probes)
        X = np.array([faces[j].random_point(rng) for j in pick])
        U = X + rng.uniform(-0.9 * eps, 0.9 * eps, size=X.shape)
        U = np.concatenate([V[[r for r in face_vertex_reports(faces)]].astype(np.float64), U])
        codes = envelope_codes(U, eps)
        bad = np.nonzero(codes & ~np.int64(allowed))[0]
        for b in bad[:5]:
            rep.failures.append({"dist_index": i, "u": U[b].tolist(), "extra": int(codes[b] & ~allowed)})
        rep.n_cases += U.shape[0]
    return rep


# ---------------------------------------------------------------------------
# uniform-distribution identities


def uniform_identities(f: SetFunction) -> dict:
    """Exact checks on the uniform distribution and the mean value."""
    n = 1 << f.k
    p = [Fraction(1, n)] * n
    table = expected_abstain_exact(f, p)
    V = reports(f.k)
    fbar = mean_value_exact(f)
    ffull = f.exact_values[f.full]
    labels_rows = [int(report_index(r)) for r in labels(f.k).astype(np.int64)]
    modular_ = is_modular(f)
    return {
        "labels_equal_twice_mean": all(table[i] == 2 * fbar for i in labels_rows),
        "min_over_reports_ge_f_full": min(table) >= ffull,
        "zero_report_equals_f_full": table[int(report_index(np.zeros(f.k, dtype=np.int64)))] == ffull,
        "mean_ge_half_full": fbar >= ffull / 2,
        "equality_iff_modular": (fbar == ffull / 2) == modular_,
        "n_reports": len(V),
    }


# ---------------------------------------------------------------------------
# test suites


def standard_suite(k: int, seed: int = 0) -> list[SetFunction]:
    """zero-one, modular, min(|S|, 2), budget-additive and two random draws."""
    rng = np.random.default_rng([seed, k])
    # dyadic weights keep every table entry exact, so modular identities hold without rounding
    w = np.round(rng.uniform(0.2, 2.0, size=k) * 64) / 64
    suite = [
        zero_one(k),
        modular(w),
        concave_cardinality(k, lambda m: min(m, 2)),
        budget_additive(np.round(rng.uniform(0.2, 1.0, size=k) * 64) / 64, 0.375 * k),
    ]
    suite += [random_submodular(k, np.random.default_rng([seed, k, j])) for j in range(2)]
    return suite

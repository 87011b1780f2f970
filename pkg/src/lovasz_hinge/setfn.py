"""Dense set functions on small ground sets.

A set function on ``[k] = {1, ..., k}`` is stored as a table of ``2**k``
values indexed by subset bitmask: bit ``i - 1`` of the index is set iff
element ``i`` belongs to the subset.  Element numbers in witnesses and
public helpers are 1-based; bit positions are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
MAX_K = 12


class NotInClassError(ValueError):
    """A set function failed one of normalized / increasing / submodular."""

    def __init__(self, prop: str, witness=None, message: str | None = None):
        self.property = prop
        self.witness = witness
        if message is None:
            message = f"set function is not {prop}"
            if witness is not None:
                message += f" (witness: {witness})"
        super().__init__(message)


class Violation(NamedTuple):
    """Local second-difference violation: f(S+i) - f(S) < f(S+i+j) - f(S+j)."""

    S: frozenset
    i: int
    j: int


class PairViolation(NamedTuple):
    S: frozenset
    T: frozenset


def mask_of(elements) -> int:
    """Bitmask of an iterable of 1-based elements."""
    m = 0
    for e in elements:
        m |= 1 << (int(e) - 1)
    return m


def elements_of(mask: int) -> frozenset:
    """1-based elements of a bitmask."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def popcounts(k: int) -> np.ndarray:
    idx = np.arange(1 << k)
    return np.array([bin(int(s)).count("1") for s in idx], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class SetFunction:
    """Immutable table ``values[S]`` for all subsets ``S`` of ``[k]``."""

    k: int
    values: np.ndarray
    name: str = field(default="table")

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise ValueError(f"k must be a nonnegative integer, got {self.k!r}")
        if self.k > MAX_K:
            raise ValueError(f"k={self.k} exceeds the dense-table limit {MAX_K}")
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.shape[0] != 1 << self.k:
            raise ValueError(f"expected {1 << self.k} values for k={self.k}, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("set function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "values", vals)

    def __call__(self, S: int) -> float:
        return self.eval(S)

    def eval(self, S: int) -> float:
        S = int(S)
        if S < 0 or S >= 1 << self.k:
            raise IndexError(f"subset bitmask {S} out of range for k={self.k}")
        return float(self.values[S])

    @property
    def full(self) -> int:
        return (1 << self.k) - 1

    @cached_property
    def exact_values(self) -> tuple:
        """Values as exact rationals (floats are converted without rounding)."""
        return tuple(Fraction(float(v)) for v in self.values)

    @cached_property
    def integer_valued(self) -> bool:
        return bool(np.all(self.values == np.round(self.values)))

    def tol(self, tol: float | None = None) -> float:
        if tol is not None:
            return tol
        return 0.0 if self.integer_valued else DEFAULT_TOL

    def __eq__(self, other):
        if not isinstance(other, SetFunction):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.k, self.values.tobytes()))

    def __repr__(self):
        return f"SetFunction(k={self.k}, name={self.name!r}, values={self.values.tolist()})"

    def to_spec(self) -> dict:
        return {"k": self.k, "type": "table", "values": self.values.tolist()}


# ---------------------------------------------------------------------------
# class checks


def _second_differences(f: SetFunction):
    """Yield (S, i, j, lhs - rhs) for the local submodularity inequalities, i < j."""
    k = f.k
    v = f.values
    for i in range(k):
        bi = 1 << i
        for j in range(i + 1, k):
            bj = 1 << j
            S = np.array([s for s in range(1 << k) if not s & (bi | bj)], dtype=np.int64)
            diff = v[S | bi] + v[S | bj] - v[S | bi | bj] - v[S]
            yield S, i, j, diff


def find_submodularity_violation(f: SetFunction, tol: float | None = None) -> Violation | None:
    """First (S, i, j) with f(S+i) + f(S+j) < f(S+i+j) + f(S) - tol, else None."""
    tol = f.tol(tol)
    for S, i, j, diff in _second_differences(f):
        bad = np.nonzero(diff < -tol)[0]
        if bad.size:
            return Violation(elements_of(int(S[bad[0]])), i + 1, j + 1)
    return None


def is_submodular(f: SetFunction, tol: float | None = None) -> bool:
    return find_submodularity_violation(f, tol) is None


def find_submodularity_violation_pairs(f: SetFunction, tol: float | None = None) -> PairViolation | None:
    """All-pairs check f(S) + f(T) >= f(S|T) + f(S&T); O(4^k), for cross-checking."""
    tol = f.tol(tol)
    n = 1 << f.k
    idx = np.arange(n)
    v = f.values
    for S in range(n):
        diff = v[S] + v - v[S | idx] - v[S & idx]
        bad = np.nonzero(diff < -tol)[0]
        if bad.size:
            return PairViolation(elements_of(S), elements_of(int(bad[0])))
    return None


def find_modularity_violation(f: SetFunction, tol: float | None = None) -> Violation | None:
    tol = f.tol(tol)
    for S, i, j, diff in _second_differences(f):
        bad = np.nonzero(np.abs(diff) > tol)[0]
        if bad.size:
            return Violation(elements_of(int(S[bad[0]])), i + 1, j + 1)
    return None


def is_modular(f: SetFunction, tol: float | None = None) -> bool:
    return find_modularity_violation(f, tol) is None


def find_increasing_violation(f: SetFunction, tol: float | None = None) -> tuple | None:
    """(S, i) with f(S + i) < f(S) - tol, else None."""
    tol = f.tol(tol)
    v = f.values
    for i in range(f.k):
        b = 1 << i
        S = np.array([s for s in range(1 << f.k) if not s & b], dtype=np.int64)
        bad = np.nonzero(v[S | b] < v[S] - tol)[0]
        if bad.size:
            return (elements_of(int(S[bad[0]])), i + 1)
    return None


def is_increasing(f: SetFunction, tol: float | None = None) -> bool:
    return find_increasing_violation(f, tol) is None


def is_normalized(f: SetFunction, tol: float | None = None) -> bool:
    return abs(f.values[0]) <= f.tol(tol)


def find_strict_submodularity_violation(f: SetFunction, tol: float | None = None) -> PairViolation | None:
    """Incomparable pair (S, T) where the submodular inequality is not strict."""
    tol = f.tol(tol)
    n = 1 << f.k
    idx = np.arange(n)
    v = f.values
    for S in range(n):
        incomparable = ((S & ~idx) != 0) & ((idx & ~S) != 0)
        diff = v[S] + v - v[S | idx] - v[S & idx]
        bad = np.nonzero(incomparable & (diff <= tol))[0]
        if bad.size:
            return PairViolation(elements_of(S), elements_of(int(bad[0])))
    return None


def is_strictly_submodular(f: SetFunction, tol: float | None = None) -> bool:
    return find_strict_submodularity_violation(f, tol) is None


def class_violation(f: SetFunction, tol: float | None = None) -> NotInClassError | None:
    """The first failed membership property of the class, as an exception object."""
    if not is_normalized(f, tol):
        return NotInClassError("normalized", message=f"set function is not normalized: f(empty) = {f.values[0]}")
    w = find_increasing_violation(f, tol)
    if w is not None:
        return NotInClassError("increasing", w)
    w = find_submodularity_violation(f, tol)
    if w is not None:
        return NotInClassError("submodular", w)
    return None


def validate(f: SetFunction, tol: float | None = None) -> SetFunction:
    err = class_violation(f, tol)
    if err is not None:
        raise err
    return f


# ---------------------------------------------------------------------------
# summaries


def mean_value(f: SetFunction) -> float:
    """Average of f over all 2^k subsets."""
    return float(np.mean(f.values))


def mean_value_exact(f: SetFunction) -> Fraction:
    return sum(f.exact_values, Fraction(0)) / (1 << f.k)


def singleton_weights(f: SetFunction) -> np.ndarray:
    return np.array([f.values[1 << i] - f.values[0] for i in range(f.k)])


def prune_null_elements(f: SetFunction, tol: float | None = None) -> tuple[SetFunction, dict]:
    """Drop every element i with f({i}) = 0.

    Returns the reduced function and a map from kept original elements to
    their new 1-based positions.  For increasing submodular f such elements
    never change the value of any set; this is checked.
    """
    tol = f.tol(tol)
    null = [i for i in range(f.k) if abs(f.values[1 << i] - f.values[0]) <= tol]
    kept = [i for i in range(f.k) if i not in null]
    if not null:
        return f, {i + 1: i + 1 for i in range(f.k)}
    v = f.values
    for i in null:
        b = 1 << i
        S = np.array([s for s in range(1 << f.k) if not s & b], dtype=np.int64)
        if np.any(np.abs(v[S | b] - v[S]) > tol):
            raise NotInClassError(
                "increasing",
                message=f"element {i + 1} has f({{{i + 1}}}) = 0 but a nonzero marginal; "
                "f is not increasing and submodular",
            )
    new_k = len(kept)
    new_vals = np.empty(1 << new_k)
    for t in range(1 << new_k):
        s = 0
        for pos, orig in enumerate(kept):
            if t >> pos & 1:
                s |= 1 << orig
        new_vals[t] = v[s]
    mapping = {orig + 1: pos + 1 for pos, orig in enumerate(kept)}
    return SetFunction(new_k, new_vals, name=f"{f.name}/pruned"), mapping


# ---------------------------------------------------------------------------
# constructors


def _checked(f: SetFunction) -> SetFunction:
    return validate(f)


def modular(w: Sequence[float]) -> SetFunction:
    """f(S) = sum of w_i over i in S."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if np.any(w < 0):
        i = int(np.nonzero(w < 0)[0][0])
        raise NotInClassError("increasing", message=f"modular weight w_{i + 1} = {w[i]} is negative; f would not be increasing")
    k = w.shape[0]
    vals = np.zeros(1 << k)
    for i in range(k):
        b = 1 << i
        vals[b:2 * b] = vals[:b] + w[i]
    return _checked(SetFunction(k, vals, name=f"modular{tuple(w.tolist())}"))


def zero_one(k: int) -> SetFunction:
    vals = np.ones(1 << k)
    vals[0] = 0.0
    return _checked(SetFunction(k, vals, name=f"zero_one({k})"))


def concave_cardinality(k: int, g: Callable[[int], float] | Sequence[float]) -> SetFunction:
    """f(S) = g(|S|) for g concave and nondecreasing on 0..k with g(0) = 0."""
    if callable(g):
        gv = np.array([float(g(m)) for m in range(k + 1)])
    else:
        gv = np.asarray(g, dtype=np.float64).reshape(-1)
        if gv.shape[0] != k + 1:
            raise ValueError(f"g must list k+1 = {k + 1} values, got {gv.shape[0]}")
    if gv[0] != 0:
        raise NotInClassError("normalized", message=f"g(0) = {gv[0]} must be 0")
    d = np.diff(gv)
    if np.any(d < -DEFAULT_TOL):
        raise NotInClassError("increasing", message="g must be nondecreasing on 0..k")
    if np.any(np.diff(d) > DEFAULT_TOL):
        raise NotInClassError("submodular", message="g must be concave on 0..k")
    vals = gv[popcounts(k)]
    return _checked(SetFunction(k, vals, name=f"concave_cardinality({k}, {gv.tolist()})"))


def budget_additive(w: Sequence[float], cap: float) -> SetFunction:
    """f(S) = min(sum of w_i over S, cap)."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if np.any(w < 0):
        raise NotInClassError("increasing", message="budget-additive weights must be nonnegative")
    if cap < 0:
        raise NotInClassError("increasing", message="budget-additive cap must be nonnegative")
    k = w.shape[0]
    sums = np.zeros(1 << k)
    for i in range(k):
        b = 1 << i
        sums[b:2 * b] = sums[:b] + w[i]
    return _checked(SetFunction(k, np.minimum(sums, cap), name=f"budget_additive({w.tolist()}, {cap})"))


def explicit_table(values: Sequence[float], k: int | None = None, validate_class: bool = True) -> SetFunction:
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if k is None:
        k = int(values.shape[0]).bit_length() - 1
        if 1 << k != values.shape[0]:
            raise ValueError(f"table length {values.shape[0]} is not a power of two")
    f = SetFunction(k, values)
    return _checked(f) if validate_class else f


def random_submodular(k: int, seed: int | np.random.Generator | None = None, max_tries: int = 100) -> SetFunction:
    """Concave-of-cardinality plus a random nonnegative modular part.

    The concave part has strictly decreasing positive increments, so the
    result is non-modular for k >= 2.  Draws are rejected until the table
    passes the class checks.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        inc = np.sort(rng.uniform(0.05, 1.0, size=k))[::-1]
        if k >= 2 and np.any(np.diff(inc) >= 0):
            continue
        g = np.concatenate([[0.0], np.cumsum(inc)])
        w = rng.uniform(0.0, 1.0, size=k) * rng.uniform(0.0, 1.0)
        vals = g[popcounts(k)]
        for i in range(k):
            b = 1 << i
            idx = np.arange(1 << k)
            vals = vals + w[i] * ((idx & b) != 0)
        f = SetFunction(k, vals, name=f"random_submodular({k})")
        if class_violation(f) is None:
            return f
    raise RuntimeError("random_submodular: no valid draw")  # pragma: no cover


def make(kind: str, **params) -> SetFunction:
    builders = {
        "modular": lambda: modular(params["w"]),
        "zero_one": lambda: zero_one(params["k"]),
        "concave_cardinality": lambda: concave_cardinality(params["k"], params["g"]),
        "budget_additive": lambda: budget_additive(params["w"], params["cap"]),
        "table": lambda: explicit_table(params["values"], params.get("k")),
        "explicit_table": lambda: explicit_table(params["values"], params.get("k")),
        "random_submodular": lambda: random_submodular(params["k"], params.get("seed")),
    }
    if kind not in builders:
        raise ValueError(f"unknown set function kind {kind!r}; expected one of {sorted(builders)}")
    try:
        return builders[kind]()
    except KeyError as e:
        raise ValueError(f"set function kind {kind!r} is missing parameter {e.args[0]!r}") from None


def from_spec(spec: dict, validate_class: bool = True) -> SetFunction:
    """Build from the JSON set-function spec format.

    With ``validate_class=False`` an explicit table is accepted even if it is
    outside the class (used by the ``check`` command).
    """
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError("set function spec must be an object with a 'type' field")
    params = {key: val for key, val in spec.items() if key != "type"}
    kind = spec["type"]
    if kind == "table":
        if "values" not in params:
            raise ValueError("table spec needs 'values'")
        f = explicit_table(params["values"], params.get("k"), validate_class=False)
        if "k" in params and int(params["k"]) != f.k:
            raise ValueError(f"table spec: k={params['k']} does not match {len(params['values'])} values")
        return validate(f) if validate_class else f
    return make(kind, **params)


def load(path: str | Path, validate_class: bool = True) -> SetFunction:
    with open(path) as fh:
        spec = json.load(fh)
    f = from_spec(spec, validate_class=validate_class)
    return replace(f, name=spec.get("name", Path(path).stem))

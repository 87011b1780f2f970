import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lovasz_hinge import lovasz as L
from lovasz_hinge import setfn as S
from lovasz_hinge.spaces import labels

import oracles as O

Z2 = S.zero_one(2)
M12 = S.modular([1, 2])


def fn_suite():
    return [S.zero_one(3), S.modular([0.5, 1.0, 2.0]), S.concave_cardinality(3, lambda m: min(m, 2))] + [
        S.random_submodular(3, s) for s in range(3)
    ]


coords = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
pos = st.floats(0, 2, allow_nan=False, allow_infinity=False)


def test_extension_examples():
    assert L.lovasz_extension(Z2, [0.5, 0.2]) == 0.5
    assert L.lovasz_extension(M12, [0.3, 0.4]) == pytest.approx(1.1, abs=1e-15)
    f = S.random_submodular(3, 1)
    for s in range(8):
        x = [(s >> i) & 1 for i in range(3)]
        assert L.lovasz_extension(f, x) == f.values[s]


def test_extension_domain():
    with pytest.raises(ValueError, match="nonnegative"):
        L.lovasz_extension(Z2, [-0.1, 0.2])
    assert L.lovasz_extension(Z2, [-0.1, 0.2], strict=False) == pytest.approx(0.2)
    with pytest.raises(ValueError, match="length"):
        L.lovasz_extension(Z2, [0.1])


@pytest.mark.parametrize("f", fn_suite(), ids=lambda f: f.name)
@settings(max_examples=60, deadline=None)
@given(x=hnp.arrays(np.float64, 3, elements=pos))
def test_extension_matches_permutation_oracle(f, x):
    got = L.lovasz_extension(f, x)
    assert got == pytest.approx(O.lovasz_perm_max(f.values, x), abs=1e-12)
    assert got == pytest.approx(O.lovasz_levelsets(f.values, x), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=4, max_size=4), st.integers(0, 1000))
def test_extension_independent_of_tie_break(ints, seed):
    f = S.random_submodular(4, seed)
    x = np.array(ints, dtype=float) / 4
    ref = L.lovasz_extension(f, x)
    order = L.sort_order(x)
    # every permutation that sorts x descending gives the same telescoped sum
    for perm in itertools.permutations(range(4)):
        if all(x[perm[i]] >= x[perm[i + 1]] for i in range(3)):
            assert O.chain_sum(f.values, x, perm) == pytest.approx(ref, abs=1e-12)
    assert list(order) == sorted(range(4), key=lambda i: (-x[i], i))


def test_extension_exact_mode():
    f = S.zero_one(2)
    assert L.lovasz_extension(f, [Fraction(1, 3), Fraction(1, 5)], exact=True) == Fraction(1, 3)
    g = S.modular([1, 2])
    assert L.lovasz_extension(g, [Fraction(3, 10), Fraction(2, 5)], exact=True) == Fraction(11, 10)


def test_subgradient_examples():
    assert L.lovasz_subgradient(Z2, [0.5, 0.2]).tolist() == [1, 0]
    w = [0.5, 1.0, 2.0]
    assert L.lovasz_subgradient(S.modular(w), [0.1, 0.9, 0.3]).tolist() == w


@pytest.mark.parametrize("f", fn_suite(), ids=lambda f: f.name)
def test_subgradient_inequality_and_finite_differences(f):
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.uniform(0, 1, 3)
        g = L.lovasz_subgradient(f, x)
        for _ in range(10):
            z = rng.uniform(0, 2, 3)
            assert L.lovasz_extension(f, z) >= L.lovasz_extension(f, x) + g @ (z - x) - 1e-12
        if np.min(np.abs(np.subtract.outer(x, x))[np.triu_indices(3, 1)]) > 1e-3:
            fd = O.finite_difference(lambda t: L.lovasz_extension(f, t), x)
            assert np.allclose(fd, g, atol=1e-6)


def test_hinge_examples():
    assert L.hinge(M12, [0.5, -0.5], [1, 1]) == pytest.approx(3.5, abs=1e-15)
    assert L.hinge(Z2, [0.3, -0.2], [1, 1]) == pytest.approx(1.2, abs=1e-15)
    for y in labels(3):
        assert L.hinge(S.random_submodular(3, 0), y, y) == 0.0


def test_hinge_exact():
    u = [Fraction(1, 2), Fraction(-1, 2)]
    assert L.hinge(M12, u, [1, 1], exact=True) == Fraction(7, 2)


@pytest.mark.parametrize("f", fn_suite(), ids=lambda f: f.name)
@settings(max_examples=60, deadline=None)
@given(u=hnp.arrays(np.float64, 3, elements=coords), b=st.integers(0, 7))
def test_hinge_matches_oracle(f, u, b):
    y = labels(3)[b]
    h = L.hinge(f, u, y)
    assert h >= 0
    assert h == pytest.approx(O.hinge_oracle(f.values, u, y), abs=1e-12)


@pytest.mark.parametrize("f", fn_suite(), ids=lambda f: f.name)
def test_hinge_subgradient(f):
    rng = np.random.default_rng(5)
    for _ in range(40):
        u = rng.uniform(-1.5, 1.5, 3)
        y = labels(3)[rng.integers(8)]
        g = L.hinge_subgradient(f, u, y)
        h0 = L.hinge(f, u, y)
        for _ in range(10):
            z = rng.uniform(-2, 2, 3)
            assert L.hinge(f, z, y) >= h0 + g @ (z - u) - 1e-12
        w = 1 - u * y
        kinks = np.concatenate([np.abs(w), np.abs(np.subtract.outer(w, w))[np.triu_indices(3, 1)]])
        if kinks.min() > 1e-3:
            fd = O.finite_difference(lambda t: L.hinge(f, t, y), u)
            assert np.allclose(fd, g, atol=1e-6)


def test_hinge_subgradient_modular_and_minimum():
    w = np.array([0.5, 1.0, 2.0])
    f = S.modular(w)
    u = np.array([0.2, 1.5, -0.4])
    y = np.array([1.0, 1.0, 1.0])
    assert L.hinge_subgradient(f, u, y).tolist() == [-0.5, 0.0, -2.0]
    assert np.all(L.hinge_subgradient(f, y, y) == 0)


def test_clip_examples():
    assert L.clip([2, -3]).tolist() == [1, -1]
    assert L.clip([0.5, -0.5]).tolist() == [0.5, -0.5]
    assert L.clip([0, 1.5]).tolist() == [0, 1]


def test_signs():
    assert L.sign([0, -2, 3]).tolist() == [0, -1, 1]
    assert L.sign_star([0, -2, 3]).tolist() == [1, -1, 1]


def test_expected_hinge():
    p = np.zeros(4)
    p[3] = 1
    assert L.expected_hinge(Z2, [1, 1], p) == 0.0
    assert L.expected_hinge(Z2, [0, 0], np.full(4, 0.25)) == 1.0
    with pytest.raises(ValueError, match="sums to"):
        L.expected_hinge(Z2, [0, 0], [0.5, 0.5, 0.5, 0.0])
    rng = np.random.default_rng(0)
    for f in fn_suite():
        p = rng.dirichlet(np.ones(8))
        u = rng.uniform(-1.5, 1.5, 3)
        assert L.expected_hinge(f, u, p) == pytest.approx(O.expected_oracle(f.values, u, p), abs=1e-12)
        U = rng.uniform(-1.5, 1.5, (5, 3))
        batch = L.expected_hinge_batch(f, U, p)
        assert np.allclose(batch, [O.expected_oracle(f.values, r, p) for r in U], atol=1e-12)


def test_expected_subgradient_inequality():
    rng = np.random.default_rng(11)
    for f in fn_suite():
        p = rng.dirichlet(np.ones(8))
        for _ in range(10):
            u = rng.uniform(-1.2, 1.2, 3)
            g = L.expected_hinge_subgradient(f, u, p)
            z = rng.uniform(-1.2, 1.2, 3)
            assert L.expected_hinge(f, z, p) >= L.expected_hinge(f, u, p) + g @ (z - u) - 1e-12


def test_closed_forms():
    rng = np.random.default_rng(2)
    for k in (1, 3, 6):
        w = rng.uniform(0, 2, k)
        fm, fz = S.modular(w), S.zero_one(k)
        for _ in range(50):
            u = rng.uniform(-2, 2, k)
            y = labels(k)[rng.integers(1 << k)]
            assert abs(L.hinge(fm, u, y) - L.weighted_hinge(w, u, y)) <= 1e-12
            assert abs(L.hinge(fz, u, y) - L.zero_one_hinge(u, y)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(u=hnp.arrays(np.float64, 3, elements=st.floats(-3, 3, allow_nan=False)), b=st.integers(0, 7), c=st.integers(0, 7))
def test_clipping_dominance_and_symmetry(u, b, c):
    f = S.random_submodular(3, 4)
    y, yp = labels(3)[b], labels(3)[c]
    assert L.hinge(f, L.clip(u), y) <= L.hinge(f, u, y) + 1e-12
    assert L.hinge(f, u * yp, y * yp) == L.hinge(f, u, y)


def test_hinge_on_cube_needs_no_positive_part():
    rng = np.random.default_rng(8)
    f = S.random_submodular(3, 9)
    for _ in range(100):
        u = rng.uniform(-1, 1, 3)
        y = labels(3)[rng.integers(8)]
        assert L.hinge(f, u, y) == pytest.approx(L.lovasz_extension(f, 1 - u * y), abs=1e-12)


def test_barycentric_examples():
    b = L.barycentric([1, 1, 1])
    assert b.alpha.tolist() == [0, 0, 0, 1]
    b = L.barycentric([0.5, 0.5])
    assert b.alpha.tolist() == [0.5, 0, 0.5] and b.label.tolist() == [1, 1]
    assert b.support_vertices().tolist() == [[0, 0], [1, 1]]
    with pytest.raises(ValueError, match=r"\[-1, 1\]"):
        L.barycentric([1.2, 0])


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(np.float64, 4, elements=st.floats(-1, 1, allow_nan=False)))
def test_barycentric_reconstruction(u):
    b = L.barycentric(u)
    assert np.all(b.alpha >= 0) and abs(b.alpha.sum() - 1) <= 1e-12
    assert np.max(np.abs(b.reconstruct() - u)) <= 1e-12
    # the point lies in the cell P_{perm, label} whose vertices are on the cube grid
    V = b.vertices()
    assert set(np.unique(V)) <= {-1, 0, 1}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0, -0.25, -0.5, -1.0]), min_size=3, max_size=3))
def test_barycentric_support_is_minimal(u):
    # no smaller vertex subset of the cell reproduces u: the support vertices are affinely
    # independent and all weights on them are positive, so dropping any one changes the point
    b = L.barycentric(u)
    sup = b.support()
    assert np.all(b.alpha[sup] > 0)
    W = b.vertices()[sup].astype(float)
    if len(sup) > 1:
        D = W[1:] - W[0]
        assert np.linalg.matrix_rank(D) == len(sup) - 1


def test_convexity_witness():
    bad = S.SetFunction(2, [0, 1, 1, 3])
    x, z, lam = L.convexity_violation(bad)
    assert L.convexity_gap(bad, x, z, lam) < 0
    assert L.convexity_violation(S.zero_one(3)) is None
    rng = np.random.default_rng(0)
    f = S.random_submodular(3, 2)
    for _ in range(100):
        x, z = rng.uniform(0, 1, (2, 3))
        assert L.convexity_gap(f, x, z, rng.uniform()) >= -1e-12

"""The numba kernels and their numpy twins must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from lovasz_hinge import _kernels as K
from lovasz_hinge import links as LK
from lovasz_hinge import setfn as S
from lovasz_hinge.spaces import labels

pytestmark = pytest.mark.skipif(K.NUMBA is None, reason="numba not installed")


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    out = []
    for k in (1, 2, 3, 4):
        f = S.random_submodular(k, k)
        p = rng.dirichlet(np.ones(1 << k))
        U = rng.uniform(-1.5, 1.5, (64, k))
        U[::7] = np.round(U[::7] * 2) / 2  # ties and exact grid points
        out.append((f, p, U))
    return out


def test_lovasz_rows(data):
    for f, p, U in data:
        X = np.abs(U)
        a = K.NUMBA.lovasz_rows(f.values, X)
        b = K.NUMPY.lovasz_rows(f.values, X)
        assert np.allclose(a[0], b[0], atol=1e-14) and np.array_equal(a[1], b[1])


def test_hinge_rows(data):
    for f, p, U in data:
        Y = labels(f.k)[np.arange(len(U)) % (1 << f.k)]
        Y = np.ascontiguousarray(Y)
        assert np.allclose(K.NUMBA.hinge_rows(f.values, U, Y), K.NUMPY.hinge_rows(f.values, U, Y), atol=1e-14)


def test_expected(data):
    for f, p, U in data:
        Y = labels(f.k)
        for u in U[:10]:
            a, b = K.NUMBA.expected_hinge(f.values, Y, p, u), K.NUMPY.expected_hinge(f.values, Y, p, u)
            assert abs(a[0] - b[0]) <= 1e-14 and np.allclose(a[1], b[1], atol=1e-14)
        assert np.allclose(
            K.NUMBA.expected_hinge_batch(f.values, Y, p, U), K.NUMPY.expected_hinge_batch(f.values, Y, p, U), atol=1e-14
        )


@pytest.mark.parametrize("rule", [K.RULE_SQRT, K.RULE_HALVING, K.RULE_GEOMETRIC])
def test_descend(data, rule):
    for f, p, U in data:
        Y = labels(f.k)
        u0 = np.ascontiguousarray(U[0])
        a = K.NUMBA.descend(f.values, Y, p, u0, 200, 1.0, rule, 20, True)
        b = K.NUMPY.descend(f.values, Y, p, u0, 200, 1.0, rule, 20, True)
        assert np.allclose(a[0], b[0], atol=1e-10)
        assert abs(a[1] - b[1]) <= 1e-10
        assert np.allclose(a[2], b[2], atol=1e-10)


def test_envelope_gaps(data):
    for eps in (0.125, 0.25):
        for f, p, U in data[:3]:
            A = np.abs(np.clip(U, -1, 1))
            a = K.NUMBA.envelope_gaps(A, eps)
            b = K.NUMPY.envelope_gaps(A, eps)
            for x, y in zip(a, b):
                assert np.allclose(x, y, atol=1e-15)


@pytest.mark.parametrize("k", [2, 3])
def test_face_status(k):
    rng = np.random.default_rng(k)
    ft = LK.face_table(k)
    X = np.clip(rng.uniform(-1.2, 1.2, (40, k)), -1, 1)
    X[::5] = np.round(X[::5] * 4) / 4
    for eps in (0.125, 0.25):
        a = K.NUMBA.face_status(X, eps, ft.verts, ft.sizes, ft.lo, ft.hi, LK.LP_MARGIN)
        b = K.NUMPY.face_status(X, eps, ft.verts, ft.sizes, ft.lo, ft.hi, LK.LP_MARGIN)
        assert np.array_equal(a, b)


def test_lp_distance():
    rng = np.random.default_rng(1)
    for m in (1, 2, 3, 4):
        W = np.ascontiguousarray(rng.integers(-1, 2, (m, 3)).astype(float))
        for _ in range(10):
            x = rng.uniform(-1, 1, 3)
            assert abs(K.NUMBA.lp_distance(W, m, x) - K.NUMPY.lp_distance(W, m, x)) <= 1e-12


def test_env_flag_selects_numpy():
    env = dict(os.environ, LHL_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import lovasz_hinge as m; print(m.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
    env["LHL_DISABLE_NUMBA"] = ""
    out = subprocess.run(
        [sys.executable, "-c", "import lovasz_hinge as m; print(m.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numba"

"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are called directly, so the LHL_DISABLE_NUMBA flag does not
matter here.  Numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from lovasz_hinge import _kernels as K
from lovasz_hinge import links as LK
from lovasz_hinge import setfn as S
from lovasz_hinge.spaces import labels


def cases():
    rng = np.random.default_rng(0)
    f = S.random_submodular(4, 0)
    Y = labels(4)
    p = rng.dirichlet(np.ones(16))
    U = rng.uniform(-1.2, 1.2, (20_000, 4))
    Yr = np.ascontiguousarray(Y[rng.integers(16, size=len(U))])
    ft = LK.face_table(2)
    X2 = np.clip(rng.uniform(-1.2, 1.2, (2_000, 2)), -1, 1)
    u0 = rng.uniform(-1, 1, 4)
    return {
        "lovasz_rows 20k x k=4": lambda B: B.lovasz_rows(f.values, np.abs(U)),
        "hinge_rows 20k x k=4": lambda B: B.hinge_rows(f.values, U, Yr),
        "expected_hinge_batch 20k": lambda B: B.expected_hinge_batch(f.values, Y, p, U),
        "descend 3000 steps": lambda B: B.descend(f.values, Y, p, u0, 3000, 1.0, K.RULE_GEOMETRIC, 100, False),
        "envelope_gaps 20k": lambda B: B.envelope_gaps(np.abs(np.clip(U, -1, 1)), 0.125),
        "face_status 2k x 33 faces": lambda B: B.face_status(X2, 0.25, ft.verts, ft.sizes, ft.lo, ft.hi, LK.LP_MARGIN),
    }


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if K.NUMBA is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<28} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, fn in cases().items():
        fn(K.NUMBA)  # compile
        a = best_of(lambda: fn(K.NUMPY), args.repeat)
        b = best_of(lambda: fn(K.NUMBA), args.repeat)
        print(f"{name:<28} {1e3 * a:>11.2f} {1e3 * b:>11.2f} {a / b:>7.1f}x")


if __name__ == "__main__":
    main()

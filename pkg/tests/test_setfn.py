import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lovasz_hinge import setfn as S


def test_eval_examples():
    assert S.zero_one(2).eval(0b01) == 1
    assert S.zero_one(2)(0) == 0
    assert S.modular([1, 2]).eval(0b11) == 3


def test_eval_out_of_range():
    with pytest.raises(IndexError):
        S.zero_one(2).eval(4)
    with pytest.raises(IndexError):
        S.zero_one(2).eval(-1)


def test_table_validation():
    with pytest.raises(ValueError, match="expected 4 values"):
        S.SetFunction(2, [0, 1, 1])
    with pytest.raises(ValueError, match="finite"):
        S.SetFunction(1, [0, np.nan])


def test_immutable():
    f = S.zero_one(2)
    with pytest.raises(ValueError):
        f.values[1] = 5.0


def test_constructor_tables():
    assert S.modular([1, 2]).values.tolist() == [0, 1, 2, 3]
    assert S.zero_one(2).values.tolist() == [0, 1, 1, 1]
    f = S.concave_cardinality(3, lambda m: min(m, 2))
    assert f.eval(0b111) == 2
    assert f.values.tolist() == [0, 1, 1, 2, 1, 2, 2, 2]
    b = S.budget_additive([1, 2], 2.5)
    assert b.values.tolist() == [0, 1, 2, 2.5]


def test_constructors_reject_nonmembers():
    with pytest.raises(S.NotInClassError) as e:
        S.modular([1, -2])
    assert e.value.property == "increasing"
    with pytest.raises(S.NotInClassError, match="concave"):
        S.concave_cardinality(3, [0, 1, 3, 4])
    with pytest.raises(S.NotInClassError, match="must be 0"):
        S.concave_cardinality(2, [1, 2, 3])
    with pytest.raises(S.NotInClassError) as e:
        S.explicit_table([0, 1, 1, 3])
    assert e.value.property == "submodular"


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("seed", [0, 7, 123])
def test_random_submodular_in_class(k, seed):
    f = S.random_submodular(k, seed)
    assert S.is_normalized(f) and S.is_increasing(f) and S.is_submodular(f)
    if k >= 2:
        assert not S.is_modular(f)


def test_random_submodular_seed_example():
    f = S.random_submodular(2, seed=7)
    assert S.is_submodular(f) and S.is_increasing(f)
    assert f == S.random_submodular(2, seed=7)


def test_submodularity_examples():
    assert S.is_submodular(S.zero_one(2))
    assert S.is_submodular(S.modular([1, 2]))
    bad = S.SetFunction(2, [0, 1, 1, 3])
    w = S.find_submodularity_violation(bad)
    assert w == S.Violation(frozenset(), 1, 2)


def _all_tables(k, vals=(0, 1, 2)):
    for rest in itertools.product(vals, repeat=(1 << k) - 1):
        yield S.SetFunction(k, (0,) + rest)


@pytest.mark.parametrize("k", [1, 2])
def test_local_and_pairwise_submodularity_agree_exhaustive(k):
    for f in _all_tables(k):
        assert (S.find_submodularity_violation(f) is None) == (S.find_submodularity_violation_pairs(f) is None)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-3, 6), min_size=7, max_size=7))
def test_local_and_pairwise_submodularity_agree_k3(vals):
    f = S.SetFunction(3, [0] + vals)
    assert (S.find_submodularity_violation(f) is None) == (S.find_submodularity_violation_pairs(f) is None)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=7, max_size=7))
def test_violation_witness_is_genuine(vals):
    f = S.SetFunction(3, [0.0] + vals)
    w = S.find_submodularity_violation(f)
    if w is not None:
        s = S.mask_of(w.S)
        i, j = 1 << (w.i - 1), 1 << (w.j - 1)
        v = f.values
        assert v[s | i] - v[s] < v[s | i | j] - v[s | j] - f.tol()


def test_modular_increasing_normalized():
    z = S.zero_one(2)
    assert not S.is_modular(z)
    m = S.modular([1, 2])
    assert S.is_modular(m) and S.is_increasing(m) and S.is_normalized(m)
    assert not S.is_increasing(S.SetFunction(2, [0, 1, 2, 0.5]))
    assert not S.is_normalized(S.SetFunction(1, [1, 2]))


def test_strict_submodularity():
    assert S.is_strictly_submodular(S.zero_one(2))
    assert not S.is_strictly_submodular(S.modular([1, 2]))
    # zero_one(3): {1,2} and {1,3} give 1 + 1 = 1 + 1, not strict
    assert not S.is_strictly_submodular(S.zero_one(3))
    w = S.find_strict_submodularity_violation(S.zero_one(3))
    assert w is not None
    # min(|S|, 2) on k = 3: {1} and {2} give 1 + 1 = 2 + 0, not strict
    assert not S.is_strictly_submodular(S.concave_cardinality(3, lambda m: min(m, 2)))


def test_mean_value():
    assert S.mean_value(S.zero_one(2)) == 0.75
    assert S.mean_value(S.modular([1, 2])) == 1.5
    assert S.mean_value(S.zero_one(3)) == 7 / 8


def suite():
    out = [S.zero_one(k) for k in (1, 2, 3, 4)]
    out += [S.modular(w) for w in ([1, 2], [0.5, 0.25, 3], [1, 1, 1, 1])]
    out += [S.concave_cardinality(k, lambda m: min(m, 2)) for k in (2, 3, 4)]
    out += [S.budget_additive([0.3, 0.9, 0.5], 1.0)]
    out += [S.random_submodular(k, s) for k in (2, 3, 4) for s in range(4)]
    return out


@pytest.mark.parametrize("f", suite(), ids=lambda f: f.name)
def test_mean_value_bound_and_equality_case(f):
    fbar = S.mean_value_exact(f)
    full = f.exact_values[f.full]
    assert fbar >= full / 2
    assert (fbar == full / 2) == S.is_modular(f)


@pytest.mark.parametrize("f", suite(), ids=lambda f: f.name)
def test_modular_reconstruction(f):
    if S.is_modular(f):
        assert S.modular(S.singleton_weights(f)) == f


def test_prune_examples():
    g, m = S.prune_null_elements(S.SetFunction(2, [0, 0, 1, 1]))
    assert g.k == 1 and g.values.tolist() == [0, 1] and m == {2: 1}
    g, m = S.prune_null_elements(S.zero_one(2))
    assert g == S.zero_one(2) and m == {1: 1, 2: 2}
    g, m = S.prune_null_elements(S.modular([0, 2]))
    assert g == S.modular([2]) and m == {2: 1}


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10_000), st.data())
def test_prune_preserves_retained_values(k, seed, data):
    base = S.random_submodular(k, seed)
    null = data.draw(st.sets(st.integers(0, k - 1), max_size=k - 1))
    # embed base on the non-null coordinates of a larger ground set
    kept = [i for i in range(k) if i not in null]
    inner = S.random_submodular(len(kept), seed) if kept else base
    vals = np.zeros(1 << k)
    for s in range(1 << k):
        t = sum(1 << pos for pos, orig in enumerate(kept) if s >> orig & 1)
        vals[s] = inner.values[t]
    f = S.SetFunction(k, vals)
    g, m = S.prune_null_elements(f)
    assert sorted(m) == [i + 1 for i in kept]
    assert g == inner
    assert all(v > 0 for v in g.values[1:])


def test_prune_rejects_hidden_marginal():
    # f({1}) = 0 but element 1 matters together with 2: not increasing-submodular
    f = S.SetFunction(2, [0, 0, 1, 2])
    with pytest.raises(S.NotInClassError):
        S.prune_null_elements(f)


def test_spec_formats(tmp_path):
    specs = [
        ({"k": 2, "type": "table", "values": [0, 1, 1, 1]}, [0, 1, 1, 1]),
        ({"type": "modular", "w": [1, 2]}, [0, 1, 2, 3]),
        ({"type": "zero_one", "k": 2}, [0, 1, 1, 1]),
        ({"type": "concave_cardinality", "k": 3, "g": [0, 1, 2, 2]}, [0, 1, 1, 2, 1, 2, 2, 2]),
        ({"type": "budget_additive", "w": [1, 2], "cap": 2.5}, [0, 1, 2, 2.5]),
    ]
    for i, (spec, vals) in enumerate(specs):
        p = tmp_path / f"f{i}.json"
        p.write_text(json.dumps(spec))
        f = S.load(p)
        assert f.values.tolist() == vals
        assert f.name == f"f{i}"
        assert S.from_spec(f.to_spec()) == f


def test_spec_errors_name_property():
    with pytest.raises(S.NotInClassError, match="submodular"):
        S.from_spec({"type": "table", "values": [0, 1, 1, 3]})
    with pytest.raises(ValueError, match="unknown set function kind"):
        S.from_spec({"type": "bogus"})
    with pytest.raises(ValueError, match="missing parameter"):
        S.from_spec({"type": "modular"})
    f = S.from_spec({"type": "table", "values": [0, 1, 1, 3]}, validate_class=False)
    assert f.k == 2

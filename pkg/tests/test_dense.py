import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _models import random_mhn, random_san
from sanmarginal import (
    CapExceeded,
    DenseTensor,
    EmptyModeSet,
    MhnParams,
    SanModel,
    TreeMismatch,
    canonical_tree,
    dense_generator,
    dense_marginal,
    from_mhn,
    matricize,
    tree_singular_values,
    unmatricize,
)


def loop_generator(m):
    """State-by-state assembly straight from the rate definition."""
    states = list(itertools.product(*[range(n) for n in m.sizes]))
    flat = {x: int(np.ravel_multi_index(x, m.sizes, order="F")) for x in states}
    q = np.zeros((len(states), len(states)))
    for x in states:
        for nu in range(m.d):
            for (i, j), per_mode in zip(m.transitions[nu], m.theta[nu]):
                if x[nu] != i:
                    continue
                rate = 1.0
                for mu in range(m.d):
                    rate *= per_mode[mu][x[mu]]
                y = list(x)
                y[nu] = j
                q[flat[tuple(y)], flat[x]] += rate
                q[flat[x], flat[x]] -= rate
    return q


@pytest.mark.parametrize("seed", range(12))
def test_generator_matches_loop_assembly(seed):
    rng = np.random.default_rng(seed)
    m = random_san(rng, 1 + seed % 4)
    np.testing.assert_allclose(dense_generator(m).array, loop_generator(m), atol=1e-14)


def test_mhn_generator_by_hand():
    # d=1: rate lam from state 0 to 1
    q = dense_generator(from_mhn(MhnParams([[2.5]]))).array
    np.testing.assert_array_equal(q, [[-2.5, 0.0], [2.5, 0.0]])
    # d=2: event 0 after event 1 happens at rate th00 * th01
    th = np.array([[2.0, 3.0], [5.0, 7.0]])
    q = dense_generator(from_mhn(MhnParams(th))).array
    # flat states: (0,0)=0, (1,0)=1, (0,1)=2, (1,1)=3
    assert q[1, 0] == 2.0 and q[2, 0] == 7.0
    assert q[3, 2] == 2.0 * 3.0 and q[3, 1] == 7.0 * 5.0
    assert q[0, 0] == -9.0


@given(st.integers(0, 10_000), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_generator_columns_sum_to_zero(seed, d):
    m = random_san(np.random.default_rng(seed), d)
    q = dense_generator(m).array
    np.testing.assert_allclose(q.sum(axis=0), 0.0, atol=1e-12)
    off = q - np.diag(np.diag(q))
    assert np.all(off >= 0)


@pytest.mark.parametrize("seed", range(8))
def test_marginal_solves_system_and_sums_to_one(seed):
    rng = np.random.default_rng(seed)
    m = from_mhn(random_mhn(rng, 1 + seed % 5))
    p = dense_marginal(m)
    q = dense_generator(m).array
    p0 = np.zeros(q.shape[0])
    p0[0] = 1.0
    np.testing.assert_allclose(p.data - q @ p.data, p0, atol=1e-12)
    assert abs(p.data.sum() - 1) < 1e-12
    assert np.all(p.data >= -1e-15)


def test_marginal_d1_closed_form():
    for lam in (0.5, 1.0, 3.0):
        p = dense_marginal(from_mhn(MhnParams([[lam]]))).data
        np.testing.assert_allclose(p, [1 / (1 + lam), lam / (1 + lam)], atol=1e-15)


def test_marginal_respects_initial_state():
    m = from_mhn(MhnParams([[1.0, 2.0], [0.5, 1.5]]), x0=(1, 1))
    p = dense_marginal(m).array
    assert p[1, 1] == pytest.approx(1.0)


def test_cap():
    m = from_mhn(MhnParams(np.ones((5, 5))))
    with pytest.raises(CapExceeded):
        dense_generator(m, cap=100)
    with pytest.raises(CapExceeded):
        dense_marginal(m, cap=1000)


def test_dense_tensor_layout():
    arr = np.arange(24.0).reshape(2, 3, 4)
    t = DenseTensor.from_array(arr)
    assert t.data[1] == arr[1, 0, 0] and t.data[2] == arr[0, 1, 0]
    np.testing.assert_array_equal(t.array, arr)
    with pytest.raises(ValueError):
        DenseTensor((2, 2), np.zeros(5))


@given(st.lists(st.integers(1, 3), min_size=1, max_size=5), st.data())
@settings(max_examples=40, deadline=None)
def test_matricize_roundtrip(dims, data):
    d = len(dims)
    modes = data.draw(st.sets(st.integers(0, d - 1), min_size=1))
    arr = np.random.default_rng(0).standard_normal(dims)
    t = DenseTensor.from_array(arr)
    mat = matricize(t, modes)
    assert mat.rows == int(np.prod([dims[m] for m in modes]))
    np.testing.assert_array_equal(unmatricize(mat, dims, modes).array, arr)


def test_matricize_errors():
    t = DenseTensor.from_array(np.zeros((2, 2)))
    with pytest.raises(EmptyModeSet):
        matricize(t, [])
    with pytest.raises(EmptyModeSet):
        matricize(t, [2])


def test_tree_singular_values_rank_one():
    arr = np.multiply.outer(np.multiply.outer([1.0, 2.0], [3.0, 1.0]), [1.0, 1.0, 2.0])
    sv = tree_singular_values(DenseTensor.from_array(arr), canonical_tree(3))
    for s in sv.values():
        assert s[0] == pytest.approx(np.linalg.norm(arr))
        assert np.all(s[1:] == 0)


def test_tree_singular_values_mismatch():
    with pytest.raises(TreeMismatch):
        tree_singular_values(DenseTensor.from_array(np.zeros((2, 2))), canonical_tree(3))


def test_model_without_transitions_has_zero_generator():
    m = SanModel((2, 3), ((), ()), ((), ()))
    assert not dense_generator(m).array.any()
    np.testing.assert_allclose(dense_marginal(m).array[0, 0], 1.0)

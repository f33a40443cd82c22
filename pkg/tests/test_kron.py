import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polymm import kron
from polymm.errors import CapacityError


@pytest.mark.parametrize("n,i", [(n, i) for n in range(1, 6) for i in range(0, 5)])
def test_M_N_is_identity(n, i):
    pair = kron.build_MN(kron.build_index_table(n, i))
    assert np.array_equal(pair.M @ pair.N, np.eye(kron.n_multisets(n, i), dtype=pair.M.dtype))


@pytest.mark.parametrize("n,i", [(3, 2), (4, 3), (2, 5)])
def test_order_is_combinations_with_replacement(n, i):
    rows = kron.build_index_table(n, i).rows
    assert list(rows) == list(itertools.combinations_with_replacement(range(n), i))


def test_first_occurrence_order_matches_tuple_scan():
    n, i = 3, 3
    seen = []
    for t in itertools.product(range(n), repeat=i):
        key = tuple(sorted(t))
        if key not in seen:
            seen.append(key)
    assert seen == list(kron.build_index_table(n, i).rows)


def test_count_formula():
    for n in range(1, 7):
        for i in range(0, 6):
            assert len(kron.build_index_table(n, i)) == comb(n - 1 + i, i)


def test_lift_and_project_vectors(rng):
    v = rng.standard_normal(4)
    for i in range(1, 4):
        full = kron.kron_power_vector(v, i)
        red = kron.reduced_power_vector(v, i)
        pair = kron.build_MN(kron.build_index_table(4, i))
        assert np.allclose(pair.M @ full, red)
        assert np.allclose(pair.N @ red, full)


def test_reduced_power_entries_are_monomials(rng):
    v = rng.standard_normal(3)
    red = kron.reduced_power_vector(v, 3)
    for k, row in enumerate(kron.build_index_table(3, 3).rows):
        assert red[k] == pytest.approx(np.prod(v[list(row)]))


def test_reduced_power_zero_degree_is_one():
    assert np.array_equal(kron.reduced_power_vector(np.array([2.0, 3.0]), 0), np.ones(1))


def test_batch_columns(rng):
    V = rng.standard_normal((3, 7))
    out = kron.reduced_power_vector(V, 2)
    for k in range(7):
        assert np.allclose(out[:, k], kron.reduced_power_vector(V[:, k], 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_power_matrix_homomorphism(n, i, seed):
    r = np.random.default_rng(seed)
    A = r.standard_normal((n + 1, n))
    v = r.standard_normal(n)
    lhs = kron.reduced_power_vector(A @ v, i)
    # reduced_power_matrix is M A^(i): it acts on the full power of v
    rhs = kron.reduced_power_matrix(A, i) @ kron.kron_power_vector(v, i)
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(lhs).max()))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_reduced_kron_sum_is_derivative(n, i, seed):
    # d/dt v^[i] = A^<i> v^[i] along v' = A v
    r = np.random.default_rng(seed)
    A = r.standard_normal((n, n))
    v = r.standard_normal(n)
    eps = 1e-6
    fd = (kron.reduced_power_vector(v + eps * A @ v, i) - kron.reduced_power_vector(v - eps * A @ v, i)) / (2 * eps)
    ana = kron.reduced_kron_sum(A, i) @ kron.reduced_power_vector(v, i)
    assert np.allclose(fd, ana, atol=1e-6 * (1 + np.abs(ana).max()))


def test_successive_kron_sum_small():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    I = np.eye(2)
    assert np.allclose(kron.successive_kron_sum(A, 2), np.kron(A, I) + np.kron(I, A))
    assert np.allclose(kron.successive_kron_sum(A, 1), A)


def _hausdorff(a, b):
    d = np.abs(a[:, None] - b[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_reduced_kron_sum_spectrum(rng):
    for _ in range(50):
        n = int(rng.integers(2, 5))
        i = int(rng.integers(1, 4))
        A = rng.standard_normal((n, n))
        lam = np.linalg.eigvals(A)
        want = np.array([sum(lam[list(c)]) for c in itertools.combinations_with_replacement(range(n), i)])
        got = np.linalg.eigvals(kron.reduced_kron_sum(A, i))
        assert _hausdorff(got, want) <= 1e-8


def test_capacity_guard():
    with pytest.raises(CapacityError):
        kron.build_index_table(200, 4)


@pytest.mark.parametrize("n,i", [(2, 2), (3, 3), (4, 2), (2, 5)])
def test_reduced_kron_sum_matches_definition(n, i, rng):
    A = rng.standard_normal((n, n))
    pair = kron.build_MN(kron.build_index_table(n, i))
    want = pair.M @ kron.successive_kron_sum(A, i) @ pair.N
    assert np.allclose(kron.reduced_kron_sum(A, i), want)

import numpy as np
import pytest

from polymm.errors import DefectiveMatrix, SpectraOverlap
from polymm.linalg import (basic_solve, diagonalize, min_norm_solve, numerical_rank,
                           observability_index, solve_sylvester, structural_checks)


def test_sylvester_dense_and_large_paths(rng):
    for n, k in ((3, 4), (70, 60)):
        A = -np.eye(n) * 2 + 0.1 * rng.standard_normal((n, n))
        S = rng.standard_normal((k, k))
        S = S - S.T
        Q = rng.standard_normal((n, k))
        X = solve_sylvester(A, S, Q)
        assert np.linalg.norm(X @ S - A @ X - Q) < 1e-9 * (1 + np.linalg.norm(Q))


def test_sylvester_overlap_raises():
    with pytest.raises(SpectraOverlap):
        solve_sylvester(np.zeros((1, 1)), np.zeros((1, 1)), np.ones((1, 1)))


def test_min_norm_matches_pinv(rng):
    M = rng.standard_normal((4, 9))
    r = rng.standard_normal(4)
    assert np.allclose(min_norm_solve(M, r), np.linalg.pinv(M) @ r)


def test_basic_solve_is_exact_and_sparse(rng):
    M = rng.standard_normal((5, 12))
    r = rng.standard_normal(5)
    x = basic_solve(M, r)
    assert np.allclose(M @ x, r)
    assert np.count_nonzero(x) <= 5


def test_basic_solve_square_equals_solve(rng):
    M = rng.standard_normal((6, 6))
    r = rng.standard_normal(6)
    assert np.allclose(basic_solve(M, r), np.linalg.solve(M, r))


def test_diagonalize_sorted_and_exact(rng):
    S = np.array([[0, 2.0, 0], [-2.0, 0, 0], [0, 0, 0]])
    d = diagonalize(S)
    assert np.all(np.diff(d.eigenvalues.imag) >= 0)
    assert np.allclose(d.P @ np.diag(d.eigenvalues) @ d.P_inv, S)


def test_diagonalize_defective():
    with pytest.raises(DefectiveMatrix):
        diagonalize(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_rank_and_observability():
    assert numerical_rank(np.array([[1.0, 2.0], [2.0, 4.0]])) == 1
    S = np.array([[0, 1.0], [-1.0, 0]])
    assert observability_index(np.array([[1.0, 0.0]]), S) == 2
    assert observability_index(np.array([[0.0, 0.0]]), S) is None


def test_structural_checks():
    A = -np.eye(2)
    d = structural_checks(A, np.array([[1.0], [0.0]]), np.array([[1.0, 1.0]]))
    assert d.hurwitz and not d.controllable and not d.observable

"""Numeric primitives: Sylvester solves, pseudo-inverse solves, diagonalization, ranks."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np
import scipy.linalg as sla

from .errors import DefectiveMatrix, SpectraOverlap

# Above this many unknowns the Bartels-Stewart path replaces the dense LU solve.
DENSE_SYLVESTER_MAX = 4000


def rank_tolerance(M: np.ndarray) -> float:
    """Singular-value threshold ``max(dim) * ||M||_2 * 1e-12``."""
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0.0
    return max(M.shape) * np.linalg.norm(M, 2) * 1e-12


def numerical_rank(M: np.ndarray, tol: float | None = None) -> int:
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = max(M.shape) * (s[0] if len(s) else 0.0) * 1e-12
    return int(np.sum(s > tol))


def spectral_gap(A: np.ndarray, S: np.ndarray) -> float:
    ea = np.linalg.eigvals(A)
    es = np.linalg.eigvals(S)
    if ea.size == 0 or es.size == 0:
        return np.inf
    return float(np.min(np.abs(ea[:, None] - es[None, :])))


def sylvester_operator(A: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Matrix of ``X -> X S - A X`` acting on ``vec X`` (column-major)."""
    n, k = A.shape[0], S.shape[0]
    return np.kron(S.T, np.eye(n)) - np.kron(np.eye(k), A)


def solve_sylvester(A, S, Q, *, gap_tol: float = 1e-8, check: bool = True) -> np.ndarray:
    """Solve ``X S = A X + Q`` for ``X``.

    Raises :class:`SpectraOverlap` when ``A`` and ``S`` share (numerically)
    an eigenvalue, since the solution is then not unique.
    """
    A = np.atleast_2d(np.asarray(A))
    S = np.atleast_2d(np.asarray(S))
    Q = np.atleast_2d(np.asarray(Q))
    n, k = A.shape[0], S.shape[0]
    if Q.shape != (n, k):
        raise ValueError(f"Q has shape {Q.shape}, expected {(n, k)}")
    if n == 0 or k == 0:
        return np.zeros((n, k), dtype=np.result_type(A, S, Q, float))
    scale = 1.0 + np.linalg.norm(A, 2) + np.linalg.norm(S, 2)
    gap = spectral_gap(A, S)
    if gap < gap_tol * scale:
        raise SpectraOverlap(f"spectra of A and S overlap (min gap {gap:.3e})")
    if n * k <= DENSE_SYLVESTER_MAX:
        K = sylvester_operator(A, S)
        x = sla.lu_solve(sla.lu_factor(K), Q.reshape(-1, order="F"))
        X = x.reshape(n, k, order="F")
    else:
        X = sla.solve_sylvester(-A, S, Q)
    if check:
        res = np.linalg.norm(X @ S - A @ X - Q)
        bound = 1e-9 * (np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(Q)
                        + np.linalg.norm(X) * np.linalg.norm(S)) + 1e-300
        if res > bound:
            raise SpectraOverlap(f"Sylvester residual {res:.3e} exceeds {bound:.3e}")
    return X


def min_norm_solve(M, r) -> np.ndarray:
    """Minimum-norm least-squares solution ``M^+ r`` (Moore-Penrose)."""
    M = np.atleast_2d(np.asarray(M))
    r = np.asarray(r)
    if M.size == 0:
        return np.zeros((M.shape[1],) + r.shape[1:])
    s = np.linalg.svd(M, compute_uv=False)
    cond = max(M.shape) * 1e-12
    x, *_ = sla.lstsq(M, r, cond=cond if s[0] > 0 else None)
    return x


def basic_solve(M, r) -> np.ndarray:
    """Basic solution from QR with column pivoting.

    Only the first ``rank(M)`` pivot columns get nonzero coefficients, the
    rest are zero.  For a full-row-rank ``M`` this solves ``M x = r`` exactly
    with at most ``rows`` nonzeros; this is the solution a backslash-style
    solver returns for underdetermined systems.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    r = np.asarray(r, dtype=float)
    vec = r.ndim == 1
    R2 = r.reshape(len(r), -1)
    Qf, Rf, piv = sla.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rf))
    if diag.size == 0 or diag[0] == 0:
        out = np.zeros((M.shape[1], R2.shape[1]))
        return out[:, 0] if vec else out
    k = int(np.sum(diag > max(M.shape) * np.finfo(float).eps * diag[0]))
    z = sla.solve_triangular(Rf[:k, :k], Qf[:, :k].T @ R2)
    out = np.zeros((M.shape[1], R2.shape[1]))
    out[piv[:k]] = z
    return out[:, 0] if vec else out


@dataclass
class Diagonalization:
    P: np.ndarray
    eigenvalues: np.ndarray
    conditioning: float

    @property
    def P_inv(self) -> np.ndarray:
        return np.linalg.inv(self.P)


def diagonalize(S, *, tol: float = 1e-9) -> Diagonalization:
    """Complex eigendecomposition ``P^-1 S P = diag(eigenvalues)``.

    Eigenvalues are sorted by imaginary part, then real part (after rounding
    to 1e-9) so that ``P`` is reproducible.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    lam, P = np.linalg.eig(S)
    key = np.lexsort((np.round(lam.real, 9), np.round(lam.imag, 9)))
    lam, P = lam[key], P[:, key]
    cond = float(np.linalg.cond(P))
    if not np.isfinite(cond) or cond > 1e12:
        raise DefectiveMatrix(f"eigenvector matrix is singular (cond {cond:.2e})")
    res = np.linalg.norm(P @ np.diag(lam) @ np.linalg.inv(P) - S)
    if res > tol * max(1.0, np.linalg.norm(S)) * max(1.0, cond):
        raise DefectiveMatrix(f"reconstruction residual {res:.2e}")
    return Diagonalization(P, lam, cond)


def is_hurwitz(A) -> bool:
    A = np.atleast_2d(A)
    return A.size == 0 or bool(np.max(np.linalg.eigvals(A).real) < 0)


def ctrb(A, B) -> np.ndarray:
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def obsv_stack(C, A, depth: int) -> np.ndarray:
    """``[C; C A; ...; C A^depth]``."""
    C, A = np.atleast_2d(C), np.atleast_2d(A)
    blocks = [C]
    for _ in range(depth):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def observability_index(U1, S1) -> int | None:
    """Smallest ``mu`` with ``[U1; U1 S1; ...; U1 S1^(mu-1)]`` of full column rank.

    Returns ``None`` when the pair is unobservable.
    """
    U1, S1 = np.atleast_2d(U1), np.atleast_2d(S1)
    sigma = S1.shape[0]
    for mu in range(1, sigma + 1):
        if numerical_rank(obsv_stack(U1, S1, mu - 1)) == sigma:
            return mu
    return None


@dataclass
class StructuralDiagnostics:
    hurwitz: bool | None = None
    controllable: bool | None = None
    observable: bool | None = None
    rank_U1: int | None = None
    generator_observable: bool | None = None
    observability_index: int | None = None
    minimal_index: bool | None = None
    rank_tol: dict = field(default_factory=dict)


def structural_checks(A=None, B=None, C=None, U1=None, S1=None) -> StructuralDiagnostics:
    d = StructuralDiagnostics()
    if A is not None:
        d.hurwitz = is_hurwitz(A)
    if A is not None and B is not None:
        K = ctrb(A, B)
        d.rank_tol["ctrb"] = rank_tolerance(K)
        d.controllable = numerical_rank(K) == np.atleast_2d(A).shape[0]
    if A is not None and C is not None:
        O = obsv_stack(C, A, np.atleast_2d(A).shape[0] - 1)
        d.rank_tol["obsv"] = rank_tolerance(O)
        d.observable = numerical_rank(O) == np.atleast_2d(A).shape[0]
    if U1 is not None:
        d.rank_U1 = numerical_rank(U1)
    if U1 is not None and S1 is not None:
        m, sigma = np.atleast_2d(U1).shape
        mu = observability_index(U1, S1)
        d.observability_index = mu
        d.generator_observable = mu is not None
        d.minimal_index = mu is not None and mu == ceil(sigma / m)
    return d

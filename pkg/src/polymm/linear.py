"""Degree-1 moment matching.

Method I fixes a controllable ``(A, B)`` and solves for ``(C, D)``; Method II
fixes an observable ``(C, A)`` and solves for ``(B, D)``.  Both return a
linear :class:`~polymm.systems.PolySystem` whose degree-1 moment equals the
target ``Y1o``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, comb

import numpy as np
import scipy.linalg as sla
from scipy.signal import place_poles

from .errors import (PreconditionError, RankDeficientOmega, RankDeficientXi,
                     SharedEigenvalue)
from .linalg import (min_norm_solve, numerical_rank, obsv_stack, rank_tolerance,
                     solve_sylvester, structural_checks)
from .systems import PolySystem


# ---------------------------------------------------------------------------
# preselected matrices

def hurwitz_from_eigs(eigs) -> np.ndarray:
    """Real block-diagonal matrix with the given spectrum.

    A conjugate pair ``a +/- bj`` becomes ``[[a, b], [-b, a]]``; pairs are
    taken in the order the first member appears.
    """
    eigs = [complex(z) for z in eigs]
    blocks, used = [], [False] * len(eigs)
    for k, z in enumerate(eigs):
        if used[k]:
            continue
        used[k] = True
        if abs(z.imag) < 1e-14:
            blocks.append(np.array([[z.real]]))
            continue
        for j in range(k + 1, len(eigs)):
            if not used[j] and abs(eigs[j] - z.conjugate()) < 1e-12 * (1 + abs(z)):
                used[j] = True
                break
        else:
            raise ValueError(f"eigenvalue {z} has no conjugate partner")
        a, b = z.real, abs(z.imag)
        blocks.append(np.array([[a, b], [-b, a]]))
    return sla.block_diag(*blocks) if blocks else np.zeros((0, 0))


def default_eigs(n: int) -> list:
    return [-(k + 1.0) for k in range(n)]


def default_B(n: int, m: int) -> np.ndarray:
    """Rows cycle through the identity of size ``m``."""
    B = np.zeros((n, m))
    B[np.arange(n), np.arange(n) % m] = 1.0
    return B


def default_C(p: int, n: int) -> np.ndarray:
    """Columns cycle through the identity of size ``p``."""
    C = np.zeros((p, n))
    C[np.arange(n) % p, np.arange(n)] = 1.0
    return C


def parse_eigs(text: str) -> list:
    return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# order bounds

def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def method1_bound(sigma: int, m: int, D_zero: bool = False) -> int:
    return sigma if D_zero else sigma - m


def method2_degree1_bound(sigma: int, m: int, p: int, D_zero: bool = False) -> int:
    return p * _ceil_div(sigma, m) if D_zero else p * (_ceil_div(sigma, m) - 1)


def method2_degree_bound(sigma: int, m: int, p: int, n: int, l: int, D_zero: bool = False) -> int:
    """Right-hand side of the degree-l condition for Method II at order ``n``."""
    q = _ceil_div(comb(sigma - 1 + l, l), comb(m + n - 1 + l, l))
    return p * q if D_zero else p * (q - 1)


def corollary_bound_holds(sigma: int, m: int, p: int, n: int, kappa: int) -> bool:
    """Sufficient condition ``n >= p (ceil((sigma/(m+n))^kappa) - 1)`` in exact arithmetic."""
    num, den = sigma ** kappa, (m + n) ** kappa
    return n >= p * (_ceil_div(num, den) - 1)


@dataclass
class BoundReport:
    n: int
    method: str
    D_zero: bool
    kappa: int
    degree1: int
    per_degree: dict = field(default_factory=dict)
    corollary: int | None = None
    small_sigma: bool = False

    def to_dict(self) -> dict:
        return {"n": self.n, "method": self.method, "D_zero": self.D_zero, "kappa": self.kappa,
                "degree1": self.degree1, "per_degree": {str(k): v for k, v in self.per_degree.items()},
                "corollary": self.corollary, "small_sigma": self.small_sigma}


def order_bound(sigma: int, m: int, p: int, method: str = "I", D_zero: bool = False,
                kappa: int = 1, n_max: int = 10_000) -> BoundReport:
    """Smallest admissible reduced order for the chosen method.

    For Method II and ``kappa >= 2`` the degree-l conditions depend on ``n``
    itself, so ``n`` is scanned upward from the degree-1 bound.
    """
    method = _method_name(method)
    if sigma <= m:
        return BoundReport(1, method, D_zero, kappa, 1, small_sigma=True)
    if method == "I":
        b = max(1, method1_bound(sigma, m, D_zero))
        return BoundReport(b, method, D_zero, kappa, b)
    b1 = method2_degree1_bound(sigma, m, p, D_zero)
    n = max(1, b1)
    while n <= n_max:
        req = {l: method2_degree_bound(sigma, m, p, n, l, D_zero) for l in range(2, kappa + 1)}
        if all(n >= v for v in req.values()):
            break
        n += 1
    cor = max(1, b1)
    while not corollary_bound_holds(sigma, m, p, cor, kappa) and cor <= n_max:
        cor += 1
    return BoundReport(n, method, D_zero, kappa, b1, per_degree=req, corollary=cor)


def compare_methods(sigma: int, m: int, p: int, D_zero: bool = False) -> dict:
    """Degree-1 bounds of both methods and the tabulated verdict.

    ``table`` is the method the comparison tables predict to give the smaller
    (or equal) bound, or ``None`` when the tables make no claim.
    """
    b1 = method1_bound(sigma, m, D_zero)
    b2 = method2_degree1_bound(sigma, m, p, D_zero)
    if p >= m:
        table = "I"
    elif (D_zero and sigma * (m - p) >= m * p) or (not D_zero and sigma * (m - p) >= m * m):
        table = "II"
    else:
        table = None
    smaller = "tie" if b1 == b2 else ("I" if b1 < b2 else "II")
    holds = table is None or (b1 <= b2 if table == "I" else b2 <= b1)
    return {"sigma": sigma, "m": m, "p": p, "D_zero": D_zero, "bound_I": b1, "bound_II": b2,
            "smaller": smaller, "table": table, "table_holds": holds}


def _method_name(method) -> str:
    s = str(method).upper()
    if s in ("1", "I"):
        return "I"
    if s in ("2", "II"):
        return "II"
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# fits

@dataclass
class MatchSpec:
    Y1o: np.ndarray
    U1: np.ndarray
    S1: np.ndarray
    n: int
    method: str = "I"
    force_D_zero: bool = False
    eigenvalues: list | None = None
    seed: int | None = 0
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    C: np.ndarray | None = None
    d_zero_construction: str = "lemma"
    max_reseed: int = 20

    def __post_init__(self):
        self.Y1o = np.atleast_2d(np.asarray(self.Y1o, dtype=float))
        self.U1 = np.atleast_2d(np.asarray(self.U1, dtype=float))
        self.S1 = np.atleast_2d(np.asarray(self.S1, dtype=float))
        self.method = _method_name(self.method)
        if self.U1.shape[1] != self.S1.shape[0] or self.Y1o.shape[1] != self.S1.shape[0]:
            raise ValueError("Y1o, U1 and S1 disagree on sigma")

    @property
    def sigma(self):
        return self.S1.shape[0]

    @property
    def m(self):
        return self.U1.shape[0]

    @property
    def p(self):
        return self.Y1o.shape[0]

    def A_matrix(self) -> np.ndarray:
        if self.A is not None:
            return np.atleast_2d(np.asarray(self.A, dtype=float))
        eigs = self.eigenvalues if self.eigenvalues is not None else default_eigs(self.n)
        A = hurwitz_from_eigs(eigs)
        if A.shape != (self.n, self.n):
            raise PreconditionError(f"{len(eigs)} eigenvalues given for order n={self.n}")
        return A


@dataclass
class LinearFit:
    system: PolySystem
    X1: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _match_residual(system: PolySystem, X1, U1, Y1o) -> float:
    Y1 = system.C @ X1 + system.D @ U1
    return float(np.linalg.norm(Y1 - Y1o) / (1.0 + np.linalg.norm(Y1o)))


def method1_fit(spec: MatchSpec) -> LinearFit:
    """Preselect ``(A, B)``, solve for ``X1``, then ``[C D] = Y1o Omega^+``."""
    Y1o, U1, S1, n = spec.Y1o, spec.U1, spec.S1, spec.n
    sigma, m, p = spec.sigma, spec.m, spec.p
    rng = np.random.default_rng(spec.seed)
    diag: dict = {"method": "I", "D_zero": spec.force_D_zero}
    if spec.force_D_zero:
        if n < sigma:
            raise PreconditionError(f"D = 0 with Method I needs n >= sigma = {sigma}, got {n}")
        if spec.A is None and n == sigma and spec.d_zero_construction == "lemma":
            return _method1_dzero_lemma(spec, diag)
    elif m < sigma and n < sigma - m:
        raise PreconditionError(f"Method I needs n >= sigma - m = {sigma - m}, got {n}")
    A = spec.A_matrix()
    B = default_B(n, m) if spec.B is None else np.atleast_2d(np.asarray(spec.B, dtype=float))
    preset = spec.B is not None
    for attempt in range(spec.max_reseed + 1):
        X1 = solve_sylvester(A, S1, B @ U1)
        Omega = X1 if spec.force_D_zero else np.vstack([X1, U1])
        rank = numerical_rank(Omega)
        if rank == sigma:
            break
        if preset:
            attempt = spec.max_reseed
            break
        B = rng.standard_normal((n, m))
    else:
        attempt = spec.max_reseed
    if rank != sigma:
        raise RankDeficientOmega(
            f"Omega has rank {rank} < sigma = {sigma}; (A, B) violates the genericity condition",
            degree=1)
    sol = Y1o @ np.linalg.pinv(Omega)
    C = sol[:, :n]
    D = np.zeros((p, m)) if spec.force_D_zero else sol[:, n:]
    system = PolySystem.linear(A, B, C, D)
    diag.update(rank_omega=rank, reseeds=attempt, rank_tol=rank_tolerance(Omega),
                residual=_match_residual(system, X1, U1, Y1o),
                structure=vars(structural_checks(A, B, None, U1, S1)))
    return LinearFit(system, X1, diag)


def _method1_dzero_lemma(spec: MatchSpec, diag: dict) -> LinearFit:
    """``A = S1 - B U1`` placed Hurwitz, ``X1 = I``, ``C = Y1o``, ``D = 0``."""
    S1, U1, Y1o = spec.S1, spec.U1, spec.Y1o
    sigma, m, p = spec.sigma, spec.m, spec.p
    eigs = np.array(spec.eigenvalues if spec.eigenvalues is not None else default_eigs(sigma),
                    dtype=complex)
    if numerical_rank(obsv_stack(U1, S1, sigma - 1)) < sigma:
        raise PreconditionError("(U1, S1) must be observable for the D = 0 construction")
    eigs = eigs if np.any(eigs.imag) else eigs.real
    K = place_poles(S1.T, U1.T, eigs).gain_matrix
    B = K.T
    A = S1 - B @ U1
    X1 = np.eye(sigma)
    system = PolySystem.linear(A, B, Y1o.copy(), np.zeros((p, m)))
    diag.update(construction="lemma", residual=_match_residual(system, X1, U1, Y1o),
                sylvester_residual=float(np.linalg.norm(X1 @ S1 - A @ X1 - B @ U1)),
                structure=vars(structural_checks(A, B, None, U1, S1)))
    return LinearFit(system, X1, diag)


def xi_prime(A, C, S, W) -> np.ndarray:
    """``(I kron C) [(-A) (+) S^T]^-1 (W^T kron I_n)`` via one LU factorization."""
    n, k = A.shape[0], S.shape[0]
    K = np.kron(np.eye(k), -A) + np.kron(S.T, np.eye(n))
    rhs = np.kron(W.T, np.eye(n))
    Z = sla.lu_solve(sla.lu_factor(K), rhs)
    # (I_k kron C) applied blockwise
    return np.einsum("pa,kac->kpc", C, Z.reshape(k, n, -1)).reshape(k * C.shape[0], -1)


def xi_matrix(A, C, S, W, with_feedthrough: bool = True) -> np.ndarray:
    Xp = xi_prime(A, C, S, W)
    if not with_feedthrough:
        return Xp
    return np.hstack([Xp, np.kron(W.T, np.eye(C.shape[0]))])


def method2_fit(spec: MatchSpec) -> LinearFit:
    """Preselect observable ``(C, A)``; ``[vec B; vec D] = Xi_1^+ vec Y1o``."""
    Y1o, U1, S1, n = spec.Y1o, spec.U1, spec.S1, spec.n
    sigma, m, p = spec.sigma, spec.m, spec.p
    rng = np.random.default_rng(spec.seed)
    need = method2_degree1_bound(sigma, m, p, spec.force_D_zero)
    if m < sigma and n < need:
        raise PreconditionError(f"Method II needs n >= {need}, got {n}")
    A = spec.A_matrix()
    C = default_C(p, n) if spec.C is None else np.atleast_2d(np.asarray(spec.C, dtype=float))
    preset = spec.C is not None
    attempt = 0
    while True:
        Xi = xi_matrix(A, C, S1, U1, with_feedthrough=not spec.force_D_zero)
        rank = numerical_rank(Xi)
        if rank == p * sigma or preset or attempt >= spec.max_reseed:
            break
        attempt += 1
        C = rng.standard_normal((p, n))
    if rank != p * sigma:
        raise RankDeficientXi(f"Xi_1 has rank {rank} < p*sigma = {p * sigma}", degree=1)
    z = min_norm_solve(Xi, Y1o.reshape(-1, order="F"))
    B = z[: n * m].reshape(n, m, order="F")
    D = np.zeros((p, m)) if spec.force_D_zero else z[n * m:].reshape(p, m, order="F")
    X1 = solve_sylvester(A, S1, B @ U1)
    system = PolySystem.linear(A, B, C, D)
    diag = {"method": "II", "D_zero": spec.force_D_zero, "rank_xi": rank, "xi_shape": list(Xi.shape),
            "reseeds": attempt, "rank_tol": rank_tolerance(Xi),
            "residual": _match_residual(system, X1, U1, Y1o),
            "structure": vars(structural_checks(A, None, C, U1, S1))}
    return LinearFit(system, X1, diag)


def small_sigma_fit(Y1o, U1, S1, A, C, mode: str = "free_X1", X1=None) -> LinearFit:
    """Explicit constructions for ``sigma <= m`` with ``U1`` of full column rank.

    ``free_X1``: any ``X1`` (default zero), ``[B; D] = [X1 S1 - A X1; Y1o - C X1] U1^+``.
    ``B_zero``: ``X1 = 0``, ``B = 0``, ``D = Y1o U1^+``.
    ``D_zero``: ``X1 = C^+ Y1o``, ``B = (X1 S1 - A X1) U1^+``; needs ``C`` of full row rank.
    """
    Y1o, U1, S1, A, C = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (Y1o, U1, S1, A, C))
    m, sigma = U1.shape
    n, p = A.shape[0], C.shape[0]
    if sigma > m:
        raise PreconditionError(f"small-sigma construction needs sigma <= m, got {sigma} > {m}")
    if numerical_rank(U1) < sigma:
        raise PreconditionError("U1 must have full column rank")
    Uinv = np.linalg.pinv(U1)
    if mode == "free_X1":
        X1 = np.zeros((n, sigma)) if X1 is None else np.atleast_2d(np.asarray(X1, dtype=float))
        B = (X1 @ S1 - A @ X1) @ Uinv
        D = (Y1o - C @ X1) @ Uinv
    elif mode == "B_zero":
        X1 = np.zeros((n, sigma))
        B = np.zeros((n, m))
        D = Y1o @ Uinv
    elif mode == "D_zero":
        if numerical_rank(C) < p:
            raise PreconditionError("C must have full row rank for the D = 0 construction")
        X1 = np.linalg.pinv(C) @ Y1o
        B = (X1 @ S1 - A @ X1) @ Uinv
        D = np.zeros((p, m))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    system = PolySystem.linear(A, B, C, D)
    diag = {"mode": mode, "residual": _match_residual(system, X1, U1, Y1o),
            "sylvester_residual": float(np.linalg.norm(X1 @ S1 - A @ X1 - B @ U1))}
    return LinearFit(system, X1, diag)


# ---------------------------------------------------------------------------
# transfer-function decomposition Y1 = Theta U^(nd) R

def faddeev_leverrier(A):
    """``det(sI - A)`` coefficients ``[1, a_1..a_n]`` and adjugate coefficients ``A_0..A_{n-1}``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    a = [1.0]
    mats = [np.eye(n)]
    for k in range(1, n + 1):
        AM = A @ mats[-1]
        ak = -np.trace(AM) / k
        a.append(ak)
        if k < n:
            mats.append(AM + ak * np.eye(n))
    return np.array(a), mats


def stacked_generator(U1, S1, depth: int) -> np.ndarray:
    """``[U1; U1 S1; ...; U1 S1^depth]``."""
    return obsv_stack(U1, S1, depth)


def polyval_matrix(coeffs_high_first, S) -> np.ndarray:
    S = np.atleast_2d(S)
    out = np.zeros_like(S, dtype=float)
    for c in coeffs_high_first:
        out = out @ S + c * np.eye(S.shape[0])
    return out


def canonical_block_frequencies(S1, tol: float = 1e-12):
    """Frequencies ``[0, .., 0, w_1, .., w_q]`` if ``S1`` is in canonical block form, else ``None``."""
    S1 = np.atleast_2d(S1)
    k, out, i = S1.shape[0], [], 0
    while i < k:
        if i + 1 < k and abs(S1[i, i + 1]) > tol:
            w = S1[i, i + 1]
            blk = np.array([[0, w], [-w, 0]])
            if w <= 0 or not np.allclose(S1[i:i + 2, i:i + 2], blk, atol=tol):
                return None
            out.append(("rot", w))
            i += 2
        else:
            if abs(S1[i, i]) > tol:
                return None
            out.append(("zero", 0.0))
            i += 1
    mask = np.zeros_like(S1, dtype=bool)
    i = 0
    for kind, _ in out:
        w = 1 if kind == "zero" else 2
        mask[i:i + w, i:i + w] = True
        i += w
    if np.any(np.abs(S1[~mask]) > tol):
        return None
    return out


def r_matrix(d_coeffs, S1) -> np.ndarray:
    """``R = d(S1)^-1``; uses the closed block form when ``S1`` is canonical."""
    S1 = np.atleast_2d(np.asarray(S1, dtype=float))
    d = np.asarray(d_coeffs)
    lam = np.linalg.eigvals(S1)
    vals = np.polyval(d, lam)
    if np.any(np.abs(vals) < 1e-10 * (1 + np.abs(d).max())):
        raise SharedEigenvalue("d(s) vanishes on the spectrum of S1")
    blocks = canonical_block_frequencies(S1)
    if blocks is None:
        return np.linalg.inv(polyval_matrix(d, S1))
    parts = []
    for kind, w in blocks:
        if kind == "zero":
            parts.append(np.array([[1.0 / np.polyval(d, 0.0)]]))
        else:
            z = np.polyval(d, 1j * w)
            parts.append(np.array([[z.real, -z.imag], [z.imag, z.real]]) / abs(z) ** 2)
    return sla.block_diag(*parts)


@dataclass
class CanonicalDecomposition:
    d: np.ndarray          # monic, highest power first
    Theta: np.ndarray      # p x m(1+nd), blocks Theta_0..Theta_nd
    R: np.ndarray
    U_stack: np.ndarray
    calC: np.ndarray | None = None

    @property
    def nd(self) -> int:
        return len(self.d) - 1

    def reconstruct(self) -> np.ndarray:
        return self.Theta @ self.U_stack @ self.R


def _entry_polys(A, B, C, D):
    """Numerator polynomials of every transfer entry over ``det(sI - A)``."""
    a, mats = faddeev_leverrier(A)
    n = A.shape[0]
    p, m = C.shape[0], B.shape[1]
    num = np.zeros((p, m, n + 1))
    for k, Ak in enumerate(mats):       # adj = sum_k A_k s^(n-1-k)
        num[:, :, k + 1] += C @ Ak @ B
    num += D[:, :, None] * a[None, None, :]
    return a, num


def _cancel(num, den, tol):
    num, den = np.array(num, dtype=complex), np.array(den, dtype=complex)
    num = np.trim_zeros(num, "f") if np.any(num) else np.zeros(1, dtype=complex)
    changed = True
    while changed and len(den) > 1:
        changed = False
        for r in np.roots(den):
            scale = 1 + np.abs(num).max()
            if len(num) > 1 and abs(np.polyval(num, r)) < tol * scale * (1 + abs(r)) ** (len(num) - 1):
                num = np.polydiv(num, [1, -r])[0]
                den = np.polydiv(den, [1, -r])[0]
                changed = True
                break
            if not np.any(np.abs(num) > tol * scale):
                return np.zeros(1, dtype=complex), np.ones(1, dtype=complex)
    return num, den


def _merge_roots(root_lists, tol):
    merged: list[complex] = []
    for roots in root_lists:
        pool = list(merged)
        extra = []
        for r in roots:
            for k, q in enumerate(pool):
                if abs(q - r) < tol * (1 + abs(r)):
                    pool.pop(k)
                    break
            else:
                extra.append(r)
        merged.extend(extra)
    return merged


def canonical_decomposition(system: PolySystem, U1, S1, case: str = "char_poly",
                            tol: float = 1e-7) -> CanonicalDecomposition:
    """Write ``Y1`` of a linear system as ``Theta [U1; U1 S1; ..] R``.

    ``char_poly`` uses ``d(s) = det(sI - A)`` and the Faddeev-LeVerrier
    adjugate; ``least_common_denominator`` cancels common pole/zero pairs entry
    by entry and takes the least common multiple of the reduced denominators.
    """
    A, B, C, D = system.A, system.B, system.C, system.D
    U1, S1 = np.atleast_2d(U1), np.atleast_2d(S1)
    n, m, p = A.shape[0], B.shape[1], C.shape[0]
    if case == "char_poly":
        a, mats = faddeev_leverrier(A)
        top = np.hstack([mats[n - 1 - k] @ B for k in range(n)] + [np.zeros((n, m))])
        bottom = np.hstack([a[n - k] * np.eye(m) for k in range(n)] + [np.eye(m)])
        calC = np.vstack([top, bottom])
        Theta = np.hstack([C, D]) @ calC
        d = a
    elif case == "least_common_denominator":
        a, num = _entry_polys(A, B, C, D)
        reduced = [[_cancel(num[i, j], a, tol) for j in range(m)] for i in range(p)]
        roots = _merge_roots([np.roots(den) for row in reduced for _, den in row], 1e-6)
        d = np.real_if_close(np.poly(roots), tol=1e6) if roots else np.ones(1)
        d = np.real(d)
        nd = len(d) - 1
        Theta = np.zeros((p, m * (nd + 1)))
        for i in range(p):
            for j in range(m):
                nm, den = reduced[i][j]
                q, rem = np.polydiv(np.asarray(d, dtype=complex), den)
                full = np.real(np.polymul(nm, q))
                coeffs = full[::-1]  # lowest power first
                for k in range(min(len(coeffs), nd + 1)):
                    Theta[i, k * m + j] = coeffs[k]
        calC = None
    else:
        raise ValueError(f"unknown case {case!r}")
    nd = len(d) - 1
    R = r_matrix(d, S1)
    return CanonicalDecomposition(np.asarray(d), Theta, R, stacked_generator(U1, S1, nd), calC)

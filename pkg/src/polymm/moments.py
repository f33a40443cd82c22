"""Power-series solution of the center-manifold equation, degree by degree.

For a :class:`~polymm.systems.PolySystem` driven by a
:class:`~polymm.systems.SignalGenerator`, the steady-state maps are

    x(v) = sum_l X_l v^[l],     y(v) = sum_l Y_l v^[l]

where, for l >= 2,

    X_l S1^<l> = A X_l + B U_l + E_l + F_l W_l
    Y_l        = C X_l + D U_l + G_l + H_l W_l

``W_l`` collects the degree-l monomials generated by ``X_1`` and ``U_1``
alone, while ``E_l``/``G_l`` collect everything coming from lower-degree
coefficients.  All products are formed on ``sigma**l`` full tuples and
compressed back with ``N_l``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kron
from .errors import CapacityError
from .linalg import diagonalize, numerical_rank, solve_sylvester
from .systems import PolySystem, SignalGenerator

# Cap on the entry count of any full-tuple intermediate (rows * sigma**l).
MAX_ENTRIES = 50_000_000


@dataclass
class MomentSeries:
    kappa: int
    Y: dict = field(default_factory=dict)
    X: dict = field(default_factory=dict)
    W: dict = field(default_factory=dict)
    E: dict = field(default_factory=dict)
    G: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    @property
    def sigma(self) -> int:
        return self.Y[1].shape[1]

    def truncated(self, kappa: int) -> "MomentSeries":
        keep = lambda d: {l: v for l, v in d.items() if l <= kappa}
        return MomentSeries(kappa, keep(self.Y), keep(self.X), keep(self.W),
                            keep(self.E), keep(self.G), keep(self.residuals))


def _check_entries(rows: int, cols: int) -> None:
    if rows * cols > MAX_ENTRIES:
        raise CapacityError(f"intermediate of {rows} x {cols} exceeds {MAX_ENTRIES} entries")


def compute_coupling_W(X1, U1, l: int) -> np.ndarray:
    """``W_l``: blocks ``(X1^[i] kron U1^[r]) N_l`` stacked for r = 0..l."""
    X1, U1 = np.atleast_2d(X1), np.atleast_2d(U1)
    sigma = X1.shape[1]
    if kron.n_multisets(sigma, l) and sigma ** l > kron.MAX_TUPLES:
        raise CapacityError(f"sigma**l = {sigma}**{l} exceeds the tuple cap")
    blocks = []
    for r in range(l + 1):
        i = l - r
        xi = kron.reduced_power_matrix(X1, i)
        ur = kron.reduced_power_matrix(U1, r)
        _check_entries(xi.shape[0] * ur.shape[0], sigma ** l)
        full = np.einsum("ap,bq->abpq", xi, ur).reshape(xi.shape[0] * ur.shape[0], -1)
        blocks.append(kron.apply_N(full, sigma, l))
    return np.vstack(blocks)


class _Lifted:
    """Lower-degree coefficients spread onto full tuples, ``Z_rho M_rho``."""

    def __init__(self, coeffs: dict, sigma: int):
        self.coeffs = coeffs
        self.sigma = sigma
        self._cache: dict = {}

    def lifted(self, rho: int) -> np.ndarray:
        if rho not in self._cache:
            self._cache[rho] = kron.embed_M(self.coeffs[rho], self.sigma, rho)
        return self._cache[rho]


def _compositions(total: int, parts: int):
    """Nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _delta_rows(xs: _Lifted, us: _Lifted, i: int, r: int, rho: int, cols: np.ndarray,
                n: int, m: int) -> np.ndarray:
    """Selected rows of ``(M_i kron M_r) Delta_{i,r}`` for block columns ``cols``.

    Row ``(a, b)`` of a Kronecker product of row-indexed factors is the
    Kronecker product of the selected rows, so only the needed rows are formed.
    """
    nu = kron.n_multisets(m, r)
    ax = kron.multiset_array(n, i)[cols // nu] if i else np.zeros((len(cols), 0), dtype=np.intp)
    au = kron.multiset_array(m, r)[cols % nu] if r else np.zeros((len(cols), 0), dtype=np.intp)
    _check_entries(len(cols), xs.sigma ** (i + r + rho))
    out = None
    for rx in range(rho + 1):
        ru = rho - rx
        for cx in _compositions(rx, i):
            for cu in _compositions(ru, r):
                term = np.ones((len(cols), 1))
                for k, e in enumerate(cx):
                    term = np.einsum("ca,cb->cab", term, xs.lifted(1 + e)[ax[:, k]]).reshape(len(cols), -1)
                for k, e in enumerate(cu):
                    term = np.einsum("ca,cb->cab", term, us.lifted(1 + e)[au[:, k]]).reshape(len(cols), -1)
                out = term if out is None else out + term
    return out


def _times_kron_sum(Z: np.ndarray, SkM: np.ndarray, sigma: int, s: int, k: int) -> np.ndarray:
    """``Z (S_k M_k)^{s}`` without forming the successive Kronecker sum."""
    rows = Z.shape[0]
    T = Z.reshape((rows,) + (sigma,) * s)
    K = SkM.reshape((sigma,) + (sigma,) * k)
    out = np.zeros((rows, sigma ** (s - 1 + k)))
    for pos in range(s):
        term = np.tensordot(T, K, axes=([1 + pos], [0]))
        # new axes sit at the end; move them into slot ``pos``
        tail = list(range(term.ndim - k, term.ndim))
        term = np.moveaxis(term, tail, list(range(1 + pos, 1 + pos + k)))
        out += term.reshape(rows, -1)
    return out


def compute_corrections(X: dict, system: PolySystem, gen: SignalGenerator, l: int):
    """``(E_l, G_l)`` from the already known ``X_1 .. X_{l-1}``."""
    if l < 2:
        raise ValueError("corrections are defined for l >= 2")
    n, m, p, sigma = system.n, system.m, system.p, gen.sigma
    C_l = kron.n_multisets(sigma, l)
    X1 = X[1]
    if l == 2:
        return -X1 @ gen.Sl(2), np.zeros((p, C_l))
    if sigma ** l > kron.MAX_TUPLES:
        raise CapacityError(f"sigma**l = {sigma}**{l} exceeds the tuple cap")
    xs = _Lifted(X, sigma)
    us = _Lifted({k: gen.Ul(k) for k in range(1, l)}, sigma)
    E_full = np.zeros((n, sigma ** l))
    G_full = np.zeros((p, sigma ** l))
    for s in range(2, l):
        rho = l - s
        for r in range(s + 1):
            i = s - r
            Fb, Hb = system.F.get((i, r)), system.H.get((i, r))
            parts = [b for b in (Fb, Hb) if b is not None]
            if not parts:
                continue
            cols = np.flatnonzero(np.any(np.vstack(parts) != 0, axis=0))
            if cols.size == 0:
                continue
            sel = _delta_rows(xs, us, i, r, rho, cols, n, m)
            if Fb is not None:
                E_full += Fb[:, cols] @ sel
            if Hb is not None:
                G_full += Hb[:, cols] @ sel
        k = l - s + 1
        Sk = gen.S.get(k)
        if Sk is not None and np.any(Sk):
            E_full -= _times_kron_sum(xs.lifted(s), kron.embed_M(Sk, sigma, k), sigma, s, k)
    E = kron.apply_N(E_full, sigma, l) - X1 @ gen.Sl(l)
    G = kron.apply_N(G_full, sigma, l)
    return E, G


def sylvester_rhs(system: PolySystem, gen: SignalGenerator, l: int, E, W) -> np.ndarray:
    return system.B @ gen.Ul(l) + E + system.F_stack(l) @ W


def moment_recursion(system: PolySystem, gen: SignalGenerator, kappa: int,
                     keep_intermediates: bool = True) -> MomentSeries:
    """Moments ``(X_l, Y_l)`` for l = 1..kappa."""
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if system.m != gen.m:
        raise ValueError(f"system has m={system.m} inputs, generator drives m={gen.m}")
    A, B, C, D = system.A, system.B, system.C, system.D
    S1, U1 = gen.S1, gen.U1
    out = MomentSeries(kappa)
    X1 = solve_sylvester(A, S1, B @ U1)
    out.X[1] = X1
    out.Y[1] = C @ X1 + D @ U1
    out.residuals[1] = np.linalg.norm(X1 @ S1 - A @ X1 - B @ U1)
    for l in range(2, kappa + 1):
        W = compute_coupling_W(X1, U1, l)
        E, G = compute_corrections(out.X, system, gen, l)
        Sl = kron.reduced_kron_sum(S1, l)
        rhs = sylvester_rhs(system, gen, l, E, W)
        Xl = solve_sylvester(A, Sl, rhs)
        out.X[l] = Xl
        out.Y[l] = C @ Xl + D @ gen.Ul(l) + G + system.H_stack(l) @ W
        out.residuals[l] = np.linalg.norm(Xl @ Sl - A @ Xl - rhs)
        if keep_intermediates:
            out.W[l], out.E[l], out.G[l] = W, E, G
    return out


def evaluate_series(series: MomentSeries, v) -> np.ndarray:
    """Truncated output map ``sum_l Y_l v^[l]``; ``v`` may carry a batch axis."""
    v = np.asarray(v, dtype=float)
    out = None
    for l in sorted(series.Y):
        term = np.tensordot(series.Y[l], kron.reduced_power_vector(v, l), axes=1)
        out = term if out is None else out + term
    return out


def evaluate_state_series(series: MomentSeries, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = None
    for l in sorted(series.X):
        term = np.tensordot(series.X[l], kron.reduced_power_vector(v, l), axes=1)
        out = term if out is None else out + term
    return out


def transfer(A, B, C, D, s) -> np.ndarray:
    """``C (sI - A)^-1 B + D`` at one complex point."""
    n = A.shape[0]
    return C @ np.linalg.solve(s * np.eye(n) - A, B) + D


@dataclass
class FrequencyData:
    degree: int
    eigenvalues: np.ndarray
    P: np.ndarray
    Y_prime: np.ndarray | None
    columns: np.ndarray  # Y~ (l = 1) or Y~' (l >= 2), one column per eigenvalue
    max_imag: float


def frequency_transform(series: MomentSeries, system: PolySystem, gen: SignalGenerator,
                        l: int, Y_target=None) -> FrequencyData:
    """Eigen-coordinates form of the degree-l equations.

    For ``l = 1`` the columns are ``G_1(lambda) U~`` (which must reproduce
    ``Y_1 P``).  For ``l >= 2`` the columns are
    ``Y~ - G_1(lambda) U~ - C (lambda I - A)^-1 E~ - G~`` and ``Y_prime`` is
    their image under ``P^-1``: the part of ``Y_l`` produced by ``F_l``/``H_l``.
    ``Y_target`` replaces ``Y_l`` (a target moment rather than the model's own).
    """
    A, B, C, D = system.A, system.B, system.C, system.D
    S = gen.S1 if l == 1 else kron.reduced_kron_sum(gen.S1, l)
    dg = diagonalize(S)
    P, lam = dg.P, dg.eigenvalues
    n = system.n
    Ut = gen.Ul(l) @ P
    if l == 1:
        cols = np.column_stack([transfer(A, B, C, D, z) @ Ut[:, k] for k, z in enumerate(lam)])
        return FrequencyData(1, lam, P, None, cols, 0.0)
    Y = series.Y[l] if Y_target is None else np.atleast_2d(Y_target)
    Et = series.E[l] @ P
    Gt = series.G[l] @ P
    Yt = Y @ P
    cols = np.empty(Yt.shape, dtype=complex)
    for k, z in enumerate(lam):
        xk = np.linalg.solve(z * np.eye(n) - A, B @ Ut[:, k] + Et[:, k])
        cols[:, k] = Yt[:, k] - C @ xk - D @ Ut[:, k] - Gt[:, k]
    Yp = cols @ np.linalg.inv(P)
    scale = 1.0 + np.abs(Yp).max(initial=0.0)
    max_imag = float(np.abs(Yp.imag).max(initial=0.0))
    if max_imag > 1e-8 * scale:
        raise ValueError(f"Y' has imaginary part {max_imag:.2e}; eigenvalue pairing broken")
    return FrequencyData(l, lam, P, Yp.real, cols, max_imag)


def deficit_time_domain(series: MomentSeries, system: PolySystem, gen: SignalGenerator,
                        l: int, Y_target) -> np.ndarray:
    """Same quantity as ``frequency_transform(...).Y_prime`` via one Sylvester solve."""
    Sl = kron.reduced_kron_sum(gen.S1, l)
    Xpp = solve_sylvester(system.A, Sl, system.B @ gen.Ul(l) + series.E[l])
    return np.atleast_2d(Y_target) - system.C @ Xpp - system.D @ gen.Ul(l) - series.G[l]


def w_rank(W: np.ndarray) -> int:
    return numerical_rank(W)

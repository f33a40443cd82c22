"""Polynomial state-space models and polynomial signal generators.

Coefficient blocks use the reduced-Kronecker convention of :mod:`polymm.kron`:

    f(x, u) = sum_{i+r>=1} F[i, r] (x^[i] kron u^[r])
    h(x, u) = sum_{i+r>=1} H[i, r] (x^[i] kron u^[r])
    s(v)    = sum_l S[l] v^[l],     u(v) = sum_l U[l] v^[l]
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, SpectrumViolation
from .kron import n_multisets, reduced_power_vector


def block_columns(n: int, m: int, i: int, r: int) -> int:
    return n_multisets(n, i) * n_multisets(m, r)


def stacked_width(n: int, m: int, l: int) -> int:
    """Row count ``m_l`` of ``W_l`` (= column count of ``F_l``)."""
    return sum(block_columns(n, m, l - r, r) for r in range(l + 1))


@dataclass
class PolySystem:
    """Polynomial system with blocks ``F[(i, r)]`` (n rows) and ``H[(i, r)]`` (p rows).

    Missing blocks are zero.  ``L`` is the declared maximum degree; it defaults
    to the highest degree carrying a block.
    """

    n: int
    m: int
    p: int
    F: dict = field(default_factory=dict)
    H: dict = field(default_factory=dict)
    L: int | None = None

    def __post_init__(self):
        self.F = {tuple(k): np.asarray(v, dtype=float) for k, v in self.F.items()}
        self.H = {tuple(k): np.asarray(v, dtype=float) for k, v in self.H.items()}
        top = max([i + r for i, r in list(self.F) + list(self.H)] + [1])
        if self.L is None:
            self.L = top
        if self.L < top:
            raise SchemaError(f"declared L={self.L} below block degree {top}")
        self.validate()

    @classmethod
    def linear(cls, A, B, C, D=None) -> "PolySystem":
        A, B, C = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (A, B, C))
        n, m, p = A.shape[0], B.shape[1], C.shape[0]
        D = np.zeros((p, m)) if D is None else np.atleast_2d(np.asarray(D, dtype=float))
        return cls(n, m, p, F={(1, 0): A, (0, 1): B}, H={(1, 0): C, (0, 1): D}, L=1)

    def validate(self) -> None:
        for name, blocks, rows in (("F", self.F, self.n), ("H", self.H, self.p)):
            for (i, r), blk in blocks.items():
                if i < 0 or r < 0 or i + r < 1:
                    raise SchemaError(f"{name}[{i},{r}] is not a valid degree pair")
                want = (rows, block_columns(self.n, self.m, i, r))
                if blk.shape != want:
                    raise SchemaError(f"{name}[{i},{r}] has shape {blk.shape}, expected {want}")

    def _block(self, blocks, rows, i, r):
        blk = blocks.get((i, r))
        if blk is None:
            return np.zeros((rows, block_columns(self.n, self.m, i, r)))
        return blk

    def Fb(self, i: int, r: int) -> np.ndarray:
        return self._block(self.F, self.n, i, r)

    def Hb(self, i: int, r: int) -> np.ndarray:
        return self._block(self.H, self.p, i, r)

    @property
    def A(self):
        return self.Fb(1, 0)

    @property
    def B(self):
        return self.Fb(0, 1)

    @property
    def C(self):
        return self.Hb(1, 0)

    @property
    def D(self):
        return self.Hb(0, 1)

    def F_stack(self, l: int) -> np.ndarray:
        """``F_l = [F_{l,0}, F_{l-1,1}, ..., F_{0,l}]``."""
        return np.hstack([self.Fb(l - r, r) for r in range(l + 1)])

    def H_stack(self, l: int) -> np.ndarray:
        return np.hstack([self.Hb(l - r, r) for r in range(l + 1)])

    def set_stack(self, l: int, F_l=None, H_l=None) -> None:
        """Split stacked ``F_l``/``H_l`` back into ``(i, r)`` blocks."""
        offset = 0
        for r in range(l + 1):
            i = l - r
            w = block_columns(self.n, self.m, i, r)
            if F_l is not None:
                self.F[(i, r)] = np.array(F_l[:, offset:offset + w], dtype=float)
            if H_l is not None:
                self.H[(i, r)] = np.array(H_l[:, offset:offset + w], dtype=float)
            offset += w
        self.L = max(self.L, l)

    def is_linear_state(self) -> bool:
        return all(not np.any(b) for (i, r), b in self.F.items() if i + r >= 2)

    def is_linear_output(self) -> bool:
        return all(not np.any(b) for (i, r), b in self.H.items() if i + r >= 2)

    def _eval(self, blocks, rows, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        batch = x.shape[1:]
        out = np.zeros((rows,) + batch)
        xp, up = {}, {}
        for (i, r), blk in blocks.items():
            if not np.any(blk):
                continue
            if i not in xp:
                xp[i] = reduced_power_vector(x, i)
            if r not in up:
                up[r] = reduced_power_vector(u, r)
            if batch:
                mono = np.einsum("a...,b...->ab...", xp[i], up[r]).reshape((-1,) + batch)
            else:
                mono = np.kron(xp[i], up[r])
            out += np.tensordot(blk, mono, axes=1)
        return out

    def f(self, x, u) -> np.ndarray:
        """State derivative; ``x``/``u`` may carry trailing batch axes."""
        return self._eval(self.F, self.n, x, u)

    def h(self, x, u) -> np.ndarray:
        return self._eval(self.H, self.p, x, u)

    def copy(self) -> "PolySystem":
        return PolySystem(self.n, self.m, self.p,
                          {k: v.copy() for k, v in self.F.items()},
                          {k: v.copy() for k, v in self.H.items()}, self.L)


@dataclass
class SignalGenerator:
    """Polynomial exosystem ``v' = sum S[l] v^[l]``, ``u = sum U[l] v^[l]``."""

    sigma: int
    m: int
    S: dict = field(default_factory=dict)
    U: dict = field(default_factory=dict)
    check_spectrum: bool = True

    def __post_init__(self):
        self.S = {int(k): np.atleast_2d(np.asarray(v, dtype=float)) for k, v in self.S.items()}
        self.U = {int(k): np.atleast_2d(np.asarray(v, dtype=float)) for k, v in self.U.items()}
        for name, blocks, rows in (("S", self.S, self.sigma), ("U", self.U, self.m)):
            for l, blk in blocks.items():
                want = (rows, n_multisets(self.sigma, l))
                if l < 1 or blk.shape != want:
                    raise SchemaError(f"{name}[{l}] has shape {blk.shape}, expected {want}")
        if self.check_spectrum:
            check_generator_spectrum(self.S1)

    @property
    def L(self) -> int:
        return max(list(self.S) + list(self.U) + [1])

    def Sl(self, l: int) -> np.ndarray:
        return self.S.get(l, np.zeros((self.sigma, n_multisets(self.sigma, l))))

    def Ul(self, l: int) -> np.ndarray:
        return self.U.get(l, np.zeros((self.m, n_multisets(self.sigma, l))))

    @property
    def S1(self):
        return self.Sl(1)

    @property
    def U1(self):
        return self.Ul(1)

    def s(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        for l, blk in self.S.items():
            out += np.tensordot(blk, reduced_power_vector(v, l), axes=1)
        return out

    def u(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.zeros((self.m,) + v.shape[1:])
        for l, blk in self.U.items():
            out += np.tensordot(blk, reduced_power_vector(v, l), axes=1)
        return out


def check_generator_spectrum(S1, tol: float = 1e-9) -> None:
    """Eigenvalues of ``S1`` must be purely imaginary and semi-simple."""
    S1 = np.atleast_2d(np.asarray(S1, dtype=float))
    lam = np.linalg.eigvals(S1)
    scale = max(1.0, np.linalg.norm(S1, 2))
    if lam.size and np.max(np.abs(lam.real)) > tol * scale:
        raise SpectrumViolation(f"S1 has eigenvalues off the imaginary axis: {lam}")
    # semi-simple: geometric multiplicity equals algebraic multiplicity
    k = S1.shape[0]
    groups: list[list[complex]] = []
    for z in lam:
        for g in groups:
            if abs(g[0] - z) < 1e-6 * scale:
                g.append(z)
                break
        else:
            groups.append([z])
    for g in groups:
        mu = np.mean(g)
        s = np.linalg.svd(S1 - mu * np.eye(k), compute_uv=False)
        nullity = int(np.sum(s < 1e-7 * scale))
        if nullity < len(g):
            raise SpectrumViolation(f"eigenvalue {mu:.6g} of S1 is not semi-simple")


class CompiledPolyMap:
    """Fast evaluator of ``sum_{(i,r)} K[i,r] (x^[i] kron u^[r])``.

    Each block column is one monomial of ``z = [x; u]``; only monomials with a
    nonzero coefficient are kept, grouped by degree.
    """

    def __init__(self, blocks: dict, rows: int, n: int, m: int):
        from itertools import combinations_with_replacement as cwr

        self.rows = rows
        terms: dict = {}
        for (i, r), K in blocks.items():
            K = np.asarray(K, dtype=float)
            used = np.flatnonzero(np.any(K != 0, axis=0))
            if used.size == 0:
                continue
            xs = list(cwr(range(n), i))
            us = list(cwr(range(n, n + m), r))
            nu = len(us)
            for c in used:
                mono = xs[c // nu] + us[c % nu]
                acc = terms.setdefault(len(mono), {})
                acc[mono] = acc.get(mono, 0.0) + K[:, c]
        self.groups = []
        for d, acc in sorted(terms.items()):
            monos = list(acc)
            idx = np.array(monos, dtype=np.intp).reshape(len(monos), d)
            coef = np.column_stack([acc[k] for k in monos])
            self.groups.append((idx, coef))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        out = None
        for idx, coef in self.groups:
            mono = z[idx[:, 0]]
            for k in range(1, idx.shape[1]):
                mono = mono * z[idx[:, k]]
            term = coef @ mono
            out = term if out is None else out + term
        if out is None:
            return np.zeros((self.rows,) + z.shape[1:])
        return out


def compile_system(system: PolySystem):
    """``(f, h)`` as :class:`CompiledPolyMap` objects over ``z = [x; u]``."""
    return (CompiledPolyMap(system.F, system.n, system.n, system.m),
            CompiledPolyMap(system.H, system.p, system.n, system.m))


def compile_generator(gen: SignalGenerator):
    """``(s, u)`` as :class:`CompiledPolyMap` objects over ``v``."""
    wrap = lambda blocks: {(l, 0): b for l, b in blocks.items()}
    return (CompiledPolyMap(wrap(gen.S), gen.sigma, gen.sigma, 0),
            CompiledPolyMap(wrap(gen.U), gen.m, gen.sigma, 0))

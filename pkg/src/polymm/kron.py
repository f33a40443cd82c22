"""Successive and reduced Kronecker powers, Kronecker sums, and the M/N maps.

Multiset convention
-------------------
``v^[i]`` keeps one copy of each monomial of ``v^(i)``.  Rows are ordered by
first occurrence when the tuples of ``{0..n-1}^i`` are enumerated
lexicographically.  The first occurrence of a multiset is its sorted tuple,
so the row order coincides with ``itertools.combinations_with_replacement``.
Every coefficient block in this package is indexed against this order; it is
recorded in files as :data:`CONVENTION`.

``M`` selects the first-occurrence tuple of each multiset, ``N`` lifts every
tuple onto the row of its multiset.  Both are kept as index arrays; dense
matrices are only built on request.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sps

from .errors import CapacityError

CONVENTION = "multiset-lex-first-occurrence/v1"

# Hard cap on n**i for any enumeration of full tuples.
MAX_TUPLES = 2_000_000


def n_multisets(n: int, i: int) -> int:
    """Number of degree-``i`` monomials in ``n`` variables, C(n-1+i, i)."""
    if i == 0:
        return 1
    return comb(n - 1 + i, i)


def _check_capacity(n: int, i: int) -> None:
    if n ** i > MAX_TUPLES:
        raise CapacityError(f"n**i = {n}**{i} exceeds the tuple cap {MAX_TUPLES}")


@dataclass(frozen=True)
class MultisetIndexTable:
    """Enumeration of degree-``degree`` multisets over ``n`` symbols.

    ``rows[k]`` is the k-th multiset as a nondecreasing tuple of 0-based symbol
    indices.  ``tuple_to_row[c]`` gives the row of the tuple whose base-``n``
    code is ``c`` (lexicographic rank in ``{0..n-1}^degree``), and
    ``first_tuple[k]`` is the code of the first tuple hitting row ``k``.
    """

    n: int
    degree: int
    rows: tuple
    tuple_to_row: np.ndarray
    first_tuple: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)


@lru_cache(maxsize=256)
def build_index_table(n: int, i: int) -> MultisetIndexTable:
    if n < 1 or i < 0:
        raise ValueError(f"need n >= 1 and i >= 0, got n={n}, i={i}")
    _check_capacity(n, i)
    rows = tuple(itertools.combinations_with_replacement(range(n), i))
    if i == 0:
        one = np.zeros(1, dtype=np.intp)
        return MultisetIndexTable(n, 0, rows, one, one)
    # digits of every tuple, most significant first
    codes = np.arange(n ** i, dtype=np.intp)
    digits = np.empty((n ** i, i), dtype=np.intp)
    rem = codes.copy()
    for k in range(i - 1, -1, -1):
        digits[:, k] = rem % n
        rem //= n
    digits.sort(axis=1)
    weights = n ** np.arange(i - 1, -1, -1, dtype=np.intp)
    sorted_codes = digits @ weights
    first, inverse = np.unique(sorted_codes, return_inverse=True)
    assert len(first) == len(rows)
    for arr in (first, inverse):
        arr.flags.writeable = False
    return MultisetIndexTable(n, i, rows, inverse.astype(np.intp), first.astype(np.intp))


@lru_cache(maxsize=256)
def multiset_array(n: int, i: int) -> np.ndarray:
    """Rows of the index table as an ``(C, i)`` integer array (no n**i work)."""
    out = np.array(list(itertools.combinations_with_replacement(range(n), i)), dtype=np.intp)
    out = out.reshape(n_multisets(n, i), i)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ProjectionPair:
    M: np.ndarray
    N: np.ndarray


def build_MN(table: MultisetIndexTable) -> ProjectionPair:
    """Dense 0/1 selection matrix ``M`` and lifting matrix ``N``."""
    c, t = len(table), table.n ** table.degree
    M = np.zeros((c, t), dtype=np.int64)
    M[np.arange(c), table.first_tuple] = 1
    N = np.zeros((t, c), dtype=np.int64)
    N[np.arange(t), table.tuple_to_row] = 1
    return ProjectionPair(M, N)


@lru_cache(maxsize=256)
def lift_matrix(n: int, i: int) -> sps.csr_matrix:
    """Sparse ``N_i^n``."""
    table = build_index_table(n, i)
    t = n ** i
    return sps.csr_matrix(
        (np.ones(t), (np.arange(t), table.tuple_to_row)), shape=(t, len(table))
    )


def apply_N(Z: np.ndarray, n: int, i: int) -> np.ndarray:
    """``Z @ N_i^n``: sum the columns of ``Z`` that belong to the same multiset."""
    Z = np.asarray(Z)
    return np.asarray((lift_matrix(n, i).T @ Z.T).T)


def apply_M_rows(Z: np.ndarray, n: int, i: int) -> np.ndarray:
    """``M_i^n @ Z`` for a matrix with ``n**i`` rows (row selection)."""
    return np.asarray(Z)[build_index_table(n, i).first_tuple]


def embed_M(X: np.ndarray, sigma: int, i: int) -> np.ndarray:
    """``X @ M_i^sigma``: spread reduced-basis columns onto first-occurrence tuples."""
    X = np.asarray(X)
    table = build_index_table(sigma, i)
    out = np.zeros(X.shape[:-1] + (sigma ** i,), dtype=X.dtype)
    out[..., table.first_tuple] = X
    return out


def kron_power_vector(v: np.ndarray, i: int) -> np.ndarray:
    """Successive Kronecker power ``v^(i)``."""
    out = np.ones(1, dtype=np.result_type(v, float))
    for _ in range(i):
        out = np.kron(out, v)
    return out


def reduced_power_vector(v: np.ndarray, i: int) -> np.ndarray:
    """``v^[i]`` as distinct monomials, without forming ``v^(i)``.

    ``v`` may also be 2-D with one vector per column; the result then has one
    column per input column.
    """
    v = np.asarray(v)
    if i < 0:
        raise ValueError("degree must be nonnegative")
    n = v.shape[0]
    if i == 0:
        return np.ones((1,) + v.shape[1:], dtype=np.result_type(v, float))
    idx = multiset_array(n, i)
    return np.prod(v[idx], axis=1)


def kron_power_matrix(A: np.ndarray, i: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.result_type(A, float))
    for _ in range(i):
        out = np.kron(out, A)
    return out


def reduced_power_matrix(A: np.ndarray, i: int) -> np.ndarray:
    """``A^[i] = M_i^q A^(i)``, built one selected row at a time.

    Row ``(a_1..a_i)`` of the result is ``A[a_1] kron ... kron A[a_i]``, so
    only ``C(q-1+i, i) * t**i`` entries are ever formed.
    """
    A = np.asarray(A)
    q, t = A.shape
    if i == 0:
        return np.ones((1, 1), dtype=np.result_type(A, float))
    if t ** i > MAX_TUPLES:
        raise CapacityError(f"t**i = {t}**{i} exceeds the tuple cap {MAX_TUPLES}")
    idx = multiset_array(q, i)
    out = A[idx[:, 0]]
    for k in range(1, i):
        out = np.einsum("ca,cb->cab", out, A[idx[:, k]]).reshape(len(idx), -1)
    return out


def successive_kron_sum(A: np.ndarray, i: int) -> np.ndarray:
    """``sum_r I^(r-1) kron A kron I^(i-r)`` with identities of size ``A.shape[0]``."""
    A = np.asarray(A)
    if i < 1:
        raise ValueError("successive Kronecker sum needs i >= 1")
    q = A.shape[0]
    if q ** i > MAX_TUPLES:
        raise CapacityError(f"q**i = {q}**{i} exceeds the tuple cap {MAX_TUPLES}")
    out = None
    for r in range(1, i + 1):
        term = np.kron(np.kron(np.eye(q ** (r - 1)), A), np.eye(q ** (i - r)))
        out = term if out is None else out + term
    return out


def reduced_kron_sum(A: np.ndarray, i: int) -> np.ndarray:
    """``A^<i> = M_i^n A^{i} N_i^n`` for square ``A``.

    Built row by row: row ``a`` collects ``A[a_r, j]`` at the multiset of
    ``a`` with slot ``r`` replaced by ``j``.  No ``n**i``-square matrix is formed.
    """
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("reduced Kronecker sum needs a square matrix")
    if i == 1:
        return A.astype(float, copy=True)
    table = build_index_table(n, i)
    rows = multiset_array(n, i)
    C = len(rows)
    out = np.zeros((C, C), dtype=np.result_type(A, float))
    row_ids = np.repeat(np.arange(C), n)
    for r in range(i):
        w = n ** (i - 1 - r)
        codes = (table.first_tuple - rows[:, r] * w)[:, None] + np.arange(n)[None, :] * w
        cols = table.tuple_to_row[codes]
        np.add.at(out, (row_ids, cols.ravel()), A[rows[:, r]].ravel())
    return out

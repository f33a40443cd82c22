"""Builders for the two worked examples (six-state benchmark and RL ladder)."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from . import kron
from .systems import PolySystem, SignalGenerator

# Reduced-model presets that reproduce the published numbers.
CASE1_METHOD1_EIGS = [-0.5, -1 + 0.2j, -1 - 0.2j]
CASE1_METHOD1_B = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
CASE1_METHOD2_EIGS = [-1 + 0.2j, -1 - 0.2j]
CASE1_METHOD2_C = np.array([[1.0, 1.0]])
LADDER_METHOD1_EIGS = [-1.0, -2.0, -3.0, -4.0]
LADDER_METHOD2_EIGS = [-1.0, -2.0]


def case1_generator() -> SignalGenerator:
    S1 = sla.block_diag(0.0, [[0, 0.5], [-0.5, 0]], [[0, 1.0], [-1.0, 0]])
    U1 = np.array([[1, 1, 0, 1, 0], [-1, 0, 1, 0, 1]], dtype=float)
    return SignalGenerator(5, 2, S={1: S1}, U={1: U1})


def build_case1() -> tuple[PolySystem, SignalGenerator]:
    """Six-state, two-input, one-output benchmark with quadratic terms, L = 3."""
    A = sla.block_diag(-0.5, [[-1, 0.2], [-0.2, -1]], [[-1.5, 0.1], [-0.1, -1.5]], -2.0)
    B = np.array([[1, 1, 0, -1, 0, 1], [-2, 0, 1, -1, -1, -1]], dtype=float).T
    C = np.array([[1.3, 1, 0, 0, 1, -2]])
    w = kron.n_multisets(6, 2)
    F20 = np.zeros((6, w))
    F20[0, 1] = -1.0   # x1 x2
    F20[1, 4] = 2.0    # x1 x5
    F20[2, 2] = 0.5    # x1 x3
    H20 = np.zeros((1, w))
    H20[0, 5] = 3.0    # x1 x6
    system = PolySystem(6, 2, 1, F={(1, 0): A, (0, 1): B, (2, 0): F20},
                        H={(1, 0): C, (0, 1): np.zeros((1, 2)), (2, 0): H20}, L=3)
    return system, case1_generator()


def _diagonal_power_block(N: int, i: int, coeff: float) -> np.ndarray:
    """``coeff * x_k^i`` in row k, on the reduced-power basis."""
    F = np.zeros((N, kron.n_multisets(N, i)))
    ms = kron.multiset_array(N, i)
    diag = np.all(ms == ms[:, :1], axis=1)
    cols = np.flatnonzero(diag)
    F[ms[cols, 0], cols] = coeff
    return F


def build_ladder(N: int) -> PolySystem:
    """RL ladder with nonlinear resistors: ``N`` sections, inputs ``(u1, u2)``, ``y = x1``."""
    if N < 3:
        raise ValueError("the ladder needs at least 3 sections")
    A = -2.0 * np.eye(N) + np.eye(N, k=1) + np.eye(N, k=-1)
    B = np.zeros((N, 2))
    B[0, 0] = 1.0
    B[0, 1] = -2.0
    B[1, 1] = 1.0
    C = np.zeros((1, N))
    C[0, 0] = 1.0
    return PolySystem(N, 2, 1,
                      F={(1, 0): A, (0, 1): B,
                         (2, 0): _diagonal_power_block(N, 2, -0.5),
                         (3, 0): _diagonal_power_block(N, 3, -1.0 / 3.0)},
                      H={(1, 0): C, (0, 1): np.zeros((1, 2))}, L=3)


def ladder_generator(omega_scale: float = 1.0) -> SignalGenerator:
    """Two rotations at ``100 pi`` and ``200 pi`` (times ``omega_scale``) plus a quadratic input term."""
    w1, w2 = 100 * np.pi * omega_scale, 200 * np.pi * omega_scale
    S1 = sla.block_diag([[0, w1], [-w1, 0]], [[0, w2], [-w2, 0]])
    U1 = np.array([[0, 1, 0, 1], [1, 0, 1, 0]], dtype=float)
    U2 = np.zeros((2, kron.n_multisets(4, 2)))
    U2[0, 2] = 1.0     # v1 v3
    U2[1, 6] = 1.0     # v2 v4
    return SignalGenerator(4, 2, S={1: S1}, U={1: U1, 2: U2})

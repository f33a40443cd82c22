import numpy as np
import pytest
import scipy.linalg as sla

from polymm.cases import build_case1, build_ladder, ladder_generator
from polymm.systems import SignalGenerator


@pytest.fixture(scope="session")
def case1():
    return build_case1()


@pytest.fixture(scope="session")
def ladder8():
    return build_ladder(8), ladder_generator(0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotation_generator(rng, sigma: int, m: int, with_zero: bool = False) -> SignalGenerator:
    """Linear generator with distinct imaginary eigenvalues and a random orthogonal basis change."""
    blocks, freqs = [], rng.permutation(np.arange(1, 20))[: sigma] * 0.37
    k = 0
    if with_zero or sigma % 2:
        blocks.append(np.zeros((1, 1)))
        k = 1
    for j in range((sigma - k) // 2):
        w = freqs[j]
        blocks.append(np.array([[0.0, w], [-w, 0.0]]))
    S1 = sla.block_diag(*blocks)
    Q, _ = np.linalg.qr(rng.standard_normal((sigma, sigma)))
    S1 = Q @ S1 @ Q.T
    U1 = rng.standard_normal((m, sigma))
    return SignalGenerator(sigma, m, S={1: S1}, U={1: U1})


def random_hurwitz(rng, n: int) -> np.ndarray:
    from polymm.linear import hurwitz_from_eigs
    eigs = []
    while len(eigs) < n:
        if n - len(eigs) >= 2 and rng.random() < 0.5:
            z = complex(-rng.uniform(0.3, 3.0), rng.uniform(0.1, 2.0))
            eigs += [z, z.conjugate()]
        else:
            eigs.append(-rng.uniform(0.3, 3.0))
    return hurwitz_from_eigs(eigs)

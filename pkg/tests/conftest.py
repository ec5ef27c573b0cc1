import numpy as np
import pytest

from switchid.signals import AverageDwellParams
from switchid.system import SwitchedSystem


@pytest.fixture(scope="session")
def fig1_system() -> SwitchedSystem:
    """Two diagonal modes: one contracting at 0.5, one expanding at 2."""
    return SwitchedSystem([np.diag([0.5, 0.5]), np.diag([2.0, 2.0])])


@pytest.fixture(scope="session")
def fig1_params() -> AverageDwellParams:
    """Windowed class for the two-mode benchmark: r = 1, window length 4."""
    return AverageDwellParams(
        tau_a=2.0, N0=1, lam=1.0, lam_star=1.0, h=4, lambda1=0.5, lambda2=2.0, C=1.0
    )


def random_stable_system(rng: np.random.Generator, n_max: int = 4, s_max: int = 3) -> SwitchedSystem:
    """Dense random modes rescaled to spectral radius in (0.3, 0.95)."""
    n = int(rng.integers(2, n_max + 1))
    s = int(rng.integers(1, s_max + 1))
    mats = []
    for _ in range(s):
        a = rng.normal(size=(n, n))
        a *= rng.uniform(0.3, 0.95) / max(abs(np.linalg.eigvals(a)))
        mats.append(a)
    return SwitchedSystem(mats)


def random_contraction_system(rng: np.random.Generator, n_max: int = 4, s_max: int = 3) -> SwitchedSystem:
    """Scaled orthogonal modes; every product of length m has norm scale^m."""
    n = int(rng.integers(1, n_max + 1))
    s = int(rng.integers(1, s_max + 1))
    mats = []
    for _ in range(s):
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        mats.append(q * rng.uniform(0.4, 1.0))
    return SwitchedSystem(mats)

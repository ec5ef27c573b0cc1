"""Switched linear system: mode set, trajectory simulation, exact Gramian.

The dynamics are ``x_{t+1} = A_{w_t} x_t + sigma_e * e_t`` where ``w_t`` is a
known mode sequence with values in ``{1, ..., s}`` and ``e_t`` is white noise
with unit covariance.  Signals store ``w_0 .. w_{N-1}``; trajectories store
``x_0 .. x_N`` together with the raw (unscaled) noise draws, so the recursion
can be reconstructed exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError
from .linalg import as_matrix, spectral_radius, symmetric_eig_extremes

NOISE_FAMILIES = ("gaussian", "rademacher", "uniform")
_SQRT3 = np.sqrt(3.0)


class SwitchedSystem:
    """Ordered set of square mode matrices sharing one state dimension.

    Mode labels are 1-based throughout the public API.  ``stable_set`` holds
    the labels whose spectral radius is strictly below 1.
    """

    def __init__(self, modes: Sequence) -> None:
        if len(modes) < 1:
            raise InvalidInputError("a switched system needs at least one mode")
        mats = []
        for k, raw in enumerate(modes):
            m = as_matrix(raw, square=True, name=f"mode {k + 1}")
            m.setflags(write=False)
            mats.append(m)
        n = mats[0].shape[0]
        for k, m in enumerate(mats):
            if m.shape[0] != n:
                raise InvalidInputError(f"mode {k + 1} has dimension {m.shape[0]}, expected {n}")
        self._modes = tuple(mats)
        self._radii = tuple(spectral_radius(m) for m in mats)
        self._stable = frozenset(i + 1 for i, r in enumerate(self._radii) if r < 1.0)

    @property
    def modes(self) -> tuple[np.ndarray, ...]:
        return self._modes

    @property
    def n(self) -> int:
        return self._modes[0].shape[0]

    @property
    def s(self) -> int:
        return len(self._modes)

    @property
    def stable_set(self) -> frozenset[int]:
        return self._stable

    @property
    def spectral_radii(self) -> tuple[float, ...]:
        return self._radii

    def mode(self, label: int) -> np.ndarray:
        """Mode matrix for a 1-based label."""
        if not 1 <= label <= self.s:
            raise InvalidInputError(f"mode label {label} outside 1..{self.s}")
        return self._modes[label - 1]


class SwitchingSignal:
    """Finite mode sequence ``w_0 .. w_{N-1}`` with values in ``{1, ..., s}``."""

    def __init__(self, values, num_modes: int) -> None:
        arr = np.asarray(values, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise InvalidInputError("signal values must be a non-empty 1-D sequence")
        if num_modes < 1:
            raise InvalidInputError("num_modes must be positive")
        if arr.min() < 1 or arr.max() > num_modes:
            raise InvalidInputError(f"signal values must lie in 1..{num_modes}")
        arr.setflags(write=False)
        self.values = arr
        self.num_modes = int(num_modes)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def length(self) -> int:
        return len(self)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SwitchingSignal)
            and self.num_modes == other.num_modes
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise family with unit per-coordinate variance and variance proxy 1.

    gaussian: standard normal; rademacher: +-1 equiprobable; uniform: on
    [-sqrt(3), sqrt(3)].  Streams are derived from ``(seed, replication)`` so
    Monte-Carlo replications are independent and reproducible.
    """

    family: str = "gaussian"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in NOISE_FAMILIES:
            raise InvalidInputError(f"noise family must be one of {NOISE_FAMILIES}")

    def stream(self, replication: int = 0) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), int(replication)])

    def sample(self, gen: np.random.Generator, shape) -> np.ndarray:
        """Draw from ``gen``; chunked draws concatenate to one large draw."""
        if self.family == "gaussian":
            return gen.standard_normal(shape)
        if self.family == "rademacher":
            return gen.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
        return gen.uniform(-_SQRT3, _SQRT3, size=shape)


@dataclass(frozen=True)
class Trajectory:
    """States ``x_0 .. x_N`` plus the signal and noise that produced them."""

    states: np.ndarray  # (N+1, n)
    signal: SwitchingSignal
    noise: np.ndarray  # (N, n), unscaled draws e_t
    noise_scale: float = 1.0

    @property
    def length(self) -> int:
        return len(self.signal)

    @property
    def n(self) -> int:
        return int(self.states.shape[1])

    def reconstruction_error(self, system: SwitchedSystem) -> float:
        """Max-abs residual of ``x_{t+1} - A_{w_t} x_t - sigma_e e_t``."""
        worst = 0.0
        for t in range(self.length):
            a = system.mode(int(self.signal.values[t]))
            r = self.states[t + 1] - a @ self.states[t] - self.noise_scale * self.noise[t]
            worst = max(worst, float(np.max(np.abs(r))))
        return worst


def transition_product(system: SwitchedSystem, signal: SwitchingSignal, j: int, k: int) -> np.ndarray:
    """Ordered product ``A_(j) A_(j-1) ... A_(k)``; identity when ``j < k``."""
    if j < k:
        return np.eye(system.n)
    if k < 0 or j > len(signal) - 1:
        raise InvalidInputError(f"product indices [{k}, {j}] outside signal range 0..{len(signal) - 1}")
    out = np.eye(system.n)
    for t in range(j, k - 1, -1):
        out = out @ system.mode(int(signal.values[t]))
    return out


def simulate(
    system: SwitchedSystem,
    signal: SwitchingSignal,
    noise: NoiseSpec | None = None,
    noise_scale: float = 1.0,
    x0: np.ndarray | None = None,
    replication: int = 0,
) -> Trajectory:
    """Run the recursion for the full signal length.

    ``noise=None`` disables the noise term entirely (zero draws).  A nonzero
    ``x0`` is allowed, but the error bounds in this package assume ``x0 = 0``
    and are flagged accordingly downstream.
    """
    n = system.n
    big_n = len(signal)
    if signal.num_modes > system.s:
        raise InvalidInputError("signal uses more modes than the system has")
    if noise_scale <= 0:
        raise InvalidInputError("noise_scale must be positive")
    if x0 is None:
        x0 = np.zeros(n)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (n,):
        raise InvalidInputError(f"x0 must have shape ({n},)")
    if noise is None:
        draws = np.zeros((big_n, n))
    else:
        draws = noise.sample(noise.stream(replication), (big_n, n))

    states = np.empty((big_n + 1, n))
    states[0] = x0
    x = x0
    mats = system.modes
    vals = signal.values
    for t in range(big_n):
        x = mats[vals[t] - 1] @ x + noise_scale * draws[t]
        states[t + 1] = x
    return Trajectory(states=states, signal=signal, noise=draws, noise_scale=noise_scale)


class GramianResult(NamedTuple):
    matrix: np.ndarray
    lam_min: float
    lam_max: float


def iter_gramians(system: SwitchedSystem, signal: SwitchingSignal, t_max: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(t, Gamma_t)`` for ``t = 1 .. t_max`` via the one-step recursion.

    ``Gamma_1 = I`` and ``Gamma_{t+1} = A_(t) Gamma_t A_(t)^T + I``.
    """
    if not 1 <= t_max <= len(signal):
        raise InvalidInputError(f"horizon must lie in 1..{len(signal)}, got {t_max}")
    n = system.n
    gamma = np.eye(n)
    yield 1, gamma
    for t in range(1, t_max):
        a = system.mode(int(signal.values[t]))
        gamma = a @ gamma @ a.T + np.eye(n)
        yield t + 1, gamma


def gramian(system: SwitchedSystem, signal: SwitchingSignal, horizon: int) -> GramianResult:
    """Exact Gramian at ``horizon`` with its eigenvalue extremes."""
    mat = np.eye(system.n)
    for _, g in iter_gramians(system, signal, horizon):
        mat = g
    lam_min, lam_max = symmetric_eig_extremes(mat)
    return GramianResult(matrix=mat, lam_min=lam_min, lam_max=lam_max)


def gramian_direct(system: SwitchedSystem, signal: SwitchingSignal, horizon: int) -> np.ndarray:
    """Literal product-by-product summation; quadratic-time test oracle."""
    if not 1 <= horizon <= len(signal):
        raise InvalidInputError(f"horizon must lie in 1..{len(signal)}, got {horizon}")
    total = np.zeros((system.n, system.n))
    for i in range(horizon):
        prod = transition_product(system, signal, horizon - 1, horizon - i)
        total += prod @ prod.T
    return total


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    """CSV export with header ``t,w_t,x_1,...,x_n``; the final state row has
    an empty mode column."""
    n = trajectory.n
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "w_t"] + [f"x_{i + 1}" for i in range(n)])
        for t in range(trajectory.length + 1):
            w = str(int(trajectory.signal.values[t])) if t < trajectory.length else ""
            writer.writerow([t, w] + [repr(float(v)) for v in trajectory.states[t]])


def write_signal_csv(signal: SwitchingSignal, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "w_t"])
        for t, w in enumerate(signal.values):
            writer.writerow([t, int(w)])


def read_signal_csv(path, num_modes: int | None = None) -> SwitchingSignal:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["t", "w_t"]:
            raise InvalidInputError(f"signal CSV {path} must start with header 't,w_t'")
        values = [int(row[1]) for row in reader if row]
    if not values:
        raise InvalidInputError(f"signal CSV {path} has no rows")
    if num_modes is None:
        num_modes = max(values)
    return SwitchingSignal(values, num_modes)

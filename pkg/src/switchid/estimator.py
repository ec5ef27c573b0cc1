"""Switched least-squares: per-mode data partition, fits, and error norms.

Indexing convention (important): a trajectory with signal ``w_0 .. w_{N-1}``
contributes the regressor pairs ``(x_t, x_{t+1})`` for ``t = 1 .. N-1`` only.
Step ``t = 0`` is deliberately unused, matching the convention that mode
index sets live in ``{1, ..., N-1}``; getting this off by one silently
corrupts every downstream quantity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NoDataError
from .linalg import pseudoinverse, singular_values, spectral_norm
from .system import SwitchedSystem, Trajectory

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class ModePartition:
    """Active-step index sets ``T_i``, their sizes, and last active steps."""

    index_sets: dict[int, np.ndarray]
    counts: dict[int, int]
    last_active: dict[int, int | None]

    @property
    def active_modes(self) -> list[int]:
        return [i for i, c in self.counts.items() if c > 0]


@dataclass(frozen=True)
class ModeEstimates:
    """Per-mode least-squares estimates with conditioning diagnostics.

    A mode is present in ``estimates`` exactly when it has at least one
    usable regressor pair.
    """

    estimates: dict[int, np.ndarray]
    sigma_min_x: dict[int, float]
    rank: dict[int, int]


def partition(trajectory: Trajectory) -> ModePartition:
    values = trajectory.signal.values
    index_sets: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    last_active: dict[int, int | None] = {}
    usable = np.arange(1, len(values))
    for mode in range(1, trajectory.signal.num_modes + 1):
        idx = usable[values[1:] == mode]
        index_sets[mode] = idx
        counts[mode] = int(idx.size)
        last_active[mode] = int(idx[-1]) if idx.size else None
    return ModePartition(index_sets=index_sets, counts=counts, last_active=last_active)


def fit(trajectory: Trajectory, tol: float | None = None) -> ModeEstimates:
    """Per-mode LS fit ``(sum x_{t+1} x_t^T)(sum x_t x_t^T)^+``.

    Regressor and cross moments are accumulated in one pass per mode;
    rank-deficient moments go through the pseudoinverse unchanged, and the
    smallest singular value of the regressor moment is reported so callers
    can discard under-excited fits.
    """
    part = partition(trajectory)
    if not part.active_modes:
        raise NoDataError("no mode has a usable regressor pair (signal too short)")
    states = trajectory.states
    estimates: dict[int, np.ndarray] = {}
    sigma_min_x: dict[int, float] = {}
    rank: dict[int, int] = {}
    for mode in part.active_modes:
        idx = part.index_sets[mode]
        x = states[idx]
        x_next = states[idx + 1]
        moment = x.T @ x
        cross = x_next.T @ x
        estimates[mode] = cross @ pseudoinverse(moment, tol)
        sv = singular_values(moment)
        sigma_min_x[mode] = float(sv[-1])
        cutoff = tol if tol is not None else float(sv[0]) * moment.shape[0] * _EPS
        rank[mode] = int(np.count_nonzero(sv > cutoff))
    return ModeEstimates(estimates=estimates, sigma_min_x=sigma_min_x, rank=rank)


def error_norms(estimates: ModeEstimates, truth: SwitchedSystem) -> dict[int, float]:
    """Spectral-norm estimation error per fitted mode."""
    out: dict[int, float] = {}
    for mode, est in estimates.estimates.items():
        target = truth.mode(mode)
        if est.shape != target.shape:
            raise InvalidInputError(
                f"estimate for mode {mode} has shape {est.shape}, system expects {target.shape}"
            )
        out[mode] = spectral_norm(est - target)
    return out


def estimates_to_json(estimates: ModeEstimates, part: ModePartition) -> list[dict]:
    """Stable JSON form: one record per fitted mode, entries row-major."""
    records = []
    for mode in sorted(estimates.estimates):
        records.append(
            {
                "mode": mode,
                "matrix": [float(v) for v in estimates.estimates[mode].ravel()],
                "count": part.counts[mode],
                "sigma_min_X": estimates.sigma_min_x[mode],
            }
        )
    return records

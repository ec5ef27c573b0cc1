"""Small dense-matrix primitives: singular values, spectral radius, pseudoinverse.

Everything here targets the tiny matrices this package works with (state
dimensions up to ~8).  Singular values are computed by an in-repo one-sided
Jacobi iteration so the numerics stay auditable end to end; ``numpy.linalg``
is used only for eigenvalues of non-symmetric matrices (spectral radius).
Larger or sparse problems are out of scope by design.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

_EPS = np.finfo(np.float64).eps

# Column pairs whose normalized inner product falls below this are treated as
# already orthogonal by the Jacobi sweep.
_JACOBI_TOL = 1e-15
_MAX_SWEEPS = 60


def as_matrix(values, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Validate and return a 2-D float array with finite entries."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidInputError(f"{name} must be 2-D with positive dimensions, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {m.shape}")
    return m


def jacobi_svd(values) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD ``M = U @ diag(s) @ Vt`` via one-sided Jacobi rotations.

    Returns a thin decomposition with singular values sorted descending.
    Columns of ``U`` matching zero singular values are left as zero vectors;
    they never contribute to reconstructions or pseudoinverses.
    """
    m = as_matrix(values)
    if m.shape[0] < m.shape[1]:
        u, s, vt = jacobi_svd(m.T)
        return vt.T, s, u.T

    a = m.copy()
    n = a.shape[1]
    v = np.eye(n)
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                cp = a[:, p]
                cq = a[:, q]
                alpha = cp @ cp
                beta = cq @ cq
                gamma = cp @ cq
                if gamma == 0.0 or abs(gamma) <= _JACOBI_TOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if not rotated:
            break

    norms = np.sqrt(np.sum(a * a, axis=0))
    order = np.argsort(norms)[::-1]
    s = norms[order]
    u = np.zeros_like(a)
    for k, idx in enumerate(order):
        if norms[idx] > 0.0:
            u[:, k] = a[:, idx] / norms[idx]
    vt = v[:, order].T
    return u, s, vt


def singular_values(values) -> np.ndarray:
    """Singular values in descending order."""
    _, s, _ = jacobi_svd(values)
    return s


def spectral_norm(values) -> float:
    """Largest singular value of a (possibly rectangular) matrix."""
    return float(singular_values(values)[0])


def min_singular_value(values) -> float:
    """Smallest singular value of a square matrix."""
    m = as_matrix(values, square=True)
    return float(singular_values(m)[-1])


def spectral_radius(values) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    m = as_matrix(values, square=True)
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def pseudoinverse(values, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a singular-value cutoff.

    Singular values at or below ``tol`` are treated as exact zeros.  The
    default cutoff is ``sigma_max * max(rows, cols) * machine_epsilon``.
    """
    m = as_matrix(values)
    if tol is not None and tol < 0:
        raise InvalidInputError("tol must be non-negative")
    u, s, vt = jacobi_svd(m)
    if tol is None:
        tol = float(s[0]) * max(m.shape) * _EPS
    inv = np.where(s > tol, np.divide(1.0, s, out=np.zeros_like(s), where=s > 0), 0.0)
    return (vt.T * inv) @ u.T


def symmetric_eig_extremes(values) -> tuple[float, float]:
    """(min, max) eigenvalue of a symmetric positive semi-definite matrix.

    For PSD input the eigenvalues coincide with the singular values, so this
    reuses the Jacobi sweep.
    """
    m = as_matrix(values, square=True)
    s = singular_values(m)
    return float(s[-1]), float(s[0])

"""Stability certificates: product-norm extremes, decay envelopes, dwell times.

The decay envelopes produced here are *certified*: the fitted constant is the
maximum of ``||A^k|| / rate^k`` over ``k = 0 .. k_cut`` where ``k_cut`` is the
first power with ``||A^k|| <= rate^k``.  Submultiplicativity then extends the
inequality to every larger ``k`` (write ``k = q * k_cut + rem``), so the
envelope is a proved property of the returned constants, not a heuristic fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CertificationError, InvalidInputError, ResourceLimitError
from .linalg import min_singular_value, singular_values, spectral_norm
from .signals import AverageDwellParams
from .system import SwitchedSystem

_ONE_TOL = 1e-12
_ENVELOPE_SWEEP_CAP = 5000
DEFAULT_ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class HorizonCertificate:
    """Exhaustive extremes over all ordered mode products of one length.

    ``a_min``/``a_max`` bound the smallest singular value and the spectral
    norm of every length-``m`` product; ``sigma_min``/``sigma_max`` are the
    per-mode single-matrix extremes.
    """

    m: int
    a_min: float
    a_max: float
    sigma_min: float
    sigma_max: float
    exhaustive: bool = True

    @property
    def marginal(self) -> bool:
        return self.a_max <= 1.0 + _ONE_TOL

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "a_min": self.a_min,
            "a_max": self.a_max,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "exhaustive": self.exhaustive,
        }


@dataclass(frozen=True)
class ModeEnvelope:
    mode: int
    constant: float  # C_v with ||A_v^k|| <= C_v * rate^k for all k >= 0
    rate: float
    stable: bool
    k_cut: int


@dataclass(frozen=True)
class EnvelopeConstants:
    """Certified norm-decay constants for every mode.

    Stable modes share the rate ``rho`` (= ``lambda1``); unstable modes share
    ``lambda2``.  ``c`` is the largest stable-mode constant, ``C`` the largest
    constant overall.
    """

    rho: float
    c: float
    lambda1: float
    lambda2: float
    C: float
    k_cut: int
    per_mode: tuple[ModeEnvelope, ...]

    def mode_envelope(self, label: int) -> ModeEnvelope:
        for env in self.per_mode:
            if env.mode == label:
                return env
        raise InvalidInputError(f"no envelope for mode {label}")

    def as_dict(self) -> dict:
        return {
            "rho": self.rho,
            "c": self.c,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "C": self.C,
            "k_cut": self.k_cut,
            "per_mode": [
                {
                    "mode": e.mode,
                    "constant": e.constant,
                    "rate": e.rate,
                    "class": "stable" if e.stable else "unstable",
                    "k_cut": e.k_cut,
                }
                for e in self.per_mode
            ],
        }


def product_norm_extremes(
    system: SwitchedSystem, m: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> HorizonCertificate:
    """Exhaustively enumerate all ``s^m`` ordered products of length ``m``.

    Depth-first over mode tuples, reusing each length-(m-1) prefix product,
    so every node costs one matrix multiply.
    """
    if m < 1:
        raise InvalidInputError("product length m must be positive")
    if system.s**m > cap:
        raise ResourceLimitError(
            f"enumerating {system.s}^{m} products exceeds the cap of {cap}; try a smaller m"
        )
    per_mode = [singular_values(a) for a in system.modes]
    sigma_max = max(float(s[0]) for s in per_mode)
    sigma_min = min(float(s[-1]) for s in per_mode)

    a_max = 0.0
    a_min = math.inf
    stack = [(np.eye(system.n), 0)]
    while stack:
        prefix, depth = stack.pop()
        for mode in system.modes:
            prod = prefix @ mode
            if depth + 1 == m:
                s = singular_values(prod)
                a_max = max(a_max, float(s[0]))
                a_min = min(a_min, float(s[-1]))
            else:
                stack.append((prod, depth + 1))
    return HorizonCertificate(m=m, a_min=a_min, a_max=a_max, sigma_min=sigma_min, sigma_max=sigma_max)


def find_stability_horizon(
    system: SwitchedSystem,
    m_max: int,
    strict: bool = False,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> int | None:
    """Smallest product length whose norm extreme certifies (strict) stability.

    Returns None when no length up to ``m_max`` certifies; that outcome means
    "not certified", never "unstable" (the product-norm condition is
    sufficient only).
    """
    if m_max < 1:
        raise InvalidInputError("m_max must be positive")
    for m in range(1, m_max + 1):
        cert = product_norm_extremes(system, m, cap=cap)
        if strict:
            if cert.a_max < 1.0 - _ONE_TOL:
                return m
        elif cert.marginal:
            return m
    return None


def _sweep_envelope(a: np.ndarray, rate: float) -> tuple[float, int]:
    """Certified constant for ``||a^k|| <= constant * rate^k`` over all k."""
    constant = 1.0  # the k = 0 term
    power = np.eye(a.shape[0])
    scale = 1.0
    for k in range(1, _ENVELOPE_SWEEP_CAP + 1):
        power = power @ a
        scale *= rate
        norm = spectral_norm(power)
        constant = max(constant, norm / scale)
        if norm <= scale * (1.0 + _ONE_TOL):
            return constant, k
    raise CertificationError(
        f"||A^k|| did not fall below rate^k within {_ENVELOPE_SWEEP_CAP} powers; increase the rate"
    )


def fit_decay_envelope(
    system: SwitchedSystem, rho: float | None = None, lambda2: float | None = None
) -> EnvelopeConstants:
    """Fit certified per-mode envelopes and the shared constants.

    ``rho`` defaults to the midpoint between the largest stable spectral
    radius and 1; it may equal the largest stable radius (exact for normal
    modes), but the sweep will reject rates that never dominate.  ``lambda2``
    defaults to the largest unstable spectral norm, which makes every
    unstable constant equal to 1.
    """
    stable = sorted(system.stable_set)
    unstable = [i for i in range(1, system.s + 1) if i not in system.stable_set]
    radii = system.spectral_radii

    for label in stable:
        if radii[label - 1] >= 1.0:
            raise CertificationError(f"mode {label} is classified stable but has spectral radius >= 1")

    if stable:
        max_stable_radius = max(radii[label - 1] for label in stable)
        if rho is None:
            rho = (1.0 + max_stable_radius) / 2.0
        if not max_stable_radius <= rho < 1.0:
            raise InvalidInputError(
                f"rho must lie in [{max_stable_radius}, 1), got {rho}"
            )
    elif rho is None:
        rho = 0.5  # vacuous: no stable mode uses it

    if unstable:
        default_l2 = max(spectral_norm(system.mode(j)) for j in unstable)
        if lambda2 is None:
            lambda2 = max(1.0, default_l2)
        max_unstable_radius = max(radii[j - 1] for j in unstable)
        if lambda2 < max_unstable_radius or lambda2 < 1.0:
            raise InvalidInputError(
                f"lambda2 must be >= 1 and >= the largest unstable spectral radius {max_unstable_radius}"
            )
    elif lambda2 is None:
        lambda2 = 1.0  # vacuous: no unstable mode uses it

    per_mode = []
    for label in range(1, system.s + 1):
        is_stable = label in system.stable_set
        rate = rho if is_stable else lambda2
        constant, k_cut = _sweep_envelope(system.mode(label), rate)
        per_mode.append(ModeEnvelope(mode=label, constant=constant, rate=rate, stable=is_stable, k_cut=k_cut))

    c = max((e.constant for e in per_mode if e.stable), default=1.0)
    big_c = max((e.constant for e in per_mode), default=1.0)
    k_cut = max((e.k_cut for e in per_mode), default=1)
    return EnvelopeConstants(
        rho=rho, c=c, lambda1=rho, lambda2=lambda2, C=big_c, k_cut=k_cut, per_mode=tuple(per_mode)
    )


class MinimumDwell(NamedTuple):
    tau_star: int
    a: float


def minimum_dwell_time(env: EnvelopeConstants, strict: bool = False) -> MinimumDwell:
    """Smallest integer dwell ``tau`` with ``c * rho^tau <= 1`` (strict: < 1)."""
    c, rho = env.c, env.rho
    if c < 1.0 or not 0.0 < rho < 1.0:
        raise InvalidInputError("envelope must have c >= 1 and rho in (0, 1)")
    if c == 1.0:
        tau = 1
    else:
        tau = max(1, math.ceil(math.log(c) / -math.log(rho) - _ONE_TOL))
        while c * rho**tau > 1.0:
            tau += 1
        while tau > 1 and c * rho ** (tau - 1) <= 1.0:
            tau -= 1
    if strict:
        while c * rho**tau >= 1.0:
            tau += 1
    return MinimumDwell(tau_star=tau, a=c * rho**tau)


def ratio_r(env: EnvelopeConstants, lam_star: float) -> float:
    """Stable/unstable trade-off ratio for a comparison rate ``lam_star``."""
    if not env.lambda1 < lam_star <= env.lambda2:
        raise InvalidInputError(
            f"lam_star must lie in ({env.lambda1}, {env.lambda2}], got {lam_star}"
        )
    return (math.log(env.lambda2) - math.log(lam_star)) / (math.log(lam_star) - math.log(env.lambda1))


def average_dwell_tau_star(env: EnvelopeConstants, lam: float, lam_star: float) -> float | None:
    """Critical average dwell time ``ln C / (ln lam - ln lam_star)``.

    Returns None when ``C = 1``: the envelope constant imposes no average
    dwell requirement in that case.
    """
    if env.C <= 1.0:
        return None
    if not env.lambda1 < lam_star < lam < 1.0:
        raise InvalidInputError("need lambda1 < lam_star < lam < 1")
    return math.log(env.C) / (math.log(lam) - math.log(lam_star))


def max_allowed_N0(h: int, lam: float, C: float, strict: bool = False) -> int | None:
    """Largest ``N0`` with ``N0 * ln(C) <= -h * ln(lam)`` (strict: <).

    Returns None when ``C <= 1`` (no restriction applies).
    """
    if h < 1:
        raise InvalidInputError("h must be a positive integer")
    if not 0.0 < lam < 1.0:
        raise InvalidInputError("lam must lie in (0, 1)")
    if C <= 1.0:
        return None
    limit = -h * math.log(lam) / math.log(C)
    n0 = math.floor(limit + _ONE_TOL)
    if strict and n0 * math.log(C) >= -h * math.log(lam) - _ONE_TOL:
        n0 -= 1
    return n0


@dataclass(frozen=True)
class AverageClassCertificate:
    """Outcome of checking the two stability cases of the windowed class."""

    case: str  # "i" or "ii"
    a: float  # per-window product-norm envelope value
    valid: bool
    reasons: tuple[str, ...] = ()
    tau_a_star: float | None = None
    n0_max: int | None = None

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "a": self.a,
            "valid": self.valid,
            "reasons": list(self.reasons),
            "tau_a_star": self.tau_a_star,
            "n0_max": self.n0_max,
        }


def certify_average_class(params: AverageDwellParams, strict: bool = False) -> AverageClassCertificate:
    """Determine which stability case applies and the window envelope ``a``.

    Case (i): ``C = 1`` with ``lam_star <= 1`` gives ``a = lam_star^h``.
    Case (ii): ``C > 1`` needs ``lam < 1``, ``lam_star < lam``,
    ``N0 ln C <= -h ln lam`` and an average dwell time at least the critical
    one; then ``a = C^N0 * lam^h``.
    """
    reasons: list[str] = []
    if params.C <= 1.0 + _ONE_TOL:
        a = params.lam_star**params.h
        if params.lam_star > 1.0:
            reasons.append(f"case (i) needs lam_star <= 1, got {params.lam_star}")
        if strict and params.lam_star >= 1.0:
            reasons.append("strict (asymptotic) case (i) needs lam_star < 1")
        return AverageClassCertificate(case="i", a=a, valid=not reasons, reasons=tuple(reasons))

    a = params.C**params.N0 * params.lam**params.h
    if not params.lam < 1.0:
        reasons.append(f"case (ii) needs lam < 1, got {params.lam}")
    if not params.lam_star < params.lam:
        reasons.append("case (ii) needs lam_star < lam")
    n0_max = max_allowed_N0(params.h, params.lam, params.C, strict=strict) if params.lam < 1.0 else None
    if n0_max is not None and params.N0 > n0_max:
        reasons.append(f"N0={params.N0} exceeds the allowed maximum {n0_max}")
    tau_a_star = None
    if params.lam_star < params.lam < 1.0:
        tau_a_star = math.log(params.C) / (math.log(params.lam) - math.log(params.lam_star))
        if params.tau_a < tau_a_star - _ONE_TOL:
            reasons.append(f"tau_a={params.tau_a} is below the critical value {tau_a_star:.6g}")
    return AverageClassCertificate(
        case="ii", a=a, valid=not reasons, reasons=tuple(reasons), tau_a_star=tau_a_star, n0_max=n0_max
    )


def verify_envelope(system: SwitchedSystem, env: EnvelopeConstants, k_max: int = 200) -> float:
    """Worst relative envelope violation over ``k = 1 .. k_max`` (<= 0 is good).

    Checks ``||A_v^k|| <= C_v * rate^k`` for every mode with its own constant;
    returns ``max_k (norm / bound - 1)``.
    """
    worst = -math.inf
    for e in env.per_mode:
        a = system.mode(e.mode)
        power = np.eye(system.n)
        bound = 1.0
        for _ in range(k_max):
            power = power @ a
            bound *= e.rate
            worst = max(worst, spectral_norm(power) / (e.constant * bound) - 1.0)
    return worst

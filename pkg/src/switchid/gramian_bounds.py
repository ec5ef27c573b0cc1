"""Closed-form bounds on the Gramian spectrum for each switching class.

All evaluators are pure arithmetic: certificates and envelope values are
supplied by the caller, and hypothesis violations are recorded on the returned
report (with the number still computed) so experiment sweeps can plot invalid
regimes instead of crashing on them.

Geometric sums with ratio 1 are evaluated as term counts; the closed-form
quotient would divide by zero exactly where the marginally stable case lives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidInputError
from .signals import AverageDwellParams
from .stability import EnvelopeConstants, HorizonCertificate

_ONE_TOL = 1e-12

ARBITRARY_SANDWICH = "arbitrary_sandwich"
ARBITRARY_SIMPLE = "arbitrary_simple"
DWELL_MARGINAL = "dwell_marginal"
DWELL_ASYMPTOTIC = "dwell_asymptotic"
DWELL_LOWER = "dwell_lower"
AVERAGE = "average"


@dataclass(frozen=True)
class GramianBound:
    kind: str
    T: int
    lower: float | None
    upper: float | None
    inputs: dict = field(default_factory=dict)
    assumptions_ok: bool = True
    reasons: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "T": self.T,
            "lower": self.lower,
            "upper": self.upper,
            "inputs": self.inputs,
            "assumptions_ok": self.assumptions_ok,
            "reasons": list(self.reasons),
        }


def geometric_sum(ratio: float, terms: int) -> float:
    """Sum of ``ratio**j`` for ``j = 0 .. terms-1``; exact at ratio 1."""
    if terms <= 0:
        return 0.0
    if abs(ratio - 1.0) <= _ONE_TOL:
        return float(terms)
    return (1.0 - ratio**terms) / (1.0 - ratio)


def _check_T(T: int) -> None:
    if T < 1:
        raise InvalidInputError("horizon T must be a positive integer")


def arbitrary_sandwich(cert: HorizonCertificate, T: int) -> GramianBound:
    """Two-sided spectrum bound from a length-``m`` product certificate.

    The spectrum of the Gramian is sandwiched by grouping the ``T`` product
    terms into blocks of ``m``.  The upper bound rounds the final partial
    block up to a full one; the lower bound must not (rounding up would
    overshoot the true minimum eigenvalue whenever ``m`` does not divide
    ``T``), so it keeps the exact truncated final block.
    """
    _check_T(T)
    m = cert.m
    blocks = (T - 1) // m
    tail = (T - 1) - blocks * m  # width-1-less of the final partial block
    upper = geometric_sum(cert.sigma_max**2, m) * geometric_sum(cert.a_max**2, blocks + 1)
    lower = geometric_sum(cert.sigma_min**2, m) * geometric_sum(cert.a_min**2, blocks)
    lower += cert.a_min ** (2 * blocks) * geometric_sum(cert.sigma_min**2, tail + 1)
    reasons: tuple[str, ...] = ()
    ok = cert.a_max <= 1.0 + _ONE_TOL
    if not ok:
        reasons = (f"certificate a_max={cert.a_max} exceeds 1; the sandwich hypothesis fails",)
    return GramianBound(
        kind=ARBITRARY_SANDWICH,
        T=T,
        lower=lower,
        upper=upper,
        inputs={"certificate": cert.as_dict()},
        assumptions_ok=ok,
        reasons=reasons,
    )


def arbitrary_upper_simple(sigma_max: float, m: int, T: int) -> GramianBound:
    """Single-constant upper bound ``p * (floor(T/m) + 1)``.

    ``p`` is the length-``m`` geometric sum of ``sigma_max**2``, which is well
    defined for ``sigma_max`` above or below 1 but not at exactly 1 (use the
    sandwich there).
    """
    _check_T(T)
    if m < 1:
        raise InvalidInputError("m must be a positive integer")
    if abs(sigma_max - 1.0) <= _ONE_TOL:
        raise InvalidInputError("sigma_max = 1 is not covered here; use arbitrary_sandwich")
    p = geometric_sum(sigma_max**2, m)
    upper = p * (T // m + 1)
    return GramianBound(
        kind=ARBITRARY_SIMPLE,
        T=T,
        lower=None,
        upper=upper,
        inputs={"sigma_max": sigma_max, "m": m, "p": p},
    )


def dwell_upper(
    env: EnvelopeConstants, tau_star: int, a: float, T: int, asymptotic: bool = False
) -> GramianBound:
    """Largest-eigenvalue bound under a minimum dwell time ``tau_star``.

    Marginal form: ``1 + c^4 rho^2/(1-rho^2) (1 + T/tau_star)``.  The
    asymptotic form additionally needs ``a < 1`` and replaces the linear
    growth with a geometric sum in ``a``.
    """
    _check_T(T)
    if tau_star < 1:
        raise InvalidInputError("tau_star must be a positive integer")
    c, rho = env.c, env.rho
    reasons: list[str] = []
    ok = True
    if a > 1.0 + _ONE_TOL:
        ok = False
        reasons.append(f"a = c*rho^tau_star = {a} exceeds 1; the dwell-time hypothesis fails")
    if asymptotic:
        if a >= 1.0 - _ONE_TOL:
            raise InvalidInputError("the asymptotic bound needs a < 1")
        upper = 1.0 + c**4 * rho**4 / (1.0 - rho**2) * (1.0 + (1.0 - a ** (T // tau_star)) / (1.0 - a))
        kind = DWELL_ASYMPTOTIC
    else:
        upper = 1.0 + c**4 * rho**2 / (1.0 - rho**2) * (1.0 + T / tau_star)
        kind = DWELL_MARGINAL
    return GramianBound(
        kind=kind,
        T=T,
        lower=None,
        upper=upper,
        inputs={"c": c, "rho": rho, "tau_star": tau_star, "a": a},
        assumptions_ok=ok,
        reasons=tuple(reasons),
    )


def dwell_lower(sigma_min: float, T: int, tight: bool = False) -> GramianBound:
    """Smallest-eigenvalue lower bound: 1, or the geometric refinement.

    The refinement ``1 + sum_{j=1}^{T-1} sigma_min^{2j}`` holds for any
    switching signal because every length-``j`` product has smallest singular
    value at least ``sigma_min^j``.
    """
    _check_T(T)
    lower = geometric_sum(sigma_min**2, T) if tight else 1.0
    return GramianBound(
        kind=DWELL_LOWER, T=T, lower=lower, upper=None, inputs={"sigma_min": sigma_min, "tight": tight}
    )


def envelope_f(i: int, params: AverageDwellParams, a: float) -> float:
    """Worst-case norm of a product covering the last ``i`` steps of a window.

    Piecewise: unstable growth up to the per-window unstable allowance, then
    stable decay; 1 for the empty product and the caller-supplied window
    envelope ``a`` for the full window.
    """
    h = params.h
    if not 0 <= i <= h:
        raise InvalidInputError(f"i must lie in 0..{h}, got {i}")
    if i == 0:
        return 1.0
    if i == h:
        return a
    k_plus = params.k_plus_max
    base = params.C**params.n_bar_w
    if i <= k_plus:
        return base * params.lambda2**i
    return base * params.lambda2**k_plus * params.lambda1 ** (i - k_plus)


def cumulative_g(b: int, params: AverageDwellParams) -> float:
    """Sum of squared worst-case norms over the last ``b`` window positions.

    Equals ``sum_{i=0}^{b-1} envelope_f(i)^2`` for ``b in 1..h``; defined as 0
    at ``b = 0``.  Both partial sums may be empty.
    """
    h = params.h
    if not 0 <= b <= h:
        raise InvalidInputError(f"b must lie in 0..{h}, got {b}")
    if b == 0:
        return 0.0
    k_plus = params.k_plus_max
    l2sq = params.lambda2**2
    l1sq = params.lambda1**2
    s_unstable = sum(l2sq**j for j in range(1, min(b - 1, k_plus) + 1))
    s_stable = sum(l1sq ** (k - k_plus) for k in range(k_plus + 1, min(b - 1, h - 1) + 1))
    return 1.0 + params.C ** (2 * params.n_bar_w) * (s_unstable + l2sq**k_plus * s_stable)


def average_upper(params: AverageDwellParams, a: float, T: int) -> GramianBound:
    """Largest-eigenvalue bound under the windowed average-dwell class.

    Splits the horizon into ``floor(T/h)`` full windows plus ``k0`` leftover
    steps: ``g(k0) + g(h) * f(k0)^2 * floor(T/h)``.  When ``h`` divides ``T``
    this reduces to ``g(h) * T/h``.
    """
    _check_T(T)
    windows = T // params.h
    k0 = T - params.h * windows
    upper = cumulative_g(k0, params) + cumulative_g(params.h, params) * envelope_f(k0, params, a) ** 2 * windows
    reasons: tuple[str, ...] = ()
    ok = a <= 1.0 + _ONE_TOL
    if not ok:
        reasons = (f"window envelope a={a} exceeds 1; the class stability hypothesis fails",)
    return GramianBound(
        kind=AVERAGE,
        T=T,
        lower=None,
        upper=upper,
        inputs={"params": params.as_dict(), "a": a, "k0": k0},
        assumptions_ok=ok,
        reasons=reasons,
    )

"""Finite-sample error bounds for the switched least-squares estimator.

The core inequality needs two ingredients per mode: the number of samples
``count = |T_i|`` and an upper bound on the Gramian trace at the mode's last
active step.  ``ls_bound`` consumes an explicit trace bound (exact trace or
anything dominating it); ``class_composed_bound`` derives the trace bound from
a switching-class certificate first, which reproduces the class-specific
corollaries exactly.

The concentration constant ``K`` in the burn-in floor is unspecified by the
underlying theory; it defaults to 1 and is carried visibly in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError
from .gramian_bounds import arbitrary_upper_simple, average_upper, dwell_upper
from .signals import AverageDwellParams
from .stability import EnvelopeConstants, HorizonCertificate

THEOREM1 = "theorem1"
COROLLARY1 = "corollary1"


@dataclass(frozen=True)
class ErrorBoundParams:
    """Inputs of the per-mode bound: dimension, confidence, sample counts."""

    n: int
    delta: float
    count: int
    N_i: int
    K: float = 1.0
    variant: str = THEOREM1

    def __post_init__(self) -> None:
        if self.variant not in (THEOREM1, COROLLARY1):
            raise InvalidInputError(f"variant must be {THEOREM1!r} or {COROLLARY1!r}")
        if not 0.0 < self.delta < 0.25:
            raise InvalidInputError("delta must lie in the open interval (0, 1/4)")
        if self.n < 1:
            raise InvalidInputError("state dimension n must be positive")
        if self.variant == THEOREM1 and self.n < 2:
            raise InvalidInputError("the theorem1 variant requires n >= 2; use corollary1 for n = 1")
        if self.count < 1:
            raise InvalidInputError("count must be at least 1")
        if self.N_i < 1:
            raise InvalidInputError("N_i must be at least 1")
        if self.K <= 0:
            raise InvalidInputError("K must be positive")


@dataclass(frozen=True)
class ErrorBoundReport:
    variant: str
    class_name: str
    n: int
    delta: float
    K: float
    count: int
    N_i: int
    gram_trace_upper: float
    trace_provenance: str
    required_count: float
    burn_in_ok: bool
    bound: float
    probability: float
    assumptions_ok: bool = True
    reasons: tuple[str, ...] = ()

    def uniform_probability(self, num_modes: int) -> float:
        """Probability when the statement is required for all modes at once."""
        return max(0.0, 1.0 - 4.0 * num_modes * self.delta)

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "class": self.class_name,
            "n": self.n,
            "delta": self.delta,
            "K": self.K,
            "count": self.count,
            "N_i": self.N_i,
            "gram_trace_upper": self.gram_trace_upper,
            "trace_provenance": self.trace_provenance,
            "required_count": self.required_count,
            "burn_in_ok": self.burn_in_ok,
            "bound": self.bound,
            "probability": self.probability,
            "assumptions_ok": self.assumptions_ok,
            "reasons": list(self.reasons),
        }


def _check_trace(params: ErrorBoundParams, gram_trace_upper: float) -> None:
    if gram_trace_upper < params.n:
        raise InvalidInputError(
            f"gram_trace_upper must be at least n={params.n} (the Gramian dominates the identity)"
        )


def burn_in_threshold(params: ErrorBoundParams, gram_trace_upper: float) -> float:
    """Sample count below which the high-probability bound is not claimed.

    The floor is the max of the concentration term ``K (n + ln(2/delta))``
    and a Gramian-growth term; the shifted trace ``tr - n`` enters the log so
    a trace bound that is loose only makes the requirement more conservative.
    """
    _check_trace(params, gram_trace_upper)
    n, delta = params.n, params.delta
    t0 = params.K * (n + math.log(2.0 / delta))
    log_shifted = math.log(gram_trace_upper - n + 1.0)
    if params.variant == THEOREM1:
        growth = 64.0 * n * log_shifted + 128.0 * n * math.log(5.0 / delta)
    else:
        growth = 64.0 * n * log_shifted + 128.0 * math.log(5.0**n / delta ** (1.0 + n / 2.0))
    return max(t0, growth)


def _bound_value(params: ErrorBoundParams, gram_trace_upper: float) -> float:
    n, delta = params.n, params.delta
    if params.variant == THEOREM1:
        tail = math.log(5.0 / delta)
    else:
        tail = math.log(5.0 / delta ** (1.0 / n + 0.5))
    radicand = 32.0 * n * (0.5 * math.log(4.0 * gram_trace_upper + 1.0) + tail)
    return math.sqrt(radicand) / math.sqrt(params.count)


def ls_bound(
    params: ErrorBoundParams,
    gram_trace_upper: float,
    class_name: str = "exact",
    trace_provenance: str = "exact trace",
    assumptions_ok: bool = True,
    reasons: tuple[str, ...] = (),
) -> ErrorBoundReport:
    """Per-mode error bound holding with probability at least ``1 - 4 delta``.

    The bound value is always computed, even below the burn-in threshold;
    ``burn_in_ok`` records whether the sample count clears it.
    """
    _check_trace(params, gram_trace_upper)
    required = burn_in_threshold(params, gram_trace_upper)
    return ErrorBoundReport(
        variant=params.variant,
        class_name=class_name,
        n=params.n,
        delta=params.delta,
        K=params.K,
        count=params.count,
        N_i=params.N_i,
        gram_trace_upper=gram_trace_upper,
        trace_provenance=trace_provenance,
        required_count=required,
        burn_in_ok=params.count >= required,
        bound=_bound_value(params, gram_trace_upper),
        probability=1.0 - 4.0 * params.delta,
        assumptions_ok=assumptions_ok,
        reasons=reasons,
    )


@dataclass(frozen=True)
class ArbitraryClass:
    cert: HorizonCertificate


@dataclass(frozen=True)
class MinDwellClass:
    env: EnvelopeConstants
    tau_star: int


@dataclass(frozen=True)
class AverageClass:
    params: AverageDwellParams
    a: float


def class_composed_bound(switching_class, params: ErrorBoundParams) -> ErrorBoundReport:
    """Error bound with the trace replaced by a switching-class bound.

    The trace of the Gramian at ``N_i`` is bounded by ``n`` times the class
    bound on the largest eigenvalue, evaluated at ``T = N_i``; the result
    feeds the same burn-in and bound formulas.  Certificate hypothesis
    violations are carried on the report, not raised.
    """
    if isinstance(switching_class, ArbitraryClass):
        cert = switching_class.cert
        gb = arbitrary_upper_simple(cert.sigma_max, cert.m, params.N_i)
        ok = cert.a_max <= 1.0 + 1e-12
        reasons = () if ok else (f"certificate a_max={cert.a_max} exceeds 1",)
        name = "arbitrary"
    elif isinstance(switching_class, MinDwellClass):
        env = switching_class.env
        a = env.c * env.rho**switching_class.tau_star
        gb = dwell_upper(env, switching_class.tau_star, a, params.N_i, asymptotic=False)
        ok, reasons = gb.assumptions_ok, gb.reasons
        name = "min_dwell"
    elif isinstance(switching_class, AverageClass):
        gb = average_upper(switching_class.params, switching_class.a, params.N_i)
        ok, reasons = gb.assumptions_ok, gb.reasons
        name = "average"
    else:
        raise InvalidInputError(f"unknown switching class {switching_class!r}")
    trace_upper = params.n * gb.upper
    return ls_bound(
        params,
        trace_upper,
        class_name=name,
        trace_provenance=f"n * {gb.kind} bound at T=N_i",
        assumptions_ok=ok,
        reasons=tuple(reasons),
    )

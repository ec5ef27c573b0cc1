"""Switching-signal classes: arbitrary, minimum-dwell, and windowed average-dwell.

Conventions used throughout:

* A switch event is the first step of the new mode, i.e. an index ``u >= 1``
  with ``w_u != w_{u-1}``.  An event belongs to the half-open interval
  ``[t0, t1)`` containing ``u``, which makes counts additive over adjacent
  intervals.
* The average-dwell class partitions time into windows ``[(j-1)h, jh)`` and
  constrains, per window, the stable/unstable step ratio and the number of
  switch events.  A trailing partial window is checked against proportionally
  scaled budgets but can only produce warnings, not violations.
* A minimum-dwell signal must keep every completed constant segment (one that
  ends in a switch) at least ``tau`` steps long; the trailing segment is
  exempt because nothing terminates it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSpecError, InvalidInputError
from .system import SwitchingSignal

ARBITRARY = "arbitrary"
MIN_DWELL = "min_dwell"
AVERAGE_DWELL = "average_dwell"

_TOL = 1e-9


@dataclass(frozen=True)
class AverageDwellParams:
    """Window length, switch budget, and rate constants of the windowed class.

    ``lam`` and ``lam_star`` are the comparison rates of the class definition,
    ``lambda1 < 1`` and ``lambda2 >= 1`` the certified decay/growth rates of
    the stable and unstable modes, and ``C >= 1`` the shared envelope
    constant.
    """

    tau_a: float
    N0: int
    lam: float
    lam_star: float
    h: int
    lambda1: float
    lambda2: float
    C: float = 1.0

    def __post_init__(self) -> None:
        if self.tau_a <= 0:
            raise InvalidInputError("tau_a must be positive")
        if self.N0 < 0 or int(self.N0) != self.N0:
            raise InvalidInputError("N0 must be a non-negative integer")
        if self.h < 1 or int(self.h) != self.h:
            raise InvalidInputError("h must be a positive integer")
        if not 0.0 < self.lambda1 < 1.0:
            raise InvalidInputError("lambda1 must lie in (0, 1)")
        if self.lambda2 < 1.0:
            raise InvalidInputError("lambda2 must be at least 1")
        if self.C < 1.0:
            raise InvalidInputError("C must be at least 1")
        if not self.lambda1 < self.lam < self.lambda2:
            raise InvalidInputError("lam must lie in (lambda1, lambda2)")
        if not self.lambda1 < self.lam_star <= self.lam:
            raise InvalidInputError("lam_star must lie in (lambda1, lam]")

    @property
    def r(self) -> float:
        """Required stable-to-unstable step ratio per window."""
        return (math.log(self.lambda2) - math.log(self.lam_star)) / (
            math.log(self.lam_star) - math.log(self.lambda1)
        )

    @property
    def n_bar_w(self) -> float:
        """Per-window switch budget ``N0 + h / tau_a``."""
        return self.N0 + self.h / self.tau_a

    @property
    def k_plus_max(self) -> int:
        """Largest per-window unstable step count compatible with the ratio."""
        return int(math.floor(self.h / (1.0 + self.r) + _TOL))

    def as_dict(self) -> dict:
        return {
            "tau_a": self.tau_a,
            "N0": self.N0,
            "lam": self.lam,
            "lam_star": self.lam_star,
            "h": self.h,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "C": self.C,
            "r": self.r,
            "n_bar_w": self.n_bar_w,
            "k_plus_max": self.k_plus_max,
        }


@dataclass(frozen=True)
class SignalClassSpec:
    """One of the three signal classes plus generation knobs."""

    variant: str
    num_modes: int
    tau: int | None = None
    average: AverageDwellParams | None = None
    mode_weights: tuple[float, ...] | None = None
    mean_segment: float | None = None
    unstable_budget: int | None = None

    def __post_init__(self) -> None:
        if self.num_modes < 1:
            raise InvalidInputError("num_modes must be positive")
        if self.variant not in (ARBITRARY, MIN_DWELL, AVERAGE_DWELL):
            raise InvalidInputError(f"unknown signal class variant {self.variant!r}")
        if self.variant == MIN_DWELL:
            if self.tau is None or self.tau < 1:
                raise InvalidInputError("min_dwell requires tau >= 1")
            if self.mean_segment is not None and self.mean_segment < self.tau:
                raise InvalidInputError("mean_segment must be at least tau")
        if self.variant == AVERAGE_DWELL and self.average is None:
            raise InvalidInputError("average_dwell requires AverageDwellParams")
        if self.mode_weights is not None:
            if len(self.mode_weights) != self.num_modes:
                raise InvalidInputError("mode_weights must have one entry per mode")
            if any(w < 0 for w in self.mode_weights) or sum(self.mode_weights) <= 0:
                raise InvalidInputError("mode_weights must be non-negative with positive sum")
        if self.unstable_budget is not None and self.unstable_budget < 0:
            raise InvalidInputError("unstable_budget must be non-negative")

    @classmethod
    def arbitrary(cls, num_modes: int, mode_weights=None) -> "SignalClassSpec":
        weights = tuple(mode_weights) if mode_weights is not None else None
        return cls(variant=ARBITRARY, num_modes=num_modes, mode_weights=weights)

    @classmethod
    def min_dwell(cls, num_modes: int, tau: int, mean_segment: float | None = None) -> "SignalClassSpec":
        return cls(variant=MIN_DWELL, num_modes=num_modes, tau=tau, mean_segment=mean_segment)

    @classmethod
    def average_dwell(
        cls, num_modes: int, params: AverageDwellParams, unstable_budget: int | None = None
    ) -> "SignalClassSpec":
        return cls(
            variant=AVERAGE_DWELL,
            num_modes=num_modes,
            average=params,
            unstable_budget=unstable_budget,
        )


@dataclass(frozen=True)
class WindowRecord:
    index: int
    start: int
    stop: int
    k_minus: int
    k_plus: int
    switches: int
    partial: bool
    ok: bool


@dataclass(frozen=True)
class SegmentRecord:
    start: int
    length: int
    completed: bool
    ok: bool


@dataclass
class ValidationReport:
    valid: bool
    first_violation: str | None = None
    windows: list[WindowRecord] = field(default_factory=list)
    segments: list[SegmentRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def count_switches(signal: SwitchingSignal, t0: int, t1: int) -> int:
    """Number of switch events with first-new-mode step in ``[t0, t1)``."""
    _check_interval(signal, t0, t1)
    v = signal.values
    lo = max(t0, 1)
    if t1 <= lo:
        return 0
    return int(np.count_nonzero(v[lo:t1] != v[lo - 1 : t1 - 1]))


def count_mode_steps(signal: SwitchingSignal, stable_set, t0: int, t1: int) -> tuple[int, int]:
    """(stable, unstable) step counts over ``[t0, t1)``."""
    _check_interval(signal, t0, t1)
    if t1 == t0:
        return 0, 0
    chunk = signal.values[t0:t1]
    k_minus = int(sum(1 for w in chunk if int(w) in stable_set))
    return k_minus, int(t1 - t0) - k_minus


def _check_interval(signal: SwitchingSignal, t0: int, t1: int) -> None:
    if t1 < t0:
        raise InvalidInputError(f"interval end {t1} precedes start {t0}")
    if t0 < 0 or t1 > len(signal):
        raise InvalidInputError(f"interval [{t0}, {t1}) outside signal range [0, {len(signal)})")


def switch_positions(signal: SwitchingSignal) -> list[int]:
    """Indices ``u >= 1`` where the mode changes."""
    v = signal.values
    return [int(u) for u in np.nonzero(v[1:] != v[:-1])[0] + 1]


def validate(signal: SwitchingSignal, spec: SignalClassSpec, stable_set) -> ValidationReport:
    """Check class membership; arbitrary signals are always members."""
    if signal.num_modes > spec.num_modes:
        raise InvalidInputError("signal and spec disagree on the number of modes")
    if spec.variant == ARBITRARY:
        return ValidationReport(valid=True)
    if spec.variant == MIN_DWELL:
        return _validate_min_dwell(signal, spec.tau)
    return _validate_average(signal, spec.average, stable_set)


def _validate_min_dwell(signal: SwitchingSignal, tau: int) -> ValidationReport:
    n = len(signal)
    switches = switch_positions(signal)
    starts = [0] + switches
    stops = switches + [n]
    report = ValidationReport(valid=True)
    for start, stop in zip(starts, stops):
        completed = stop != n
        length = stop - start
        ok = length >= tau or not completed
        report.segments.append(SegmentRecord(start=start, length=length, completed=completed, ok=ok))
        if completed and length < tau and report.first_violation is None:
            report.valid = False
            report.first_violation = f"segment starting t={start} has length {length} < tau={tau}"
        if not completed and length < tau:
            report.warnings.append(f"trailing segment starting t={start} is shorter than tau (record ends mid-segment)")
    return report


def _validate_average(signal: SwitchingSignal, params: AverageDwellParams, stable_set) -> ValidationReport:
    n = len(signal)
    h = params.h
    r = params.r
    budget = params.n_bar_w
    report = ValidationReport(valid=True)
    full = n // h
    for j in range(1, full + 1):
        t0, t1 = (j - 1) * h, j * h
        k_minus, k_plus = count_mode_steps(signal, stable_set, t0, t1)
        sw = count_switches(signal, t0, t1)
        ratio_ok = k_minus >= r * k_plus - _TOL
        budget_ok = sw <= budget + _TOL
        ok = ratio_ok and budget_ok
        report.windows.append(
            WindowRecord(index=j, start=t0, stop=t1, k_minus=k_minus, k_plus=k_plus, switches=sw, partial=False, ok=ok)
        )
        if not ok and report.first_violation is None:
            report.valid = False
            what = "stable/unstable ratio" if not ratio_ok else "switch budget"
            report.first_violation = f"window {j} = [{t0}, {t1}) violates the {what}"
    if full == 0:
        report.warnings.append(f"signal shorter than one window (N={n} < h={h}); membership assumed")
    remainder = n - full * h
    if remainder:
        t0, t1 = full * h, n
        k_minus, k_plus = count_mode_steps(signal, stable_set, t0, t1)
        sw = count_switches(signal, t0, t1)
        scaled = math.floor(remainder / h * budget + _TOL)
        ok = (k_minus >= r * k_plus - _TOL) and sw <= scaled
        report.windows.append(
            WindowRecord(
                index=full + 1, start=t0, stop=t1, k_minus=k_minus, k_plus=k_plus, switches=sw, partial=True, ok=ok
            )
        )
        if not ok:
            report.warnings.append(
                f"trailing partial window [{t0}, {t1}) exceeds its scaled budget (switches {sw} > {scaled} or ratio)"
            )
    return report


def generate(spec: SignalClassSpec, length: int, seed: int, stable_set=frozenset()) -> SwitchingSignal:
    """Draw a class member of the given length; deterministic per seed.

    The returned signal always passes :func:`validate` against ``spec``;
    impossible requests raise :class:`InfeasibleSpecError` naming the
    constraint that cannot be met.
    """
    if length < 1:
        raise InvalidInputError("signal length must be positive")
    rng = np.random.default_rng([int(seed), 0x51D])
    if spec.variant == ARBITRARY:
        values = _generate_arbitrary(spec, length, rng)
    elif spec.variant == MIN_DWELL:
        values = _generate_min_dwell(spec, length, rng)
    else:
        values = _generate_average(spec, length, rng, stable_set)
    signal = SwitchingSignal(values, spec.num_modes)
    report = validate(signal, spec, stable_set)
    if not report.valid:
        raise InfeasibleSpecError(f"generator produced an invalid signal: {report.first_violation}")
    return signal


def _generate_arbitrary(spec: SignalClassSpec, length: int, rng) -> np.ndarray:
    if spec.mode_weights is None:
        probs = None
    else:
        w = np.asarray(spec.mode_weights, dtype=np.float64)
        probs = w / w.sum()
    return rng.choice(np.arange(1, spec.num_modes + 1), size=length, p=probs)


def _generate_min_dwell(spec: SignalClassSpec, length: int, rng) -> list[int]:
    tau = spec.tau
    mean_extra = (spec.mean_segment - tau) if spec.mean_segment is not None else 2.0
    values: list[int] = []
    prev = None
    while len(values) < length:
        if spec.num_modes == 1:
            mode = 1
        else:
            mode = prev
            while mode == prev:
                mode = int(rng.integers(1, spec.num_modes + 1))
        seg = tau + (int(rng.poisson(mean_extra)) if mean_extra > 0 else 0)
        values.extend([mode] * seg)
        prev = mode
    return values[:length]


def _generate_average(spec: SignalClassSpec, length: int, rng, stable_set) -> list[int]:
    params = spec.average
    h = params.h
    stable_modes = [m for m in range(1, spec.num_modes + 1) if m in stable_set]
    unstable_modes = [m for m in range(1, spec.num_modes + 1) if m not in stable_set]
    if not stable_modes:
        raise InfeasibleSpecError(
            "average-dwell generation needs at least one stable mode to satisfy the per-window stable/unstable ratio"
        )
    switch_budget = int(math.floor(params.n_bar_w + _TOL))
    u_cap = params.k_plus_max if unstable_modes else 0
    if spec.unstable_budget is not None:
        u_cap = min(u_cap, spec.unstable_budget)

    full, remainder = divmod(length, h)
    values: list[int] = []
    prev: int | None = None
    for j in range(full):
        partial_follows = remainder > 0 and j == full - 1
        base = prev if prev in stable_modes else int(rng.choice(stable_modes))
        window = None
        u = int(rng.integers(0, u_cap + 1)) if u_cap > 0 else 0
        if u > 0:
            window = _place_unstable_run(
                rng, base, int(rng.choice(unstable_modes)), u, h, prev, switch_budget, partial_follows
            )
        if window is None:
            # All-stable window; the boundary switch (if any) must fit the budget.
            cost = int(prev is not None and base != prev)
            if cost > switch_budget:
                base = prev  # prev is stable here, otherwise q=0 would not have been allowed
            window = [base] * h
            window = _maybe_split_stable(rng, window, prev, switch_budget, stable_modes)
        values.extend(window)
        prev = window[-1]
    if remainder:
        if prev is None:
            prev = int(rng.choice(stable_modes))
        values.extend([prev] * remainder)
    return values


def _place_unstable_run(rng, base, unstable, u, h, prev, budget, partial_follows) -> list[int] | None:
    """Try random placements of one contiguous unstable run; None if budget-blocked."""
    positions = list(rng.permutation(h - u + 1))
    for p in positions:
        q = h - u - p
        if partial_follows and q == 0:
            continue
        if q == 0 and budget < 1:
            # The follow-up window would need one switch to leave the unstable mode.
            continue
        runs = [m for m, ln in ((base, p), (unstable, u), (base, q)) if ln > 0]
        events = int(prev is not None and runs[0] != prev) + (len(runs) - 1)
        if events <= budget:
            window = [base] * int(p) + [unstable] * u + [base] * q
            return window
    return None


def _maybe_split_stable(rng, window, prev, budget, stable_modes) -> list[int]:
    """Occasionally switch between two stable modes inside an all-stable window."""
    h = len(window)
    cost = int(prev is not None and window[0] != prev)
    if len(stable_modes) < 2 or h < 2 or budget - cost < 1 or rng.random() > 0.3:
        return window
    other = window[0]
    while other == window[0]:
        other = int(rng.choice(stable_modes))
    cut = int(rng.integers(1, h))
    return window[:cut] + [other] * (h - cut)

"""Experiment runners: Monte-Carlo error verification and Gramian sweeps.

The Monte-Carlo runner steps all replications together when the signal is
shared (one matrix-vector product per time step for the whole batch) and
falls back to per-replication simulation when each replication regenerates
its own signal.  Replication ``r`` always consumes the noise stream derived
from ``(seed, r)``, so results do not depend on the execution strategy and
extending the replication count leaves earlier replications untouched.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .error_bounds import (
    ArbitraryClass,
    AverageClass,
    ErrorBoundParams,
    MinDwellClass,
    class_composed_bound,
)
from .errors import InvalidInputError
from .estimator import fit, partition
from .gramian_bounds import arbitrary_sandwich, average_upper, dwell_lower, dwell_upper
from .linalg import min_singular_value, pseudoinverse, spectral_norm, symmetric_eig_extremes
from .signals import MIN_DWELL, SignalClassSpec, generate, validate
from .stability import (
    certify_average_class,
    find_stability_horizon,
    minimum_dwell_time,
    product_norm_extremes,
)
from .system import SwitchingSignal, iter_gramians, simulate

_CHUNK = 4096


def checkpoint_times(horizon: int, per_decade: int = 25, t_min: int = 10) -> np.ndarray:
    """Strictly increasing, log-spaced sample times that end at ``horizon``."""
    if horizon < 2:
        raise InvalidInputError("horizon must be at least 2")
    lo = min(max(2, t_min), horizon)
    if lo == horizon:
        return np.array([horizon], dtype=np.int64)
    decades = math.log10(horizon / lo)
    num = max(2, int(math.ceil(decades * per_decade)) + 1)
    pts = np.unique(np.round(np.logspace(math.log10(lo), math.log10(horizon), num)).astype(np.int64))
    pts = pts[(pts >= 2) & (pts <= horizon)]
    if pts[-1] != horizon:
        pts = np.append(pts, horizon)
    return pts


@dataclass
class BoundContext:
    """Switching-class certificate reused for every bound evaluation."""

    switching_class: object
    class_ok: bool
    reasons: tuple[str, ...] = ()


def build_bound_context(cfg: ExperimentConfig, signal: SwitchingSignal | None = None) -> BoundContext:
    """Assemble the certificate for the configured bound class.

    When a concrete signal is supplied its class membership is checked and
    folded into the context validity, so emitted rows can never silently
    claim a bound whose hypotheses fail.
    """
    reasons: list[str] = []
    if cfg.bound_class == "arbitrary":
        m = cfg.m or find_stability_horizon(cfg.system, m_max=6)
        if m is None:
            m = 1
            reasons.append("no stability horizon certified up to m=6")
        cert = product_norm_extremes(cfg.system, m)
        if not cert.marginal:
            reasons.append(f"product-norm certificate a_max={cert.a_max:.6g} exceeds 1")
        ctx = BoundContext(ArbitraryClass(cert), not reasons, tuple(reasons))
    elif cfg.bound_class == "min_dwell":
        md = minimum_dwell_time(cfg.envelope)
        if cfg.signal_spec.variant == MIN_DWELL and cfg.signal_spec.tau < md.tau_star:
            reasons.append(f"signal dwell time {cfg.signal_spec.tau} is below the certified tau*={md.tau_star}")
        ctx = BoundContext(MinDwellClass(cfg.envelope, md.tau_star), not reasons, tuple(reasons))
    else:
        cert = certify_average_class(cfg.average_params)
        if not cert.valid:
            reasons.extend(cert.reasons)
        ctx = BoundContext(AverageClass(cfg.average_params, cert.a), not reasons, tuple(reasons))
    if signal is not None:
        spec = _membership_spec(cfg)
        report = validate(signal, spec, cfg.system.stable_set)
        if not report.valid:
            reasons.append(f"signal is not a class member: {report.first_violation}")
            ctx = BoundContext(ctx.switching_class, False, tuple(reasons))
    if cfg.x0 is not None and np.any(cfg.x0 != 0.0):
        reasons.append("bounds assume x0 = 0 but the run uses a nonzero x0")
        ctx = BoundContext(ctx.switching_class, False, tuple(reasons))
    return ctx


def _membership_spec(cfg: ExperimentConfig) -> SignalClassSpec:
    if cfg.bound_class == "arbitrary":
        return SignalClassSpec.arbitrary(cfg.system.s)
    if cfg.bound_class == "min_dwell":
        tau = minimum_dwell_time(cfg.envelope).tau_star
        return SignalClassSpec.min_dwell(cfg.system.s, tau)
    return SignalClassSpec.average_dwell(cfg.system.s, cfg.average_params)


@dataclass
class ErrorStats:
    """Per-mode error quantiles, bounds, and per-replication trajectories."""

    checkpoints: np.ndarray
    replications: int
    counts: dict[int, np.ndarray] = field(default_factory=dict)
    errors: dict[int, np.ndarray] = field(default_factory=dict)  # (R, P), NaN when unfit
    bounds: dict[int, np.ndarray] = field(default_factory=dict)
    required: dict[int, np.ndarray] = field(default_factory=dict)
    burn_in_ok: dict[int, np.ndarray] = field(default_factory=dict)
    assumptions_ok: bool = True

    @property
    def modes(self) -> list[int]:
        return sorted(self.counts)

    def to_csv(self, path) -> None:
        """Documented columns first, then per-replication error columns."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["mode", "t", "count", "err_max", "err_median", "err_mean", "bound", "burn_in_ok", "assumptions_ok"]
                + [f"err_rep_{r + 1}" for r in range(self.replications)]
            )
            for mode in self.modes:
                errs = self.errors[mode]
                for p, t in enumerate(self.checkpoints):
                    if self.counts[mode][p] < 1 or np.any(np.isnan(errs[:, p])):
                        continue
                    col = errs[:, p]
                    writer.writerow(
                        [
                            mode,
                            int(t),
                            int(self.counts[mode][p]),
                            repr(float(np.max(col))),
                            repr(float(np.median(col))),
                            repr(float(np.mean(col))),
                            repr(float(self.bounds[mode][p])),
                            "true" if self.burn_in_ok[mode][p] else "false",
                            "true" if self.assumptions_ok else "false",
                        ]
                        + [repr(float(v)) for v in col]
                    )


def _signal_counts(signal: SwitchingSignal, s: int, cps: np.ndarray):
    """Usable-pair counts and last active steps per mode at each checkpoint."""
    values = signal.values
    n_steps = len(values)
    counts = {}
    last = {}
    for mode in range(1, s + 1):
        active = np.zeros(n_steps + 1, dtype=np.int64)
        active[2:] = np.cumsum(values[1:] == mode)  # pairs use t = 1 .. N-1
        counts[mode] = active[cps]
        hit = np.where(values[1:] == mode)[0] + 1
        marker = np.zeros(n_steps, dtype=np.int64)
        marker[hit] = hit
        last_until = np.zeros(n_steps + 1, dtype=np.int64)
        last_until[1:] = np.maximum.accumulate(marker)
        last[mode] = last_until[cps]  # last active step strictly before each checkpoint
    return counts, last


def _mode_bounds(cfg: ExperimentConfig, ctx: BoundContext, counts, last, cps):
    bounds = {}
    required = {}
    burn_ok = {}
    for mode, cnt in counts.items():
        b = np.full(cps.shape, np.nan)
        req = np.full(cps.shape, np.nan)
        ok = np.zeros(cps.shape, dtype=bool)
        for p in range(len(cps)):
            if cnt[p] < 1:
                continue
            params = ErrorBoundParams(
                n=cfg.system.n,
                delta=cfg.delta,
                count=int(cnt[p]),
                N_i=int(last[mode][p]),
                K=cfg.K,
                variant=cfg.variant,
            )
            report = class_composed_bound(ctx.switching_class, params)
            b[p] = report.bound
            req[p] = report.required_count
            ok[p] = report.burn_in_ok
        bounds[mode] = b
        required[mode] = req
        burn_ok[mode] = ok
    return bounds, required, burn_ok


def run_monte_carlo(cfg: ExperimentConfig) -> ErrorStats:
    """Replicate, fit at log-spaced checkpoints, and attach bound curves.

    With a shared signal the bound curves are exact functions of that signal;
    with per-replication signals the reported count is the minimum and the
    bound the maximum over replications (the conservative envelope).
    """
    cps = checkpoint_times(cfg.horizon)
    if cfg.fixed_signal:
        signal = generate(cfg.signal_spec, cfg.horizon, cfg.seed, cfg.system.stable_set)
        ctx = build_bound_context(cfg, signal)
        counts, last = _signal_counts(signal, cfg.system.s, cps)
        errors = _batched_errors(cfg, signal, cps)
        bounds, required, burn_ok = _mode_bounds(cfg, ctx, counts, last, cps)
        return ErrorStats(
            checkpoints=cps,
            replications=cfg.replications,
            counts=counts,
            errors=errors,
            bounds=bounds,
            required=required,
            burn_in_ok=burn_ok,
            assumptions_ok=ctx.class_ok,
        )
    return _run_regenerated(cfg, cps)


def _batched_errors(cfg: ExperimentConfig, signal: SwitchingSignal, cps: np.ndarray):
    """All replications stepped together over the shared signal."""
    system = cfg.system
    n, s, big_r = system.n, system.s, cfg.replications
    w = signal.values
    horizon = cfg.horizon
    mode_stack = np.stack(system.modes)
    x = np.zeros((big_r, n))
    if cfg.x0 is not None:
        x = np.tile(cfg.x0, (big_r, 1))
    moment = np.zeros((big_r, s, n, n))
    cross = np.zeros((big_r, s, n, n))
    gens = [cfg.noise.stream(r) for r in range(big_r)] if cfg.noise is not None else None
    errors = {mode: np.full((big_r, len(cps)), np.nan) for mode in range(1, s + 1)}
    cp_index = 0
    for start in range(0, horizon, _CHUNK):
        span = min(_CHUNK, horizon - start)
        if gens is None:
            noise = np.zeros((big_r, span, n))
        else:
            noise = np.stack([cfg.noise.sample(g, (span, n)) for g in gens])
        for offset in range(span):
            t = start + offset
            a = mode_stack[w[t] - 1]
            x_next = x @ a.T + cfg.noise_scale * noise[:, offset]
            if t >= 1:
                k = w[t] - 1
                moment[:, k] += np.einsum("ri,rj->rij", x, x)
                cross[:, k] += np.einsum("ri,rj->rij", x_next, x)
            x = x_next
            while cp_index < len(cps) and cps[cp_index] == t + 1:
                _record_errors(system, moment, cross, errors, cp_index)
                cp_index += 1
    return errors


def _record_errors(system, moment, cross, errors, cp_index) -> None:
    big_r = moment.shape[0]
    for mode in range(1, system.s + 1):
        k = mode - 1
        if not np.any(moment[:, k]):
            continue
        truth = system.mode(mode)
        col = errors[mode]
        for r in range(big_r):
            est = cross[r, k] @ pseudoinverse(moment[r, k])
            col[r, cp_index] = spectral_norm(est - truth)


def _run_regenerated(cfg: ExperimentConfig, cps: np.ndarray) -> ErrorStats:
    """Per-replication signals: simulate each replication separately."""
    system = cfg.system
    s, big_r = system.s, cfg.replications
    errors = {mode: np.full((big_r, len(cps)), np.nan) for mode in range(1, s + 1)}
    agg_counts = {mode: np.full((big_r, len(cps)), 0, dtype=np.int64) for mode in range(1, s + 1)}
    agg_bounds = {mode: np.full((big_r, len(cps)), np.nan) for mode in range(1, s + 1)}
    agg_req = {mode: np.full((big_r, len(cps)), np.nan) for mode in range(1, s + 1)}
    assumptions_ok = True
    for r in range(big_r):
        sig_seed = int(np.random.SeedSequence([cfg.seed, r]).generate_state(1)[0])
        signal = generate(cfg.signal_spec, cfg.horizon, sig_seed, system.stable_set)
        ctx = build_bound_context(cfg, signal)
        assumptions_ok = assumptions_ok and ctx.class_ok
        counts, last = _signal_counts(signal, s, cps)
        traj = simulate(system, signal, cfg.noise, cfg.noise_scale, cfg.x0, replication=r)
        _prefix_errors(system, traj, cps, errors, r)
        bounds, required, _ = _mode_bounds(cfg, ctx, counts, last, cps)
        for mode in range(1, s + 1):
            agg_counts[mode][r] = counts[mode]
            agg_bounds[mode][r] = bounds[mode]
            agg_req[mode][r] = required[mode]
    counts_out = {m: np.min(agg_counts[m], axis=0) for m in agg_counts}
    bounds_out = {}
    required_out = {}
    burn_ok_out = {}
    for mode in agg_bounds:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            bounds_out[mode] = np.nanmax(agg_bounds[mode], axis=0)
            required_out[mode] = np.nanmax(agg_req[mode], axis=0)
        burn_ok_out[mode] = counts_out[mode] >= np.where(
            np.isnan(required_out[mode]), np.inf, required_out[mode]
        )
    return ErrorStats(
        checkpoints=cps,
        replications=big_r,
        counts=counts_out,
        errors=errors,
        bounds=bounds_out,
        required=required_out,
        burn_in_ok=burn_ok_out,
        assumptions_ok=assumptions_ok,
    )


def _prefix_errors(system, traj, cps, errors, r) -> None:
    """Fits on trajectory prefixes via cumulative per-mode moments."""
    states = traj.states
    values = traj.signal.values
    n = system.n
    x = states[:-1]  # x_t for t = 0 .. N-1
    outer = np.einsum("ti,tj->tij", x, x)
    cross_all = np.einsum("ti,tj->tij", states[1:], x)
    for mode in range(1, system.s + 1):
        mask = (values == mode) & (np.arange(len(values)) >= 1)
        cum_moment = np.cumsum(np.where(mask[:, None, None], outer, 0.0), axis=0)
        cum_cross = np.cumsum(np.where(mask[:, None, None], cross_all, 0.0), axis=0)
        cum_count = np.cumsum(mask)
        truth = system.mode(mode)
        for p, t in enumerate(cps):
            if cum_count[t - 1] < 1:
                continue
            est = cum_cross[t - 1] @ pseudoinverse(cum_moment[t - 1])
            errors[mode][r, p] = spectral_norm(est - truth)


@dataclass
class SweepRow:
    T: int
    lam_min: float
    lam_max: float
    bound_lower: float | None
    bound_upper: float | None
    assumptions_ok: bool


@dataclass
class SweepTable:
    rows: list[SweepRow]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "lambda_min", "lambda_max", "bound_lower", "bound_upper", "assumptions_ok"])
            for row in self.rows:
                writer.writerow(
                    [
                        row.T,
                        repr(row.lam_min),
                        repr(row.lam_max),
                        "" if row.bound_lower is None else repr(row.bound_lower),
                        "" if row.bound_upper is None else repr(row.bound_upper),
                        "true" if row.assumptions_ok else "false",
                    ]
                )


def sweep_gramian(cfg: ExperimentConfig, t_grid) -> SweepTable:
    """Exact Gramian spectrum versus the class bounds over a horizon grid."""
    t_grid = sorted({int(t) for t in t_grid})
    if not t_grid or t_grid[0] < 1:
        raise InvalidInputError("T grid must contain positive integers")
    length = max(max(t_grid), 2)
    signal = generate(cfg.signal_spec, length, cfg.seed, cfg.system.stable_set)
    ctx = build_bound_context(cfg, signal)
    sigma_min = min(min_singular_value(a) for a in cfg.system.modes)
    wanted = set(t_grid)
    rows = []
    for t, gamma in iter_gramians(cfg.system, signal, max(t_grid)):
        if t not in wanted:
            continue
        lam_min, lam_max = symmetric_eig_extremes(gamma)
        lower, upper, ok = _class_bounds_at(cfg, ctx, t, sigma_min)
        rows.append(
            SweepRow(
                T=t,
                lam_min=lam_min,
                lam_max=lam_max,
                bound_lower=lower,
                bound_upper=upper,
                assumptions_ok=ok and ctx.class_ok,
            )
        )
    return SweepTable(rows)


def _class_bounds_at(cfg: ExperimentConfig, ctx: BoundContext, t: int, sigma_min: float):
    cls = ctx.switching_class
    if isinstance(cls, ArbitraryClass):
        gb = arbitrary_sandwich(cls.cert, t)
        return gb.lower, gb.upper, gb.assumptions_ok
    if isinstance(cls, MinDwellClass):
        a = cls.env.c * cls.env.rho**cls.tau_star
        asymptotic = cfg.dwell_variant == "asymptotic" and a < 1.0
        gb = dwell_upper(cls.env, cls.tau_star, a, t, asymptotic=asymptotic)
        lo = dwell_lower(sigma_min, t, tight=True)
        return lo.lower, gb.upper, gb.assumptions_ok
    gb = average_upper(cls.params, cls.a, t)
    lo = dwell_lower(sigma_min, t, tight=True)
    return lo.lower, gb.upper, gb.assumptions_ok

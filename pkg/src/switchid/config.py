"""Experiment configuration: INI files with JSON-encoded arrays, plus presets.

The format is a flat ``key = value`` file with sections; matrices and vectors
are written as nested JSON arrays inside values.  ``load_config`` builds the
fully validated objects (system, signal class spec, certified envelope and
average-dwell parameters) so the runners stay free of parsing concerns.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .signals import ARBITRARY, AVERAGE_DWELL, MIN_DWELL, AverageDwellParams, SignalClassSpec
from .stability import EnvelopeConstants, fit_decay_envelope
from .system import NoiseSpec, SwitchedSystem

PRESETS: dict[str, str] = {
    # Two-mode benchmark: one contracting mode, one expanding mode, identified
    # under a windowed average-dwell signal.  The class constants certify the
    # marginal case (C = 1), and the run sizes keep Monte-Carlo cost at desk
    # scale while leaving a decent stretch of checkpoints past burn-in.
    "fig1": """
[system]
modes = [[[0.5, 0.0], [0.0, 0.5]], [[2.0, 0.0], [0.0, 2.0]]]
rho = 0.5

[signal]
class = average_dwell
h = 4
tau_a = 2.0
N0 = 1
lambda = 1.0
lambda_star = 1.0
lambda1 = 0.5
lambda2 = 2.0
unstable_budget = 1
fixed = true

[noise]
family = gaussian
scale = 1.0

[run]
horizon = 60000
replications = 300
seed = 20260810
output_dir = out

[bounds]
delta = 0.05
K = 1.0
variant = theorem1
class = average
""",
}


@dataclass
class ExperimentConfig:
    system: SwitchedSystem
    signal_spec: SignalClassSpec
    fixed_signal: bool
    horizon: int
    replications: int
    noise: NoiseSpec | None  # None runs noise-free (excitation from x0 only)
    noise_scale: float
    x0: np.ndarray | None
    delta: float
    K: float
    variant: str
    bound_class: str
    dwell_variant: str
    envelope: EnvelopeConstants
    average_params: AverageDwellParams | None
    m: int | None
    output_dir: Path
    seed: int

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        data = dict(self.__dict__)
        data.update({k: v for k, v in kwargs.items() if v is not None})
        return ExperimentConfig(**data)


def _get(parser, section, key, cast, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise InvalidInputError(f"config misses required key [{section}] {key}")
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if cast is json.loads:
            return json.loads(raw)
        return cast(raw)
    except (ValueError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"config key [{section}] {key} = {raw!r} is not a valid {cast.__name__}") from exc


def load_config_text(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidInputError(f"config parse error: {exc}") from exc
    base = Path(base_dir) if base_dir is not None else Path.cwd()

    modes = _get(parser, "system", "modes", json.loads)
    modes_file = _get(parser, "system", "modes_file", str)
    if modes is None and modes_file is None:
        raise InvalidInputError("config needs [system] modes or modes_file")
    if modes is None:
        path = (base / modes_file).resolve()
        if not path.exists():
            raise InvalidInputError(f"[system] modes_file {path} does not exist")
        modes = json.loads(path.read_text())["modes"]
    system = SwitchedSystem(modes)

    rho = _get(parser, "system", "rho", float)
    lambda2 = _get(parser, "system", "lambda2", float)
    envelope = fit_decay_envelope(system, rho=rho, lambda2=lambda2)

    variant = _get(parser, "signal", "class", str, required=True)
    average_params = None
    if variant == ARBITRARY:
        weights = _get(parser, "signal", "weights", json.loads)
        spec = SignalClassSpec.arbitrary(system.s, weights)
    elif variant == MIN_DWELL:
        tau = _get(parser, "signal", "tau", int, required=True)
        mean_segment = _get(parser, "signal", "mean_segment", float)
        spec = SignalClassSpec.min_dwell(system.s, tau, mean_segment)
    elif variant == AVERAGE_DWELL:
        average_params = AverageDwellParams(
            tau_a=_get(parser, "signal", "tau_a", float, required=True),
            N0=_get(parser, "signal", "n0", int, default=0),
            lam=_get(parser, "signal", "lambda", float, required=True),
            lam_star=_get(parser, "signal", "lambda_star", float, required=True),
            h=_get(parser, "signal", "h", int, required=True),
            lambda1=_get(parser, "signal", "lambda1", float, default=envelope.lambda1),
            lambda2=_get(parser, "signal", "lambda2", float, default=envelope.lambda2),
            C=envelope.C,
        )
        spec = SignalClassSpec.average_dwell(
            system.s, average_params, _get(parser, "signal", "unstable_budget", int)
        )
    else:
        raise InvalidInputError(f"unknown [signal] class {variant!r}")

    x0 = _get(parser, "run", "x0", json.loads)
    family = _get(parser, "noise", "family", str, default="gaussian")
    seed = _get(parser, "run", "seed", int, default=0)
    cfg = ExperimentConfig(
        system=system,
        signal_spec=spec,
        fixed_signal=_get(parser, "signal", "fixed", bool, default=True),
        horizon=_get(parser, "run", "horizon", int, required=True),
        replications=_get(parser, "run", "replications", int, default=1),
        noise=None if family == "none" else NoiseSpec(family=family, seed=seed),
        noise_scale=_get(parser, "noise", "scale", float, default=1.0),
        x0=np.asarray(x0, dtype=np.float64) if x0 is not None else None,
        delta=_get(parser, "bounds", "delta", float, default=0.05),
        K=_get(parser, "bounds", "k", float, default=1.0),
        variant=_get(parser, "bounds", "variant", str, default="theorem1"),
        bound_class=_get(parser, "bounds", "class", str, default=_default_bound_class(variant)),
        dwell_variant=_get(parser, "bounds", "dwell_variant", str, default="marginal"),
        envelope=envelope,
        average_params=average_params,
        m=_get(parser, "bounds", "m", int),
        output_dir=base / _get(parser, "run", "output_dir", str, default="out"),
        seed=seed,
    )
    _validate_config(cfg)
    return cfg


def _default_bound_class(signal_class: str) -> str:
    return {ARBITRARY: "arbitrary", MIN_DWELL: "min_dwell", AVERAGE_DWELL: "average"}.get(
        signal_class, "arbitrary"
    )


def _validate_config(cfg: ExperimentConfig) -> None:
    if cfg.replications < 1:
        raise InvalidInputError("replications must be at least 1")
    if cfg.horizon < 2:
        raise InvalidInputError("horizon must be at least 2")
    if cfg.bound_class not in ("arbitrary", "min_dwell", "average"):
        raise InvalidInputError(f"unknown bound class {cfg.bound_class!r}")
    if cfg.bound_class == "average" and cfg.average_params is None:
        raise InvalidInputError("average bounds need an average_dwell [signal] section")
    if cfg.dwell_variant not in ("marginal", "asymptotic"):
        raise InvalidInputError("dwell_variant must be 'marginal' or 'asymptotic'")
    if cfg.x0 is not None and cfg.x0.shape != (cfg.system.n,):
        raise InvalidInputError(f"x0 must have shape ({cfg.system.n},)")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"config file {path} does not exist")
    return load_config_text(path.read_text(), base_dir=path.parent)


def preset_config(name: str, base_dir: Path | None = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise InvalidInputError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return load_config_text(PRESETS[name], base_dir=base_dir)

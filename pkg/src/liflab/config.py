"""Line-oriented experiment configuration: `key = value`, `#` comments.

Omitted keys take the study defaults: domain [-4, 4], Gaussian initial
datum centered at -1 with sigma 0.1, t_max 1, deltas 2^-k for k = 0..7,
step rate, fit window k = 4..7, n_cells 1024, tau 1e-3.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace

from .model import Mode, RateKind


class Experiment(enum.Enum):
    CONVERGENCE = "convergence"
    SELF_SIMILAR = "selfsim"
    VALIDATE = "validate"
    SIMULATE = "simulate"
    SOLVE = "solve"


DEFAULT_B_VALUES = (1.0, 0.5, 0.0, -0.5, -1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment = Experiment.CONVERGENCE
    b_values: tuple = DEFAULT_B_VALUES
    k_range: tuple = tuple(range(8))
    fit_k_range: tuple = (4, 5, 6, 7)
    n_cells: int = 1024
    tau: float = 1e-3
    t_max: float = 1.0
    x_min: float = -4.0
    x_max: float = 4.0
    paths: int = 100_000
    dt: float = 1e-3
    seed: int = 1729
    rate_kind: RateKind = RateKind.STEP
    out_dir: str = "liflab-out"
    x0: float = -1.0
    sigma0: float = 0.1
    init: str = "gaussian"
    delta: float = 0.125
    b: float = 0.0
    mode: Mode = Mode.DISCHARGE_FULL
    export_paths: int = 100
    bin_width: float = 0.05

    def __post_init__(self):
        if len(self.k_range) == 0:
            raise ValueError("k_range must be nonempty")
        if len(self.fit_k_range) < 2:
            raise ValueError("fit_k_range needs at least two k values")
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.init not in ("point", "gaussian"):
            raise ValueError("init must be 'point' or 'gaussian'")
        if not set(self.fit_k_range) <= set(self.k_range):
            raise ValueError("fit_k_range must be a subset of k_range")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


class ConfigError(ValueError):
    pass


def _parse_float(s):
    return float(s)


def _parse_int(s):
    v = int(s, 0)
    return v


def _parse_range(s):
    s = s.strip()
    if ".." in s:
        lo, hi = s.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in s.split(",") if tok.strip())


def _parse_floats(s):
    return tuple(float(tok) for tok in s.split(",") if tok.strip())


_PARSERS = {
    "experiment": lambda s: Experiment(s.strip().lower()),
    "b_values": _parse_floats,
    "k_range": _parse_range,
    "fit_k_range": _parse_range,
    "n_cells": _parse_int,
    "tau": _parse_float,
    "t_max": _parse_float,
    "x_min": _parse_float,
    "x_max": _parse_float,
    "paths": _parse_int,
    "dt": _parse_float,
    "seed": _parse_int,
    "rate_kind": lambda s: RateKind(s.strip().lower()),
    "out_dir": lambda s: s.strip(),
    "x0": _parse_float,
    "sigma0": _parse_float,
    "init": lambda s: s.strip(),
    "delta": _parse_float,
    "b": _parse_float,
    "mode": lambda s: Mode(s.strip().lower()),
    "export_paths": _parse_int,
    "bin_width": _parse_float,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse a config document; unknown keys and bad values are rejected."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](val.strip())
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"line {lineno}: invalid value for {key!r}: {exc}") from exc
    try:
        return ExperimentConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(config: ExperimentConfig) -> str:
    """Full-precision text form; parse_config(serialize_config(c)) == c."""
    lines = []
    for f in fields(config):
        v = getattr(config, f.name)
        if isinstance(v, enum.Enum):
            s = v.value
        elif isinstance(v, tuple):
            s = ", ".join(repr(x) for x in v)
        else:
            s = repr(v) if not isinstance(v, str) else v
        lines.append(f"{f.name} = {s}")
    return "\n".join(lines) + "\n"


def config_with(config: ExperimentConfig, **updates) -> ExperimentConfig:
    return replace(config, **updates)

"""Flat key = value configuration files.

Format: one `key = value` per line, `#` starts a comment, blank lines
ignored.  Unknown or duplicate keys and unparsable values are errors
that name the key and line.  Every key has a default, so an empty (or
absent) file runs the reference histogram experiment.

The canonical echo of a resolved configuration (sorted keys, exact
float reprs) is hashed into every output file, making outputs
traceable to the exact inputs that produced them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import EnsembleConfig
from .errors import ConfigError
from .reaction import ChannelParams
from .rmt import ReservoirParams

EXPERIMENTS = ("fig1", "fig2", "fig3", "table2", "integrals", "custom")


def _parse_float_list(s: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in s.split(",") if tok.strip())


def _parse_int_list(s: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in s.split(",") if tok.strip())


_CONVERTERS = {
    "Ng_a": int,
    "v_a": float,
    "Gamma_a": float,
    "Ng_b": int,
    "v_b": float,
    "Gamma_b": float,
    "t1": float,
    "t2": float,
    "E": float,
    "v2": float,
    "v3": float,
    "v4": float,
    "n_runs": int,
    "n_samples": int,
    "n_bins": int,
    "x_max": float,
    "master_seed": int,
    "workers": int,
    "gamma_a_grid": _parse_float_list,
    "table2_dims": _parse_int_list,
    "table2_samples": int,
}

DEFAULTS = {
    "Ng_a": 100,
    "v_a": 0.1,
    "Gamma_a": 0.1,
    "Ng_b": 100,
    "v_b": 0.1,
    "Gamma_b": 0.1,
    "t1": 1.0,
    "t2": 1.0,
    "E": 0.0,
    "v2": 0.1,
    "v3": 0.1,
    "v4": 0.1,
    "n_runs": 50,
    "n_samples": 500,
    "n_bins": 40,
    "x_max": 5.0,
    "master_seed": 20250826,
    "workers": 0,
    # spans y = rho0_a * Gamma_a from 0.03 to 10 at the reference
    # reservoir, while keeping Gamma_a small against the band edge
    "gamma_a_grid": tuple(float(g) for g in np.logspace(-3.0, -0.5, 9)),
    "table2_dims": (100, 400, 900, 1600),
    "table2_samples": 100,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment: identifies the preset and all parameters."""

    experiment: str
    ensemble: EnsembleConfig
    gamma_a_grid: tuple[float, ...]
    table2_dims: tuple[int, ...]
    table2_samples: int


def parse_config_text(text: str) -> dict[str, tuple[str, int]]:
    """Raw key -> (value, line number) map with syntax checking."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {out[key][1]})")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        out[key] = (value, lineno)
    return out


def _resolve_values(raw: dict[str, tuple[str, int]]) -> dict:
    values = dict(DEFAULTS)
    for key, (text, lineno) in raw.items():
        try:
            values[key] = _CONVERTERS[key](text)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return values


def _build(experiment: str, values: dict) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}, expected one of {EXPERIMENTS}")
    try:
        reservoir_a = ReservoirParams(n=values["Ng_a"], v=values["v_a"], gamma=values["Gamma_a"])
    except ValueError as exc:
        raise ConfigError(f"reservoir a: {exc}") from exc
    try:
        reservoir_b = ReservoirParams(n=values["Ng_b"], v=values["v_b"], gamma=values["Gamma_b"])
    except ValueError as exc:
        raise ConfigError(f"reservoir b: {exc}") from exc
    try:
        channel = ChannelParams(
            t1=values["t1"],
            t2=values["t2"],
            v2=values["v2"],
            v3=values["v3"],
            v4=values["v4"],
            energy=values["E"],
        )
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from exc
    try:
        ens = EnsembleConfig(
            reservoir_a=reservoir_a,
            reservoir_b=reservoir_b,
            channel=channel,
            n_runs=values["n_runs"],
            n_samples=values["n_samples"],
            n_bins=values["n_bins"],
            x_max=values["x_max"],
            master_seed=values["master_seed"],
            workers=values["workers"],
        )
    except ValueError as exc:
        raise ConfigError(f"ensemble: {exc}") from exc
    grid = values["gamma_a_grid"]
    if not grid:
        raise ConfigError("gamma_a_grid must not be empty")
    if any(not (g > 0.0 and np.isfinite(g)) for g in grid):
        raise ConfigError("gamma_a_grid entries must be finite and > 0")
    dims = values["table2_dims"]
    if not dims or any(d < 2 for d in dims):
        raise ConfigError("table2_dims entries must be integers >= 2")
    if values["table2_samples"] < 2:
        raise ConfigError("table2_samples must be >= 2")
    return ExperimentConfig(
        experiment=experiment,
        ensemble=ens,
        gamma_a_grid=tuple(float(g) for g in grid),
        table2_dims=tuple(int(d) for d in dims),
        table2_samples=int(values["table2_samples"]),
    )


def load_config(
    path: str | Path | None,
    experiment: str,
    seed: int | None = None,
    workers: int | None = None,
) -> ExperimentConfig:
    """Read and validate a config file; missing path means all defaults.

    seed and workers, when given, override the file (command-line
    flags take precedence).
    """
    if path is None:
        raw: dict[str, tuple[str, int]] = {}
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = parse_config_text(path.read_text())
    values = _resolve_values(raw)
    if seed is not None:
        if seed < 0:
            raise ConfigError("master_seed must be nonnegative")
        values["master_seed"] = int(seed)
    if workers is not None:
        if workers < 0:
            raise ConfigError("workers must be >= 0")
        values["workers"] = int(workers)
    return _build(experiment, values)


def config_echo(cfg: ExperimentConfig) -> str:
    """Canonical sorted key = value echo of a resolved configuration.

    workers is deliberately absent: results do not depend on it, so
    outputs stay byte-identical across worker counts.
    """
    e = cfg.ensemble
    ra, rb, ch = e.reservoir_a, e.reservoir_b, e.channel
    values = {
        "experiment": cfg.experiment,
        "Ng_a": ra.n,
        "v_a": ra.v,
        "Gamma_a": ra.gamma,
        "Ng_b": rb.n,
        "v_b": rb.v,
        "Gamma_b": rb.gamma,
        "t1": ch.t1,
        "t2": ch.t2,
        "E": ch.energy,
        "v2": ch.v2,
        "v3": ch.v3,
        "v4": ch.v4,
        "n_runs": e.n_runs,
        "n_samples": e.n_samples,
        "n_bins": e.n_bins,
        "x_max": e.x_max,
        "master_seed": e.master_seed,
        "gamma_a_grid": ",".join(repr(float(g)) for g in cfg.gamma_a_grid),
        "table2_dims": ",".join(str(d) for d in cfg.table2_dims),
        "table2_samples": cfg.table2_samples,
    }

    def fmt(v):
        return repr(float(v)) if isinstance(v, float) else str(v)

    return "\n".join(f"{k} = {fmt(values[k])}" for k in sorted(values)) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """Short stable hash of the canonical echo."""
    return hashlib.sha256(config_echo(cfg).encode()).hexdigest()[:12]

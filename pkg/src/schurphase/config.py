"""Run configuration: a flat, sectioned key=value file with CLI overrides.

The file grammar is INI-style; every key below has a default, so an empty or
absent file is valid.  ``--set section.key=value`` overrides win over the
file.  ``auto`` for landscape.sigma_e selects sqrt(hbar_eff/2); ``auto`` for
density.n counts the quantum states of the chosen mode.

    [model]      variant (pt|escape), k, gamma, N, qL, qR
    [grid]       nq, np
    [landscape]  tf, samples, sigma_e, seed
    [density]    mode (gain|stable|loss|top), n (auto|int)
    [scan]       tf_min, tf_max, tf_step
    [output]     directory, formats (comma list of csv,bin,png)
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .model import RotorParams

__all__ = ["ConfigError", "RunConfig", "load_config", "DEFAULTS"]


class ConfigError(ValueError):
    """Invalid configuration or command-line parameters (exit code 2)."""


DEFAULTS = {
    "model": {"variant": "pt", "k": "1.1", "gamma": "0.001", "N": "1001", "qL": "0.0", "qR": "0.2"},
    "grid": {"nq": "400", "np": "400"},
    "landscape": {"tf": "66", "samples": "16", "sigma_e": "auto", "seed": "7"},
    "density": {"mode": "stable", "n": "auto"},
    "scan": {"tf_min": "10", "tf_max": "100", "tf_step": "1"},
    "output": {"directory": "out", "formats": "csv,bin"},
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters; ``raw`` echoes every key for manifests."""

    model: RotorParams
    nq: int
    np: int
    t_f: int
    samples: int
    sigma_e: float
    seed: int
    mode: str
    n: int | None
    tf_min: int
    tf_max: int
    tf_step: int
    directory: str
    formats: tuple
    raw: dict

    def resolved_text(self) -> str:
        lines = []
        for section, keys in self.raw.items():
            lines.append(f"[{section}]")
            lines.extend(f"{key} = {val}" for key, val in keys.items())
            lines.append("")
        return "\n".join(lines)


def _parse(parser, section, key, conv):
    text = parser.get(section, key)
    try:
        return conv(text)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {text!r}: {exc}") from exc


def load_config(path=None, overrides=()) -> RunConfig:
    """Load defaults, optional config file, then ``section.key=value`` overrides."""
    parser = configparser.ConfigParser()
    parser.read_dict(DEFAULTS)
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, dot, name = key.strip().partition(".")
        if not dot or not parser.has_option(section, name):
            raise ConfigError(f"unknown config key {key.strip()!r}")
        parser.set(section, name.strip(), value.strip())

    variant = parser.get("model", "variant")
    q_loss = None
    if variant == "escape":
        q_loss = (_parse(parser, "model", "qL", float), _parse(parser, "model", "qR", float))
    try:
        params = RotorParams(
            k=_parse(parser, "model", "k", float),
            gamma=_parse(parser, "model", "gamma", float),
            N=_parse(parser, "model", "N", int),
            variant=variant,
            q_loss=q_loss,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sigma_text = parser.get("landscape", "sigma_e")
    if sigma_text == "auto":
        sigma_e = math.sqrt(params.hbar_eff / 2.0)
    else:
        sigma_e = _parse(parser, "landscape", "sigma_e", float)
        if sigma_e < 0:
            raise ConfigError("landscape.sigma_e must be >= 0")

    mode = parser.get("density", "mode")
    if mode not in ("gain", "stable", "loss", "top"):
        raise ConfigError(f"density.mode {mode!r} not one of gain/stable/loss/top")
    n_text = parser.get("density", "n")
    n = None if n_text == "auto" else _parse(parser, "density", "n", int)

    cfg = RunConfig(
        model=params,
        nq=_parse(parser, "grid", "nq", int),
        np=_parse(parser, "grid", "np", int),
        t_f=_parse(parser, "landscape", "tf", int),
        samples=_parse(parser, "landscape", "samples", int),
        sigma_e=sigma_e,
        seed=_parse(parser, "landscape", "seed", int),
        mode=mode,
        n=n,
        tf_min=_parse(parser, "scan", "tf_min", int),
        tf_max=_parse(parser, "scan", "tf_max", int),
        tf_step=_parse(parser, "scan", "tf_step", int),
        directory=parser.get("output", "directory"),
        formats=tuple(f.strip() for f in parser.get("output", "formats").split(",") if f.strip()),
        raw={section: dict(parser.items(section)) for section in parser.sections()},
    )
    if cfg.nq < 1 or cfg.np < 1:
        raise ConfigError("grid resolution must be positive")
    if cfg.t_f < 1:
        raise ConfigError("landscape.tf must be >= 1")
    if cfg.samples < 1:
        raise ConfigError("landscape.samples must be >= 1")
    if not (1 <= cfg.tf_min <= cfg.tf_max) or cfg.tf_step < 1:
        raise ConfigError("scan range must satisfy 1 <= tf_min <= tf_max, tf_step >= 1")
    unknown = [f for f in cfg.formats if f not in ("csv", "bin", "png")]
    if unknown:
        raise ConfigError(f"unknown output formats: {unknown}")
    return cfg

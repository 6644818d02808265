"""Scenario config files: ``key = value`` lines under ``[section]`` headers.

Every key is optional; missing keys take the flagship defaults listed by
:func:`defaults_text`.  Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from ..errors import NsfdeError
from .scenario import Scenario, build

__all__ = ["ConfigError", "SCHEMA", "defaults_text", "load_params", "load_scenario"]


class ConfigError(NsfdeError, ValueError):
    """Malformed, missing or unknown configuration."""


@dataclass(frozen=True)
class Key:
    param: str
    kind: type
    default: object
    doc: str


SCHEMA = {
    "model": {
        "hurst": Key("h", float, 0.75, "Hurst index, 1/2 < H < 1"),
        "t_end": Key("t_end", float, 1.0, "final time T"),
        "delay_horizon": Key("r", float, 0.25, "history length r >= 0, a whole number of steps"),
        "delay": Key("delay", str, "constant_lag", "constant_lag | proportional | identity"),
        "delay_q": Key("delay_q", float, 0.5, "factor q for the proportional delay rho(t) = q t"),
        "n_modes": Key("n_modes", int, 8, "spectral truncation N"),
        "mu_scale": Key("mu_scale", float, 1.0, "generator eigenvalues mu_n = mu_scale * n^2"),
        "q_decay": Key("q_decay", float, 2.0, "Q eigenvalues lambda_n = q_scale * n^-q_decay"),
        "q_scale": Key("q_scale", float, 1.0, "see q_decay"),
        "phi": Key("phi", str, "cosine", "initial datum: zero | constant | cosine"),
        "phi_scale": Key("phi_scale", float, 0.2, "amplitude of the initial datum"),
    },
    "coefficients": {
        "drift": Key("drift", str, "log_splice", "zero | linear | log_splice"),
        "drift_scale": Key("drift_scale", float, 3.0, "drift amplitude a"),
        "modulus_delta": Key("modulus_delta", float, 0.1, "splice point of the u log(1/u) modulus, < 1/e"),
        "neutral": Key("neutral", str, "tanh", "neutral term g_beta: zero | linear | tanh"),
        "kappa": Key("kappa", float, 0.3, "neutral amplitude; l = kappa^2, M_g = kappa"),
        "beta": Key("beta", float, 0.75, "fractional power, 1/2 < beta < 1"),
        "sigma_scale": Key("sigma_scale", float, 0.5, "noise operator sigma = sigma_scale * I"),
    },
    "numerics": {
        "n_steps": Key("n_steps", int, 64, "time steps on [0, T]"),
        "n_paths": Key("n_paths", int, 2000, "Monte Carlo replications"),
        "seed": Key("seed", int, 20240601, "root seed, 64-bit unsigned"),
        "picard_tol": Key("picard_tol", float, 1e-10, "stop when sup_t E|x^{n+1}-x^n|^2 < picard_tol"),
        "inner_tol": Key("inner_tol", float, 1e-20, "neutral inner loop tolerance on E|dx|^2"),
        "max_iters": Key("max_iters", int, 15, "Picard step budget"),
        "max_inner_iters": Key("max_inner_iters", int, 200, "inner sweep budget per window"),
        "x0": Key("x0", str, "neutral", "first iterate: neutral | zero | constant"),
        "keep_paths": Key("keep_paths", int, 4, "sample paths kept per iterate for iterates.csv"),
    },
}


def defaults_text() -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for name, key in keys.items():
            lines.append(f"# {key.doc}")
            lines.append(f"{name} = {key.default}")
        lines.append("")
    return "\n".join(lines)


def _convert(section, name, key: Key, raw: str):
    try:
        if key.kind is int:
            return int(raw)
        if key.kind is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {name}: cannot read {raw!r} as {key.kind.__name__}") from None


def load_params(path) -> dict:
    """Flat parameter dict (defaults overlaid with the file)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    params = {key.param: key.default for keys in SCHEMA.values() for key in keys.values()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for name, raw in parser.items(section):
            if name not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{name}' in [{section}]")
            key = SCHEMA[section][name]
            params[key.param] = _convert(section, name, key, raw)
    return params


def load_scenario(path, seed: int | None = None) -> Scenario:
    params = load_params(path)
    if seed is not None:
        params["seed"] = seed
    try:
        return build(params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

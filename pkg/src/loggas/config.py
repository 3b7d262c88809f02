"""Run configuration: TOML file -> validated :class:`RunConfig`.

Schema (every section optional except ``[ensemble]``)::

    [ensemble]
    b = 1                      # beta = b^2
    charges = [1, 2]
    N = 4
    family = "monomial"        # or "hermite-monic"
    fugacities = [1.0, 1.0]
    convention = "pair"        # or "literal"

    [potential]
    kind = "gaussian"          # gaussian | polynomial | tabulated
    sigma = 1.0                # gaussian
    coefficients = [0, 0, 0.5] # polynomial, power basis
    xs = [...]                 # tabulated
    us = [...]

    [quadrature]
    method = "panels"          # or "adaptive"
    radius = 9.0               # omit for automatic
    rtol = 1e-12
    max_subdivisions = 512
    order = 20

    [correlate]
    m = [1, 0]
    grid = [-2.0, -1.0, 0.0, 1.0, 2.0]   # or {start, stop, num}
    population = [2, 1]        # omit for the grand canonical ensemble

    [verify]
    n_samples = 400000
    rtol = 1e-4
    shards = 4

Unknown keys are rejected.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .ensemble import EnsembleSpec, SpecError
from .poly import CompleteFamily
from .quadrature import Potential, PotentialError, QuadratureScheme


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "ensemble": {"b", "charges", "N", "family", "fugacities", "convention"},
    "potential": {"kind", "sigma", "coefficients", "xs", "us"},
    "quadrature": {"method", "radius", "rtol", "max_subdivisions", "order"},
    "correlate": {"m", "grid", "population"},
    "verify": {"n_samples", "rtol", "shards"},
}


@dataclass
class RunConfig:
    spec: EnsembleSpec
    fugacities: tuple
    convention: str = "pair"
    m: Optional[tuple] = None
    grid: tuple = ()
    population: Optional[tuple] = None
    n_samples: int = 400_000
    verify_rtol: float = 1e-4
    shards: int = 4
    raw: dict = field(default_factory=dict)


def _require(section, key, kind):
    if key not in section:
        raise ConfigError(f"missing required key {key!r}")
    val = section[key]
    if kind is int and (not isinstance(val, int) or isinstance(val, bool)):
        raise ConfigError(f"{key!r} must be an integer, got {val!r}")
    return val


def _float_list(val, name):
    if not isinstance(val, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        raise ConfigError(f"{name!r} must be a list of numbers")
    return tuple(float(v) for v in val)


def _int_list(val, name):
    if not isinstance(val, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
        raise ConfigError(f"{name!r} must be a list of integers")
    return tuple(val)


def parse_config(data: dict) -> RunConfig:
    for name, section in data.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        extra = set(section) - _SECTIONS[name]
        if extra:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    if "ensemble" not in data:
        raise ConfigError("missing [ensemble] section")
    ens = data["ensemble"]
    b = _require(ens, "b", int)
    N = _require(ens, "N", int)
    q = _int_list(_require(ens, "charges", list), "charges")
    try:
        family = CompleteFamily.by_name(ens.get("family", "monomial"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    pot_cfg = data.get("potential", {})
    kind = pot_cfg.get("kind", "gaussian")
    try:
        if kind == "gaussian":
            potential = Potential.gaussian(float(pot_cfg.get("sigma", 1.0)))
        elif kind == "polynomial":
            potential = Potential.polynomial(_float_list(pot_cfg.get("coefficients"), "coefficients"))
        elif kind == "tabulated":
            potential = Potential.tabulated(_float_list(pot_cfg.get("xs"), "xs"), _float_list(pot_cfg.get("us"), "us"))
        else:
            raise ConfigError(f"unknown potential kind {kind!r}")
    except PotentialError as exc:
        raise ConfigError(str(exc)) from exc
    quad = data.get("quadrature", {})
    try:
        scheme = QuadratureScheme(
            method=quad.get("method", "panels"),
            radius=None if quad.get("radius") is None else float(quad["radius"]),
            rtol=float(quad.get("rtol", 1e-12)),
            max_subdivisions=int(quad.get("max_subdivisions", 512)),
            order=int(quad.get("order", 20)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        spec = EnsembleSpec(b, q, N, potential, family, scheme)
    except SpecError as exc:
        raise ConfigError(str(exc)) from exc
    z = _float_list(ens.get("fugacities", [1.0] * len(q)), "fugacities")
    if len(z) != len(q) or any(v <= 0 for v in z):
        raise ConfigError("fugacities must be positive, one per charge")
    convention = ens.get("convention", "pair")
    if convention not in ("pair", "literal"):
        raise ConfigError(f"unknown convention {convention!r}")
    cor = data.get("correlate", {})
    m = _int_list(cor["m"], "m") if "m" in cor else None
    if m is not None and (len(m) != len(q) or any(v < 0 for v in m)):
        raise ConfigError("correlate.m needs one nonnegative entry per charge")
    grid = cor.get("grid", [])
    if isinstance(grid, dict):
        if set(grid) != {"start", "stop", "num"}:
            raise ConfigError("grid table needs exactly start, stop, num")
        grid = tuple(np.linspace(float(grid["start"]), float(grid["stop"]), int(grid["num"])).tolist())
    else:
        grid = _float_list(grid, "grid")
    population = _int_list(cor["population"], "population") if "population" in cor else None
    ver = data.get("verify", {})
    return RunConfig(
        spec=spec,
        fugacities=z,
        convention=convention,
        m=m,
        grid=grid,
        population=population,
        n_samples=int(ver.get("n_samples", 400_000)),
        verify_rtol=float(ver.get("rtol", 1e-4)),
        shards=int(ver.get("shards", 4)),
        raw=data,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return parse_config(data)

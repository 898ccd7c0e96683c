"""
YAML config loading for :class:`~hybridpack.engine.PackConfig`.

Layout (all sections except ``clusters``/``chemistries`` optional)::

    composition: {e_energy: 250, e_power: 150, f: 0.3}
    chemistries:
      energy: {diffusivity: 1e-13, thickness: 50e-6, ...}
    clusters:
      - {chemistry: energy, count: 4, cells: 16}
    protocol: {type: fixed_pulse, high_level: 5.0, rest_level: 0.0, period: 20}
    constraints: {resistance_threshold: 0.02, temperature_threshold: 318.15}
    simulation: {total_time: 200, safety: 0.5}
    fade:
      constant: {c0: 100, alpha: 0.1, beta: 1e-3}
      pulsed: {c0: 100, alpha: 0.08, beta: 8e-4}
    sweep:
      parameters:
        composition.f: [0.0, 0.3, 0.6]

Numbers may be written in any float notation, including ``1e-13``
(which YAML itself would read as a string).
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import itertools
import json
import types
import typing
from pathlib import Path
from typing import Any

import yaml

from .electrochem import FADE_CONSTANT_CURRENT, FADE_PULSED, FadeModel, PackComposition
from .engine import ChemistryParams, ClusterSpec, PackConfig, SimulationSettings
from .protocols import CCCV, Constant, FixedPulse, Percussive, PercussiveParams
from .scheduler import ScheduleConstraints


class ConfigError(ValueError):
    """Config file unreadable or invalid; message names the offending path."""


PROTOCOL_TYPES = {
    "constant": Constant,
    "fixed_pulse": FixedPulse,
    "cccv": CCCV,
    "percussive": PercussiveParams,
}
_PROTOCOL_TAGS = {Constant: "constant", FixedPulse: "fixed_pulse", CCCV: "cccv", Percussive: "percussive"}

DEFAULT_COMPOSITION = {"e_energy": 250.0, "e_power": 150.0, "f": 0.0}


def _convert(value: Any, tp: Any, path: str) -> Any:
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _convert(value, args[0], path)
    if tp is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{path}: expected true/false (got {value!r})")
    if tp is float:
        if isinstance(value, bool):
            raise ConfigError(f"{path}: expected a number (got {value!r})")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a number (got {value!r})") from None
    if tp is int:
        try:
            f = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected an integer (got {value!r})") from None
        if isinstance(value, bool) or f != int(f):
            raise ConfigError(f"{path}: expected an integer (got {value!r})")
        return int(f)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string (got {value!r})")
        return value
    raise ConfigError(f"{path}: unsupported field type {tp!r}")  # pragma: no cover


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping (got {type(data).__name__})")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {', '.join(map(str, unknown))}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _convert(data[f.name], hints[f.name], f"{path}.{f.name}")
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{path}.{f.name}: required field missing")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _build_protocol(data: Any):
    if not isinstance(data, dict) or "type" not in data:
        raise ConfigError("protocol: expected a mapping with a 'type' field")
    body = dict(data)
    tag = body.pop("type")
    if tag not in PROTOCOL_TYPES:
        raise ConfigError(f"protocol.type: unknown protocol {tag!r} (choose from {', '.join(PROTOCOL_TYPES)})")
    built = _build(PROTOCOL_TYPES[tag], body, "protocol")
    return Percussive(built) if tag == "percussive" else built


def parse_config(raw: dict) -> PackConfig:
    """Validate a config mapping into a :class:`PackConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    allowed = {"composition", "chemistries", "clusters", "protocol", "constraints", "simulation", "fade", "sweep"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"config: unknown section(s) {', '.join(unknown)}")
    for section in ("chemistries", "clusters", "protocol", "constraints"):
        if section not in raw:
            raise ConfigError(f"{section}: required section missing")

    composition = _build(PackComposition, raw.get("composition", DEFAULT_COMPOSITION), "composition")
    chems_raw = raw["chemistries"]
    if not isinstance(chems_raw, dict) or not chems_raw:
        raise ConfigError("chemistries: expected a non-empty mapping of name -> parameters")
    chemistries = {str(name): _build(ChemistryParams, body or {}, f"chemistries.{name}")
                   for name, body in chems_raw.items()}
    if not isinstance(raw["clusters"], list) or not raw["clusters"]:
        raise ConfigError("clusters: expected a non-empty list")
    clusters = [_build(ClusterSpec, body, f"clusters.{i}") for i, body in enumerate(raw["clusters"])]
    for i, spec in enumerate(clusters):
        if spec.chemistry not in chemistries:
            raise ConfigError(f"clusters.{i}.chemistry: {spec.chemistry!r} is not defined under chemistries")
    protocol = _build_protocol(raw["protocol"])
    constraints = _build(ScheduleConstraints, raw["constraints"], "constraints")
    simulation = _build(SimulationSettings, raw.get("simulation") or {}, "simulation")
    fade_raw = raw.get("fade") or {}
    if not isinstance(fade_raw, dict) or set(fade_raw) - {"constant", "pulsed"}:
        raise ConfigError("fade: expected a mapping with optional 'constant' and 'pulsed' entries")
    fade_constant = _build(FadeModel, fade_raw["constant"], "fade.constant") if "constant" in fade_raw \
        else FADE_CONSTANT_CURRENT
    fade_pulsed = _build(FadeModel, fade_raw["pulsed"], "fade.pulsed") if "pulsed" in fade_raw else FADE_PULSED
    try:
        return PackConfig(composition, chemistries, clusters, protocol, constraints, simulation,
                          fade_constant, fade_pulsed)
    except ValueError as exc:
        raise ConfigError(f"config: {exc}") from None


def load_raw(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config file ({exc.strerror or exc})") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: YAML parse error: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return raw


def load_config(path: str | Path) -> PackConfig:
    raw = load_raw(path)
    raw.pop("sweep", None)
    try:
        return parse_config(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_to_dict(config: PackConfig) -> dict:
    """Plain, fully-defaulted mapping; ``parse_config`` of it rebuilds ``config``."""
    protocol = config.protocol
    tag = _PROTOCOL_TAGS[type(protocol)]
    body = dataclasses.asdict(protocol.params if isinstance(protocol, Percussive) else protocol)
    return {
        "composition": dataclasses.asdict(config.composition),
        "chemistries": {name: dataclasses.asdict(c) for name, c in config.chemistries.items()},
        "clusters": [dataclasses.asdict(s) for s in config.clusters],
        "protocol": {"type": tag, **body},
        "constraints": dataclasses.asdict(config.constraints),
        "simulation": dataclasses.asdict(config.simulation),
        "fade": {"constant": dataclasses.asdict(config.fade_constant),
                 "pulsed": dataclasses.asdict(config.fade_pulsed)},
    }


def config_hash(config: PackConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dump_config(config: PackConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=True)


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

def _set_path(d: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node: Any = d
    for i, key in enumerate(keys):
        last = i == len(keys) - 1
        if isinstance(node, list):
            try:
                idx = int(key)
                node[idx]
            except (ValueError, IndexError):
                raise ConfigError(f"sweep.parameters: unknown parameter path {dotted!r}") from None
            if last:
                node[idx] = value
            else:
                node = node[idx]
        elif isinstance(node, dict) and key in node:
            if last:
                if isinstance(node[key], (dict, list)):
                    raise ConfigError(f"sweep.parameters: {dotted!r} names a section, not a parameter")
                node[key] = value
            else:
                node = node[key]
        else:
            raise ConfigError(f"sweep.parameters: unknown parameter path {dotted!r}")


def sweep_grid(raw: dict) -> tuple[list[str], list[tuple]]:
    """Parameter paths and their Cartesian value grid, in grid-index order."""
    block = raw.get("sweep")
    if not isinstance(block, dict) or not isinstance(block.get("parameters"), dict):
        raise ConfigError("sweep: expected a 'sweep' block with a 'parameters' mapping of path -> values")
    params = block["parameters"]
    if not params:
        raise ConfigError("sweep.parameters: empty grid, no parameters listed")
    for name, values in params.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.parameters.{name}: empty grid, expected a non-empty list of values")
    names = list(params)
    return names, list(itertools.product(*(params[n] for n in names)))


def expand_sweep(raw: dict) -> tuple[list[str], list[tuple], list[PackConfig]]:
    """One fully validated config per grid point."""
    names, grid = sweep_grid(raw)
    base_raw = {k: v for k, v in raw.items() if k != "sweep"}
    base = config_to_dict(parse_config(base_raw))
    configs = []
    for values in grid:
        d = copy.deepcopy(base)
        for name, value in zip(names, values):
            _set_path(d, name, value)
        configs.append(parse_config(d))
    return names, grid, configs

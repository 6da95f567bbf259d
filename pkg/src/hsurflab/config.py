"""Experiment configuration: JSON schema, defaults and boundary-data formulas."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field as dfield
from pathlib import Path

import jsonschema
import numpy as np

COMMANDS = ("flat-curve", "solve-graph", "rotational", "stability-report", "estrella",
            "height-sweep", "radius-sweep", "flux", "reproduce")

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_NUMS = {"type": "array", "items": {"type": "number"}}

FIELD_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["analytic", "sampled"]},
        "formula": {"enum": ["constant", "linear", "zonal-poly"]},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "H0": {"type": "number"}, "a": {"type": "number"}, "b": {"type": "number"},
                "v": _VEC3, "axis": _VEC3, "coefficients": {**_NUMS, "minItems": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["colatitude", "longitude", "values"],
            "properties": {"colatitude": _NUMS, "longitude": _NUMS,
                           "values": {"type": "array", "items": _NUMS}},
        },
        "symmetry_tags": {"type": "array", "items": {"type": "string"}},
        "derivative_mode": {"enum": ["analytic", "fd"]},
    },
    "oneOf": [
        {"required": ["formula"], "properties": {"kind": {"const": "analytic"}}},
        {"required": ["kind", "grid"], "properties": {"kind": {"const": "sampled"}}},
    ],
}

BOUNDARY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["formula"],
    "properties": {
        "formula": {"enum": ["zero", "constant", "affine", "grim-reaper"]},
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}

DOMAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "h"],
    "properties": {
        "kind": {"enum": ["disk", "rectangle", "two-disk"]},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "box": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "separation": {"type": "number", "exclusiveMinimum": 0},
        "boundary": BOUNDARY_SCHEMA,
    },
}

SURFACE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["round-sphere", "rotational-sphere", "hemisphere", "flat-disk",
                          "cap", "graph"]},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "H0": {"type": "number", "exclusiveMinimum": 0},
        "n_rows": {"type": "integer", "minimum": 8},
        "domain": DOMAIN_SCHEMA,
        "orientation": {"enum": ["up", "down"]},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "field": FIELD_SCHEMA,
        "domain": DOMAIN_SCHEMA,
        "surface": SURFACE_SCHEMA,
        "surfaces": {"type": "array", "items": SURFACE_SCHEMA},
        "plane": {"type": "array", "items": _VEC3, "minItems": 2, "maxItems": 2},
        "theta0": {"type": "number"},
        "s_max": {"type": "number", "exclusiveMinimum": 0},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                  "minItems": 1},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "orientation": {"enum": ["up", "down"]},
        "method": {"enum": ["grid", "rotational"]},
        "v": _VEC3,
        "resolution": {"type": "integer", "minimum": 8},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 13}},
        "out": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "quick": {"type": "boolean"},
    },
}


class ConfigError(ValueError):
    """Invalid configuration (maps to exit status 2)."""


DEFAULTS = {
    "flat-curve": {"field": {"formula": "constant", "params": {"H0": 1.0}}, "s_max": 7.0},
    "solve-graph": {"field": {"formula": "constant", "params": {"H0": 1.0}},
                    "domain": {"kind": "disk", "R": 0.5, "h": 1 / 64}, "orientation": "down"},
    "rotational": {"field": {"formula": "zonal-poly", "params": {"coefficients": [1.0, 0.0, 1.0]}},
                   "surface": {"kind": "rotational-sphere", "n_rows": 128}},
    "stability-report": {"field": {"formula": "constant", "params": {"H0": 1.0}},
                         "surface": {"kind": "round-sphere", "n_rows": 64}},
    "estrella": {"field": {"formula": "linear", "params": {"a": 1.0, "b": 0.0}}},
    "height-sweep": {"field": {"formula": "constant", "params": {"H0": 1.0}},
                     "radii": [0.25, 0.5, 0.75, 1.0, 1.5, 2.0], "h": 1 / 64,
                     "orientation": "down"},
    "radius-sweep": {"field": {"formula": "constant", "params": {"H0": 1.0}},
                     "surfaces": [{"kind": "hemisphere", "n_rows": 64}]},
    "flux": {"field": {"formula": "linear", "params": {"a": 1.0, "b": 0.0}},
             "surface": {"kind": "round-sphere", "n_rows": 64}, "v": [0.0, 0.0, 1.0]},
    "reproduce": {},
}


@dataclass
class ExperimentConfig:
    command: str
    data: dict
    seed: int = 0
    out: str = "hsl-out"
    quick: bool = False
    resolution: int | None = None
    tolerances: dict = dfield(default_factory=dict)

    def get(self, key, default=None):
        return self.data.get(key, default)


def validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def load_config(path=None, command: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read, merge defaults and validate; no computation happens before this succeeds."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if command is not None:
        if raw.get("command", command) != command:
            raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")
        raw.setdefault("command", command)
    validate(raw)
    merged = copy.deepcopy(DEFAULTS.get(raw["command"], {}))
    merged.update(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    validate(merged)
    return ExperimentConfig(merged["command"], merged, merged.get("seed", 0),
                            merged.get("out", "hsl-out"), merged.get("quick", False),
                            merged.get("resolution"), merged.get("tolerances", {}))


def boundary_function(spec: dict):
    """Dirichlet data ``g(x, y)`` from its JSON description.

    ``zero``; ``constant`` (``c``); ``affine`` (``a x + b y + c``);
    ``grim-reaper`` (``-log(cos(2 x)) / 2``, the translating-graph profile
    across the x direction, defined for ``|x| < pi / 4``).
    """
    jsonschema.validate(spec, BOUNDARY_SCHEMA)
    p = spec.get("params", {})
    f = spec["formula"]
    if f == "zero":
        return 0.0
    if f == "constant":
        return float(p.get("c", 0.0))
    if f == "affine":
        a, b, c = (float(p.get(k, 0.0)) for k in "abc")
        return lambda x, y: a * x + b * y + c
    if f == "grim-reaper":
        return lambda x, y: -0.5 * np.log(np.cos(2 * x))
    raise ConfigError(f"unknown boundary formula {f!r}")

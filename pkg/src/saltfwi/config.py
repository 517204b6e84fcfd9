"""Run configuration: a single JSON document validated against a strict
schema (unknown keys rejected) before any compute, plus dotted-path
command-line overrides."""

import copy
import json
import os

import jsonschema

from .errors import ConfigError
from .grid import Grid2D
from .model import BackgroundParam, Ellipse, EllipseUnion, Polygon, RasterMask

_ELLIPSE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["center", "semi_axes"],
    "properties": {
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "semi_axes": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "angle": {"type": "number"},
    },
}

_SHAPE = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "name"],
            "properties": {
                "type": {"const": "builtin"},
                "name": {"enum": ["a", "b", "c", "d"]},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "center", "semi_axes"],
            "properties": {
                "type": {"const": "ellipse"},
                "center": _ELLIPSE["properties"]["center"],
                "semi_axes": _ELLIPSE["properties"]["semi_axes"],
                "angle": {"type": "number"},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "ellipses"],
            "properties": {
                "type": {"const": "ellipse-union"},
                "ellipses": {"type": "array", "items": _ELLIPSE, "minItems": 1},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "vertices"],
            "properties": {
                "type": {"const": "polygon"},
                "vertices": {
                    "type": "array", "minItems": 3,
                    "items": {"type": "array", "items": {"type": "number"},
                              "minItems": 2, "maxItems": 2},
                },
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "path"],
            "properties": {
                "type": {"const": "mask"},
                "path": {"type": "string"},
            },
        },
    ]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["grid", "background"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["nx", "nz", "h"],
            "properties": {
                "nx": {"type": "integer", "minimum": 3},
                "nz": {"type": "integer", "minimum": 3},
                "h": {"type": "number", "exclusiveMinimum": 0},
                "origin": {"type": "array", "items": {"type": "number"},
                           "minItems": 2, "maxItems": 2},
            },
        },
        "background": {
            "type": "object",
            "additionalProperties": False,
            "required": ["v_top", "b"],
            "properties": {
                "v_top": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number"},
            },
        },
        "salt": {
            "type": "object",
            "additionalProperties": False,
            "required": ["shape"],
            "properties": {
                "shape": _SHAPE,
                "velocity": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "acquisition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_sources": {"type": "integer", "minimum": 1},
                "n_receivers": {"type": "integer", "minimum": 1},
                "receiver_depth": {"type": "number", "minimum": 0},
                "f_min": {"type": "number", "exclusiveMinimum": 0},
                "f_max": {"type": "number", "exclusiveMinimum": 0},
                "f_step": {"type": "number", "exclusiveMinimum": 0},
                "n_bands": {"type": "integer", "minimum": 1},
                "freqs_per_band": {"type": "integer", "minimum": 1},
            },
        },
        "weighting": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"f_peak": {"type": "number", "exclusiveMinimum": 0}},
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "required": ["snr_db"],
            "properties": {
                "snr_db": {"type": "number"},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "pml": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "width": {"type": "integer", "minimum": 10},
                "reflection": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "rbf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["gaussian", "multiquadric", "inverse-multiquadric",
                                     "inverse-quadratic", "thin-plate-spline",
                                     "wendland-1", "wendland-2", "wendland-3", "wendland-4"]},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "spacing_ratio": {"type": "integer", "minimum": 1},
                "padding": {"type": "integer", "minimum": 0},
            },
        },
        "levelset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["compact-sine", "sigmoid"]},
                "kappa": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "init": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "center": {"type": ["array", "null"],
                                   "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                        "radius": {"type": ["number", "null"], "exclusiveMinimum": 0},
                        "inside": {"type": "number"},
                        "outside": {"type": "number"},
                    },
                },
            },
        },
        "inversion": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["fwi", "pls", "pls-joint"]},
                "iters_per_band": {"type": "integer", "minimum": 1},
                "memory": {"type": "integer", "minimum": 0},
                "gtol": {"type": "number", "minimum": 0},
                "v_bounds": {"type": "array", "items": {"type": "number"},
                             "minItems": 2, "maxItems": 2},
                "b_interval": {"type": "array", "items": {"type": "number"},
                               "minItems": 2, "maxItems": 2},
                "bisection_tol": {"type": "number", "exclusiveMinimum": 0},
                "bands": {"type": ["array", "null"],
                          "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
            },
        },
        "fit_shape": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mask": _SHAPE,
                "adaptive": {"type": "boolean"},
                "epsilon": {"type": "number", "minimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
            },
        },
        "paths": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "output_dir": {"type": "string"},
                "truth_model": {"type": "string"},
                "start_model": {"type": "string"},
                "data": {"type": "string"},
                "recon_fwi": {"type": "string"},
                "recon_pls": {"type": "string"},
                "alpha": {"type": "string"},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "salt": {"velocity": 4500.0},
    "acquisition": {"n_sources": 16, "n_receivers": 32, "receiver_depth": 50.0,
                    "f_min": 2.5, "f_max": 3.5, "f_step": 0.0625,
                    "n_bands": 4, "freqs_per_band": 4},
    "weighting": {"f_peak": 15.0},
    "pml": {"width": 20, "reflection": 1e-4},
    "rbf": {"family": "wendland-4", "gamma": 4.0, "spacing_ratio": 5, "padding": 2},
    "levelset": {"kind": "compact-sine", "kappa": 0.1,
                 "init": {"center": None, "radius": None, "inside": 1.0, "outside": -1.0}},
    "inversion": {"mode": "pls", "iters_per_band": 150, "memory": 10, "gtol": 1e-12,
                  "v_bounds": [1500.0, 4500.0], "b_interval": [0.5, 1.2],
                  "bisection_tol": 1e-3, "bands": None},
    "fit_shape": {"adaptive": True, "epsilon": 0.1, "max_iters": 200},
    "paths": {"output_dir": "out", "truth_model": "truth.mod", "start_model": "start.mod",
              "data": "data.fwd", "recon_fwi": "recon_fwi.mod", "recon_pls": "recon_pls.mod",
              "alpha": "alpha.mod"},
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def apply_override(cfg: dict, dotted: str):
    """Apply one `a.b.c=value` override; the value is parsed as JSON, with
    a bare-string fallback."""
    if "=" not in dotted:
        raise ConfigError(f"override {dotted!r} must look like key.path=value")
    path, _, raw = dotted.partition("=")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = path.split(".")
    node = cfg
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {path!r} crosses a non-object value")
    node[keys[-1]] = value


def load_config(path=None, overrides=(), text=None) -> dict:
    """Read, merge with defaults, apply overrides and validate."""
    if text is None:
        try:
            with open(path) as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = _merge(DEFAULTS, user)
    for item in overrides:
        apply_override(cfg, item)
    env_out = os.environ.get("SALTFWI_OUTPUT_DIR")
    if env_out:
        cfg.setdefault("paths", {})["output_dir"] = env_out
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    return cfg


def grid_from_config(cfg: dict) -> Grid2D:
    g = cfg["grid"]
    return Grid2D(nx=g["nx"], nz=g["nz"], h=g["h"], origin=tuple(g.get("origin", (0.0, 0.0))))


def background_from_config(cfg: dict) -> BackgroundParam:
    return BackgroundParam(v_top=cfg["background"]["v_top"], b=cfg["background"]["b"])


def shape_from_config(shape_cfg: dict, grid: Grid2D):
    kind = shape_cfg["type"]
    if kind == "builtin":
        from .masks import builtin_shape

        return builtin_shape(shape_cfg["name"], grid)
    if kind == "ellipse":
        return Ellipse(center=tuple(shape_cfg["center"]),
                       semi_axes=tuple(shape_cfg["semi_axes"]),
                       angle=shape_cfg.get("angle", 0.0))
    if kind == "ellipse-union":
        return EllipseUnion(tuple(
            Ellipse(center=tuple(e["center"]), semi_axes=tuple(e["semi_axes"]),
                    angle=e.get("angle", 0.0))
            for e in shape_cfg["ellipses"]
        ))
    if kind == "polygon":
        return Polygon(tuple(tuple(v) for v in shape_cfg["vertices"]))
    if kind == "mask":
        from .containers import read_mod

        values, _ = read_mod(shape_cfg["path"])
        return RasterMask(values.astype(bool))
    raise ConfigError(f"unknown shape type {kind!r}")

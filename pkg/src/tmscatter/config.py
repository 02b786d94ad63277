"""Experiment configuration: JSON schema, defaults and object construction."""

import copy
import hashlib
import json

import jsonschema
import numpy as np

from .errors import ValidationError
from .potentials import (AxialProfile, Delta2D, FourierShifted, GridSampled, HarmonicY,
                         LineProfile, SeparableY, TransverseProfile, ZeroPotential)

TASKS = ("solve", "delta-compare", "invis-design", "invis-certify", "born-check",
         "oracle-compare", "sweep")

DEFAULTS = {
    "task": "solve",
    "potential": {"type": "zero", "support": [-0.5, 0.5]},
    "numerics": {
        "n_prop": 64,
        "n_evan": 64,
        "p_max": None,          # None means 4 k
        "dx": None,             # None means 0.05 / (2 k + 2 kappa_max)
        "scheme": "rk4",
        "n_max": None,
        "tol": 1e-6,
        "check": False,
        "max_growth": 1e12,
        "singular_cond": 1e12,
        "closure": "projected",
        "p_max_check": True,
        "n_theta": 721,
    },
    "incidence": {"k": 1.0, "k_sweep": None, "theta0_deg": [0.0], "side": "left"},
    "delta": {"z": "4+0i", "r0": [0.0, 0.0], "n_prop": 64},
    "design": {
        "alpha": 1.0,
        "margin": 0.05,
        "beta": None,           # born-check: defaults to 1.5 alpha
        "beta_prime": None,     # born-check: defaults to beta (1 + margin)
        "envelope": "harmonic",
        "window": None,
        "slab_width": 1.0,
        "amp": 1.0,
        "tol_inv": 1e-8,
        "n_angles": 13,
        "scan_k": None,         # None means 9 points in (alpha, 2 alpha)
        "control_strengths": [0.02, 0.04, 0.08],
    },
    "oracle": {"h": None, "y_range": None, "n_terms": 80, "series_tol": 1e-12},
    "output": {"dir": "scatter-out"},
}

_num = {"type": "number"}
_opt_num = {"type": ["number", "null"]}
_complex = {"anyOf": [{"type": "number"}, {"type": "string"},
                      {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}]}
_profile = {
    "type": "object",
    "required": ["shape"],
    "properties": {"shape": {"enum": ["gaussian", "box", "cosine-window", "exp-shifted"]},
                   "amp": _complex},
}

POTENTIAL_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        {"properties": {"type": {"const": "zero"},
                        "support": {"type": "array", "items": _num, "minItems": 2,
                                    "maxItems": 2}}},
        {"properties": {"type": {"const": "separable"}, "axial": _profile,
                        "transverse": _profile}, "required": ["axial", "transverse"]},
        {"properties": {"type": {"const": "harmonic"}, "axial": _profile,
                        "lines": {"type": "array", "minItems": 1,
                                  "items": {"type": "array", "minItems": 2, "maxItems": 2}}},
         "required": ["axial", "lines"]},
        {"properties": {"type": {"const": "fourier-shifted"}, "axial": _profile,
                        "beta": _num, "beta_prime": _num, "window": _opt_num},
         "required": ["axial", "beta", "beta_prime"]},
        {"properties": {"type": {"const": "delta"}, "z": _complex, "a": _num, "b": _num},
         "required": ["z"]},
        {"properties": {"type": {"const": "grid-sampled"},
                        "x": {"type": "array", "items": _num, "minItems": 2},
                        "K": {"type": "array", "items": _num, "minItems": 2},
                        "table_re": {"type": "array"}, "table_im": {"type": "array"},
                        "policy": {"enum": ["zero", "error"]}},
         "required": ["x", "K", "table_re"]},
    ],
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["task"],
    "properties": {
        "task": {"enum": list(TASKS)},
        "potential": POTENTIAL_SCHEMA,
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_prop": {"type": "integer", "minimum": 2},
                "n_evan": {"type": "integer", "minimum": 0},
                "p_max": _opt_num, "dx": _opt_num,
                "scheme": {"enum": ["rk4", "dyson"]},
                "n_max": {"type": ["integer", "null"], "minimum": 1},
                "tol": _num, "check": {"type": "boolean"}, "max_growth": _opt_num,
                "singular_cond": _num, "closure": {"enum": ["projected", "evanescent"]},
                "p_max_check": {"type": "boolean"},
                "n_theta": {"type": "integer", "minimum": 3},
            },
        },
        "incidence": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "number", "exclusiveMinimum": 0},
                "k_sweep": {"type": ["array", "null"],
                            "items": {"type": "number", "exclusiveMinimum": 0}},
                "theta0_deg": {"type": "array", "items": _num, "minItems": 1},
                "side": {"enum": ["left", "right", "both"]},
            },
        },
        "delta": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"z": _complex,
                           "r0": {"type": "array", "items": _num, "minItems": 2,
                                  "maxItems": 2},
                           "n_prop": {"type": "integer", "minimum": 2}},
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "margin": _num, "beta": _opt_num, "beta_prime": _opt_num,
                "envelope": {"enum": ["harmonic", "gaussian"]}, "window": _opt_num,
                "slab_width": {"type": "number", "exclusiveMinimum": 0}, "amp": _complex,
                "tol_inv": _num, "n_angles": {"type": "integer", "minimum": 1},
                "scan_k": {"type": ["array", "null"], "items": _num},
                "control_strengths": {"type": "array", "items": _num, "minItems": 2},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"h": _opt_num,
                           "y_range": {"type": ["array", "null"], "items": _num},
                           "n_terms": {"type": "integer", "minimum": 1},
                           "series_tol": _num},
        },
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"dir": {"type": "string"}}},
    },
}


def parse_complex(value):
    """``3``, ``"4+0i"``, ``"2-1j"`` or ``[re, im]``."""
    if isinstance(value, (list, tuple)):
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError as exc:
            raise ValidationError(f"cannot parse complex number {value!r}") from exc
    return complex(value)


def _merge(base, extra):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "potential":
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config invalid at {path}: {exc.message}") from exc


def materialize(cfg):
    """Validate the user config and return it with every default filled in."""
    validate(cfg)
    full = _merge(DEFAULTS, cfg)
    validate(full)
    return full


def set_path(cfg, dotted, value):
    node = cfg
    keys = dotted.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def config_hash(cfg):
    """Git-style blob hash of the canonical JSON form of the config."""
    data = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# ---------------------------------------------------------------------------
# potentials from JSON


def _profile_args(d):
    params = {k: v for k, v in d.items() if k != "shape"}
    if "amp" in params:
        params["amp"] = parse_complex(params["amp"])
    return d["shape"], params


def build_potential(desc):
    kind = desc["type"]
    if kind == "zero":
        return ZeroPotential(tuple(desc.get("support", (-0.5, 0.5))))
    if kind == "delta":
        return Delta2D(parse_complex(desc["z"]), float(desc.get("a", 0.0)), float(desc.get("b", 0.0)))
    if kind == "grid-sampled":
        table = np.asarray(desc["table_re"], dtype=float) + 1j * np.asarray(
            desc.get("table_im", np.zeros_like(desc["table_re"])), dtype=float)
        return GridSampled(desc["x"], desc["K"], table, desc.get("policy", "zero"))
    axial = AxialProfile(*_profile_args(desc["axial"]))
    if kind == "separable":
        return SeparableY(axial, TransverseProfile(*_profile_args(desc["transverse"])))
    if kind == "harmonic":
        lines = tuple((float(K), parse_complex(c)) for K, c in desc["lines"])
        return HarmonicY(axial, LineProfile(lines))
    if kind == "fourier-shifted":
        return FourierShifted(axial, float(desc["beta"]), float(desc["beta_prime"]),
                              desc.get("window"))
    raise ValidationError(f"unknown potential type {kind!r}")

"""Experiment configuration: JSON schema, defaults and semantic checks."""

from __future__ import annotations

import copy
import json

import jsonschema

SCHEMA_VERSION = 1

MODELS = ("gt", "transport", "weak", "boltzmann", "abstract")


class ConfigError(ValueError):
    """Configuration rejected; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_int_pos = {"type": "integer", "minimum": 1}
_int_nonneg = {"type": "integer", "minimum": 0}

SIGMA_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["profile", "value"],
         "properties": {"profile": {"const": "constant"}, "value": _nonneg}},
        {"type": "object", "additionalProperties": False, "required": ["profile"],
         "properties": {"profile": {"const": "cosine-bump"}, "amplitude": _pos}},
        {"type": "object", "additionalProperties": False, "required": ["profile", "mean", "amplitude"],
         "properties": {"profile": {"const": "cosine"}, "mean": _nonneg, "amplitude": _num}},
        {"type": "object", "additionalProperties": False, "required": ["profile", "interval"],
         "properties": {"profile": {"const": "indicator"},
                        "interval": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                        "level": _pos}},
        {"type": "object", "additionalProperties": False, "required": ["profile", "samples"],
         "properties": {"profile": {"const": "custom"},
                        "samples": {"type": "array", "items": _nonneg, "minItems": 1}}},
    ]
}

_common = {
    "schema_version": {"const": SCHEMA_VERSION},
    "model": {"enum": list(MODELS)},
    "seed": _int_nonneg,
    "output_prefix": {"type": "string", "minLength": 1},
}

_data = {"type": "object", "additionalProperties": False,
         "properties": {"kind": {"enum": ["random", "cosine"]}, "decay": _nonneg}}

PROPERTIES = {
    "gt": {
        "N": _int_pos, "dt": _pos, "T": _pos, "sigma": SIGMA_SCHEMA, "sample_every": _int_pos,
        "fit_window": {"type": "array", "items": _nonneg, "minItems": 2, "maxItems": 2},
        "observability_T": _int_pos, "initial": _data,
    },
    "transport": {
        "d": {"enum": [1, 2]}, "N": _int_pos, "n_v": _int_pos, "dt": _pos, "T": _pos,
        "sigma": SIGMA_SCHEMA, "sample_every": _int_pos, "observability_T": _pos,
        "initial": _data,
    },
    "weak": {
        "d": {"enum": [1, 2]}, "N": _int_pos, "n_v": _int_pos, "dt": _pos, "T": _pos,
        "sigma": SIGMA_SCHEMA, "epsilon": _pos, "sample_interval": _pos,
        "k": {"type": "array", "items": _pos, "minItems": 3, "maxItems": 3},
        "initial": _data,
    },
    "boltzmann": {
        "alpha": _num, "beta": _num, "kernel": {"enum": ["power", "angular", "noncutoff"]},
        "vmax": _pos, "h": _pos, "n_omega": _int_pos, "N": _int_pos,
        "interpolation": {"enum": ["bilinear", "biquadratic"]},
        "dt": _pos, "T": _pos, "sample_interval": _pos, "observability_T": _pos,
        "eps_sweep": {"type": "array", "items": _pos},
        "k": {"type": "array", "items": _pos, "minItems": 3, "maxItems": 3},
    },
    "abstract": {
        "m": {"type": "integer", "minimum": 1, "maximum": 64}, "trials": _int_pos,
        "T": _pos, "dt": _pos, "T0": _pos, "horizon": _pos,
    },
}

DEFAULTS = {
    "gt": {"N": 16, "dt": 1e-3, "T": 20.0, "sigma": {"profile": "constant", "value": 1.0},
           "sample_every": 100, "fit_window": None, "observability_T": 2,
           "initial": {"kind": "random", "decay": 1.0}},
    "transport": {"d": 1, "N": 8, "n_v": 9, "dt": 1e-2, "T": 20.0,
                  "sigma": {"profile": "constant", "value": 1.0}, "sample_every": 10,
                  "observability_T": 16.0, "initial": {"kind": "random", "decay": 1.0}},
    "weak": {"d": 1, "N": 16, "n_v": 9, "dt": 1e-2, "T": 200.0,
             "sigma": {"profile": "cosine", "mean": 1.0, "amplitude": 0.5},
             "epsilon": 0.5, "sample_interval": 2.0, "k": [4.0, 0.4, 11.0],
             "initial": {"kind": "random", "decay": 1.0}},
    "boltzmann": {"alpha": 0.5, "beta": 0.5, "kernel": "power", "vmax": 6.0, "h": 0.5,
                  "n_omega": 16, "N": 4, "interpolation": "biquadratic", "dt": 0.05,
                  "T": 8.0, "sample_interval": 0.2, "observability_T": 8.0,
                  "eps_sweep": [1.0, 0.5, 0.25, 0.125], "k": [3.0, 0.5, 4.0]},
    "abstract": {"m": 6, "trials": 20, "T": 5.0, "dt": 1e-3, "T0": 2.0, "horizon": 20.0},
}


def schema_for(model: str) -> dict:
    props = dict(_common)
    props.update(PROPERTIES[model])
    return {"type": "object", "additionalProperties": False,
            "required": ["schema_version", "model"], "properties": props}


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return "/".join(parts) if parts else "<root>"


def resolve(raw: dict, seed: int | None = None, prefix: str | None = None) -> dict:
    """Validate ``raw`` and fill in defaults; raise ConfigError on any problem."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    model = raw.get("model")
    if model not in MODELS:
        raise ConfigError("model", f"must be one of {', '.join(MODELS)}")
    validator = jsonschema.Draft202012Validator(schema_for(model))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(_path(e), e.message)
    cfg = copy.deepcopy(DEFAULTS[model])
    cfg.update(copy.deepcopy(raw))
    cfg.setdefault("seed", 0)
    cfg.setdefault("output_prefix", model)
    if seed is not None:
        cfg["seed"] = seed
    if prefix is not None:
        cfg["output_prefix"] = prefix
    _semantic(cfg)
    return cfg


def _semantic(cfg: dict):
    model = cfg["model"]
    sig = cfg.get("sigma")
    if sig is not None:
        if sig["profile"] == "cosine" and sig["mean"] < abs(sig["amplitude"]):
            raise ConfigError("sigma/amplitude", "mean must be at least |amplitude| so sigma >= 0")
        if sig["profile"] == "indicator":
            a, b = sig["interval"]
            if not 0 <= a < b <= 1:
                raise ConfigError("sigma/interval", "need 0 <= a < b <= 1")
        if sig["profile"] == "custom":
            n = len(sig["samples"])
            if cfg.get("d", 1) != 1 or n % 2 == 0:
                raise ConfigError("sigma/samples", "custom samples need d = 1 and an odd count")
    if model in ("gt", "transport", "weak") and cfg["dt"] > cfg["T"]:
        raise ConfigError("dt", "time step exceeds the horizon")
    if model == "gt" and cfg["fit_window"] is not None:
        lo, hi = cfg["fit_window"]
        if not lo < hi <= cfg["T"]:
            raise ConfigError("fit_window", "need lo < hi <= T")
    if model == "weak":
        k1, k2, k3 = cfg["k"]
        eps = cfg["epsilon"]
        if not -2 * eps * k1 + k2 * k3 > 0:
            raise ConfigError("k", f"-2 eps k1 + k2 k3 = {-2 * eps * k1 + k2 * k3:g} must be > 0")
        if not k2 < eps:
            raise ConfigError("k", f"k2 = {k2:g} must be below epsilon = {eps:g}")
        ratio = cfg["sample_interval"] / cfg["dt"]
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("sample_interval", "must be a multiple of dt")
    if model == "boltzmann":
        a, b = cfg["alpha"], cfg["beta"]
        if not a > -1:
            raise ConfigError("alpha", "must exceed 1 - d = -1")
        if not -1 < b <= a + 2.0 / 3.0:
            raise ConfigError("beta", "must lie in (-1, alpha + 2/3]")
        n = 2 * cfg["vmax"] / cfg["h"]
        if abs(n - round(n)) > 1e-9:
            raise ConfigError("h", "2 vmax / h must be an integer")
        if a < 0:
            k1, k2, k3 = cfg["k"]
            if not a * k1 + k2 * k3 > 0:
                raise ConfigError("k", "alpha k1 + k2 k3 must be > 0")
        ratio = cfg["sample_interval"] / cfg["dt"]
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("sample_interval", "must be a multiple of dt")
    if model == "abstract" and cfg["horizon"] < 2 * cfg["T0"]:
        raise ConfigError("horizon", "must cover at least 2 * T0")


def load(path: str, seed: int | None = None, prefix: str | None = None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return resolve(raw, seed, prefix)

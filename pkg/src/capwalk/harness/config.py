"""Experiment configurations: typed parameter schemas, validation and round trips."""

import difflib
import json
import math
from dataclasses import dataclass, field

from .. import geometry
from ..errors import ConfigError
from . import grammar


@dataclass(frozen=True)
class Param:
    """One schema entry. ``kind`` selects the parser and formatter."""

    kind: str
    default: object
    help: str = ""
    choices: tuple = ()
    positive: bool = False

    def parse(self, key, value):
        try:
            out = _PARSERS[self.kind](value)
        except ConfigError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot read {value!r} as {self.kind}") from None
        if self.choices and out not in self.choices:
            raise ConfigError(f"{key} must be one of {list(self.choices)}, got {out!r}")
        if self.positive:
            vals = out if isinstance(out, tuple) else (out,)
            if not all(v > 0 for v in vals):
                raise ConfigError(f"{key} must be positive, got {value!r}")
        return out

    def dump(self, value):
        return _DUMPERS[self.kind](value)


def _to_int(v):
    if isinstance(v, bool):
        raise ValueError
    if isinstance(v, str):
        v = float(v)
    if float(v) != int(v):
        raise ValueError
    return int(v)


def _to_float(v):
    return float(v)


def _to_optional_float(v):
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none", "auto")):
        return None
    return float(v)


def _to_floats(v):
    if isinstance(v, str):
        return grammar.parse_point(v)
    return tuple(float(x) for x in v)


def _to_ints(v):
    return tuple(_to_int(x) for x in (grammar.parse_point(v) if isinstance(v, str) else v))


def _to_bool(v):
    if isinstance(v, bool):
        return v
    text = str(v).strip().lower()
    if text in ("on", "true", "yes", "1"):
        return True
    if text in ("off", "false", "no", "0"):
        return False
    raise ValueError


def _to_set(v):
    return grammar.parse_set(v) if isinstance(v, str) else v


def _to_point(v):
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none")):
        return None
    return grammar.parse_point(v) if isinstance(v, str) else tuple(float(x) for x in v)


def _float_out(x):
    return "inf" if math.isinf(x) and x > 0 else x


_PARSERS = {
    "int": _to_int,
    "float": _to_float,
    "float?": _to_optional_float,
    "floats": _to_floats,
    "ints": _to_ints,
    "bool": _to_bool,
    "str": str,
    "set": _to_set,
    "point": _to_point,
}

_DUMPERS = {
    "int": int,
    "float": _float_out,
    "float?": lambda x: None if x is None else _float_out(x),
    "floats": lambda xs: [_float_out(x) for x in xs],
    "ints": list,
    "bool": bool,
    "str": str,
    "set": grammar.serialize_set,
    "point": lambda p: None if p is None else list(p),
}

COMMON = {
    "seed": Param("int", 0, "master seed"),
    "workers": Param("int", 1, "worker threads for trial loops", positive=True),
}


def nearest_key(key, valid):
    match = difflib.get_close_matches(key, list(valid), n=1, cutoff=0.0)
    return match[0] if match else None


@dataclass
class ExperimentConfig:
    """A named experiment with its manifold, typed parameters and output path."""

    name: str
    manifold: geometry.ManifoldSpec
    params: dict = field(default_factory=dict)
    out: str = None

    def to_dict(self):
        from .experiments import schema_for

        schema = schema_for(self.name)
        return {
            "name": self.name,
            "manifold": grammar.serialize_manifold(self.manifold),
            "params": {k: schema[k].dump(v) for k, v in sorted(self.params.items())},
            "out": self.out,
        }

    def serialize(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def make_config(name, manifold=None, params=None, out=None):
    """Validate raw parameters against the experiment schema and fill defaults.

    Unknown keys are rejected with the nearest valid key in the message.
    """
    from .experiments import get_experiment, schema_for

    exp = get_experiment(name)
    schema = schema_for(name)
    raw = dict(params or {})
    for key in raw:
        if key not in schema:
            hint = nearest_key(key, schema)
            raise ConfigError(f"unknown parameter {key!r} for {name!r}; did you mean {hint!r}?")
    if manifold is None:
        manifold = exp.manifold
    if isinstance(manifold, str):
        manifold = grammar.parse_manifold(manifold)
    typed = {}
    for key, spec in schema.items():
        typed[key] = spec.parse(key, raw[key]) if key in raw else spec.default
    cfg = ExperimentConfig(name, manifold, typed, out)
    if exp.validate is not None:
        exp.validate(cfg)
    return cfg


def parse_config(text):
    """Inverse of ``ExperimentConfig.serialize``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    unknown = set(data) - {"name", "manifold", "params", "out"}
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    return make_config(data["name"], data.get("manifold"), data.get("params"), data.get("out"))

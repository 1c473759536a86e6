"""Text forms of manifolds, sets and points used by configs and the CLI.

    manifold  euclidean:n=5 | eh-product:n=6,a=0.05
    set       ball:c=(4,0,0,0,0),r=1 | shell:c=(..),r=.. | annulus:c=(..),r_in=..,r_out=..
              bolt:r=1.2 | union:[<set>;<set>;...] | product:[<set>;slab:c=(..),w=..]
    point     (x1,x2,...)

Numbers use Python float syntax (``inf`` included). ``serialize_*`` emits the
canonical form, and parsing it returns an equal object.
"""

import re

from .. import geometry
from ..errors import ConfigError

_NAME = re.compile(r"[a-z][a-z_-]*")


def _num(text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _fmt_tuple(xs):
    return "(" + ",".join(_fmt(x) for x in xs) + ")"


def parse_point(text):
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty coordinate tuple")
    return tuple(_num(p) for p in parts)


def serialize_point(coords):
    return _fmt_tuple(coords)


def _split_top(text, sep):
    """Split on ``sep`` outside brackets and parentheses."""
    out, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"unbalanced brackets in {text!r}")
        elif ch == sep and depth == 0:
            out.append(text[start:i])
            start = i + 1
    if depth != 0:
        raise ConfigError(f"unbalanced brackets in {text!r}")
    out.append(text[start:])
    return out


def _head(text):
    kind, sep, body = text.strip().partition(":")
    if not sep or not _NAME.fullmatch(kind):
        raise ConfigError(f"expected '<kind>:<fields>', got {text!r}")
    return kind, body.strip()


def _fields(body, required, where):
    fields = {}
    for item in _split_top(body, ","):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value in {where!r}, got {item!r}")
        fields[key.strip()] = value.strip()
    unknown = set(fields) - set(required)
    missing = set(required) - set(fields)
    if unknown or missing:
        raise ConfigError(f"{where}: expected fields {sorted(required)}, got {sorted(fields)}")
    return fields


def parse_manifold(text):
    kind, body = _head(text)
    if kind == "euclidean":
        f = _fields(body, ["n"], kind)
        return geometry.ManifoldSpec.euclidean(int(_num(f["n"])))
    if kind == "eh-product":
        f = _fields(body, ["n", "a"], kind)
        return geometry.ManifoldSpec.eguchi_hanson(int(_num(f["n"])), _num(f["a"]))
    raise ConfigError(f"unknown manifold kind {kind!r}; expected 'euclidean' or 'eh-product'")


def serialize_manifold(m):
    if m.is_flat:
        return f"euclidean:n={m.dim}"
    return f"eh-product:n={m.dim},a={_fmt(m.bolt_scale)}"


def _members(body, kind):
    if not (body.startswith("[") and body.endswith("]")):
        raise ConfigError(f"{kind} expects [<set>;<set>...]")
    return [p for p in _split_top(body[1:-1], ";") if p.strip()]


def parse_set(text):
    kind, body = _head(text)
    if kind in ("ball", "shell"):
        f = _fields(body, ["c", "r"], kind)
        cls = geometry.Ball if kind == "ball" else geometry.SphereShell
        s = cls(parse_point(f["c"]), _num(f["r"]))
    elif kind == "annulus":
        f = _fields(body, ["c", "r_in", "r_out"], kind)
        s = geometry.Annulus(parse_point(f["c"]), _num(f["r_in"]), _num(f["r_out"]))
    elif kind == "bolt":
        s = geometry.BoltSublevel(_num(_fields(body, ["r"], kind)["r"]))
    elif kind == "union":
        s = geometry.FiniteUnion(tuple(parse_set(p) for p in _members(body, kind)))
    elif kind == "product":
        parts = _members(body, kind)
        if len(parts) != 2:
            raise ConfigError("product expects [<set>;slab:c=(..),w=..]")
        slab_kind, slab_body = _head(parts[1])
        if slab_kind != "slab":
            raise ConfigError("the second product factor must be a slab")
        f = _fields(slab_body, ["c", "w"], "slab")
        s = geometry.Product(parse_set(parts[0]), geometry.Slab(parse_point(f["c"]), _num(f["w"])))
    else:
        raise ConfigError(f"unknown set kind {kind!r}")
    try:
        geometry._check_set(s)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return s


def serialize_set(s):
    if isinstance(s, geometry.Ball):
        return f"ball:c={_fmt_tuple(s.center)},r={_fmt(s.radius)}"
    if isinstance(s, geometry.SphereShell):
        return f"shell:c={_fmt_tuple(s.center)},r={_fmt(s.radius)}"
    if isinstance(s, geometry.Annulus):
        return f"annulus:c={_fmt_tuple(s.center)},r_in={_fmt(s.r_in)},r_out={_fmt(s.r_out)}"
    if isinstance(s, geometry.BoltSublevel):
        return f"bolt:r={_fmt(s.r_star)}"
    if isinstance(s, geometry.FiniteUnion):
        return "union:[" + ";".join(serialize_set(m) for m in s.members) + "]"
    if isinstance(s, geometry.Product):
        slab = s.slab
        return f"product:[{serialize_set(s.base)};slab:c={_fmt_tuple(slab.center)},w={_fmt(slab.half_width)}]"
    raise TypeError(f"unknown set type: {s!r}")

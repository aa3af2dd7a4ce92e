"""JSON run configurations.

Numbers may be given as JSON numbers or as strings holding a small arithmetic
expression over ``pi``, ``sqrt(.)`` and ``log(.)`` (e.g. ``"1/sqrt(3)"``,
``"pi - 6*sqrt(3)"``), evaluated once at parse time.
"""

import ast
from dataclasses import dataclass, field
import hashlib
import json
import math
import operator
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, TubeFormulaError
from .geometry import (BUILTIN_GENERATORS, GeneratorProfile, Polygon, TabulatedLambda,
                       steiner_coefficients)
from .system import (SelfSimilarSystem, Similitude, hexagram_tiling_hull,
                     hexagram_tiling_system)

MODES = ("dimensions", "polygon", "tube", "compare", "conditions")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": math.sqrt, "log": math.log}
_CONSTS = {"pi": math.pi}

BUILTIN_SYSTEMS = {
    "hexagram_tiling": (hexagram_tiling_system, hexagram_tiling_hull),
}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _CONSTS:
        return _CONSTS[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression element")


def evaluate_number(value, path):
    """JSON number or whitelisted expression string -> float."""
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = float(_eval_node(ast.parse(value.strip(), mode="eval")))
        except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
            raise ConfigError(path, f"cannot evaluate {value!r}: {exc}") from None
    else:
        raise ConfigError(path, f"expected a number or expression string, got {type(value).__name__}")
    if not math.isfinite(out):
        raise ConfigError(path, f"value {value!r} is not finite")
    return out


def _get(obj, key, path, default=...):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return obj[key]


def _number(obj, key, path, default=...):
    sub = f"{path}.{key}" if path else key
    raw = _get(obj, key, path, default)
    if raw is default and default is not ...:
        return default
    return evaluate_number(raw, sub)


def _int(obj, key, path, default=..., minimum=None):
    sub = f"{path}.{key}" if path else key
    raw = _get(obj, key, path, default)
    if raw is None or (raw is default and default is not ...):
        return raw
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(sub, f"expected an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(sub, f"must be >= {minimum}, got {raw}")
    return raw


def _points(raw, path):
    if not isinstance(raw, list) or len(raw) < 3:
        raise ConfigError(path, "expected a list of at least three [x, y] pairs")
    pts = []
    for k, p in enumerate(raw):
        if not isinstance(p, list) or len(p) != 2:
            raise ConfigError(f"{path}[{k}]", "expected an [x, y] pair")
        pts.append([evaluate_number(p[0], f"{path}[{k}][0]"),
                    evaluate_number(p[1], f"{path}[{k}][1]")])
    return pts


# --- system -----------------------------------------------------------------

def _parse_map(raw, path):
    if isinstance(raw, (int, float, str)) and not isinstance(raw, bool):
        raw = {"ratio": raw}
    ratio = _number(raw, "ratio", path)
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"{path}.ratio", f"ratio must lie in (0, 1), got {ratio!r}")
    spec = {"ratio": ratio}
    if "translate" in raw:
        t = _get(raw, "translate", path)
        if not isinstance(t, list) or len(t) != 2:
            raise ConfigError(f"{path}.translate", "expected an [x, y] pair")
        spec["translate"] = [evaluate_number(t[0], f"{path}.translate[0]"),
                             evaluate_number(t[1], f"{path}.translate[1]")]
        spec["rotation_deg"] = _number(raw, "rotation_deg", path, 0.0)
        reflect = _get(raw, "reflect", path, False)
        if not isinstance(reflect, bool):
            raise ConfigError(f"{path}.reflect", "expected true or false")
        spec["reflect"] = reflect
    return spec


def _parse_system(raw, path="system"):
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    if "builtin" in raw:
        name = raw["builtin"]
        if name not in BUILTIN_SYSTEMS:
            raise ConfigError(f"{path}.builtin", f"unknown builtin system {name!r}; "
                              f"available: {sorted(BUILTIN_SYSTEMS)}")
        return {"builtin": name}
    d = _int(raw, "d", path, 2, minimum=1)
    spec = {"d": d}
    if "uniform" in raw:
        u = raw["uniform"]
        count = _int(u, "count", f"{path}.uniform", minimum=2)
        ratio = _number(u, "ratio", f"{path}.uniform")
        if not 0.0 < ratio < 1.0:
            raise ConfigError(f"{path}.uniform.ratio", f"ratio must lie in (0, 1), got {ratio!r}")
        spec["maps"] = [{"ratio": ratio}] * count
    else:
        maps = _get(raw, "maps", path)
        if not isinstance(maps, list) or len(maps) < 2:
            raise ConfigError(f"{path}.maps", "expected a list of at least two maps")
        spec["maps"] = [_parse_map(m, f"{path}.maps[{k}]") for k, m in enumerate(maps)]
    if sum(m["ratio"] ** d for m in spec["maps"]) >= 1.0:
        raise ConfigError(f"{path}.maps", "sum of ratio^d must be below 1")
    if "hull" in raw:
        spec["hull"] = _points(raw["hull"], f"{path}.hull")
    return spec


def build_system(spec):
    """(SelfSimilarSystem, hull polygon or None) from a normalised system spec."""
    if "builtin" in spec:
        make, hull = BUILTIN_SYSTEMS[spec["builtin"]]
        return make(), hull()
    maps = []
    for m in spec["maps"]:
        if "translate" in m:
            maps.append(Similitude(m["ratio"], math.radians(m["rotation_deg"]),
                                   m["reflect"], m["translate"]))
        else:
            maps.append(Similitude(m["ratio"]))
    hull = Polygon(spec["hull"]) if "hull" in spec else None
    return SelfSimilarSystem(spec["d"], tuple(maps)), hull


# --- generator --------------------------------------------------------------

def _parse_lambda(raw, path):
    u = raw.get("u") if isinstance(raw, dict) else None
    v = raw.get("values") if isinstance(raw, dict) else None
    if not isinstance(u, list) or not isinstance(v, list) or len(u) != len(v):
        raise ConfigError(path, "expected {\"u\": [...], \"values\": [...]} of equal length")
    return {"u": [evaluate_number(x, f"{path}.u[{k}]") for k, x in enumerate(u)],
            "values": [evaluate_number(x, f"{path}.values[{k}]") for k, x in enumerate(v)]}


def _parse_generator(raw, path="generator"):
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    if "builtin" in raw:
        name = raw["builtin"]
        if name not in BUILTIN_GENERATORS:
            raise ConfigError(f"{path}.builtin", f"unknown builtin generator {name!r}; "
                              f"available: {sorted(BUILTIN_GENERATORS)}")
        return {"builtin": name}
    spec = {}
    if "polygon" in raw:
        spec["polygon"] = _points(raw["polygon"], f"{path}.polygon")
        for key in ("h", "g"):
            if key in raw:
                spec[key] = _number(raw, key, path)
    elif "profile" in raw:
        p = raw["profile"]
        pp = f"{path}.profile"
        spec["profile"] = {
            "d": _int(p, "d", pp, minimum=1),
            "kappa": [evaluate_number(k, f"{pp}.kappa[{i}]")
                      for i, k in enumerate(_get(p, "kappa", pp))],
            "h": _number(p, "h", pp),
            "g": _number(p, "g", pp),
        }
        if "lambda" in p:
            spec["profile"]["lambda"] = _parse_lambda(p["lambda"], f"{pp}.lambda")
    else:
        raise ConfigError(path, "expected one of 'builtin', 'polygon' or 'profile'")
    if "lambda" in raw and "polygon" in raw:
        spec["lambda"] = _parse_lambda(raw["lambda"], f"{path}.lambda")
    return spec


def build_generator(spec, path="generator"):
    """(Polygon or None, GeneratorProfile or None) from a normalised generator spec."""
    try:
        if "builtin" in spec:
            return BUILTIN_GENERATORS[spec["builtin"]]()
        if "profile" in spec:
            p = spec["profile"]
            lam = p.get("lambda")
            lam = TabulatedLambda(np.array(lam["u"]), np.array(lam["values"])) if lam else None
            return None, GeneratorProfile(p["d"], tuple(p["kappa"]), p["h"], p["g"], lam)
        poly = Polygon(spec["polygon"])
        if "h" not in spec:
            return poly, None
        k1, k0 = steiner_coefficients(poly)
        lam = spec.get("lambda")
        lam = TabulatedLambda(np.array(lam["u"]), np.array(lam["values"])) if lam else None
        profile = GeneratorProfile(2, (k0, k1, -poly.area), spec["h"], spec.get("g", spec["h"]),
                                   lam, name="polygon")
        return poly, profile
    except (TubeFormulaError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None


# --- run config -------------------------------------------------------------

def _parse_eps(raw, path="eps"):
    if isinstance(raw, dict) and "values" in raw:
        raw, path = raw["values"], f"{path}.values"
    if isinstance(raw, list):
        if not raw:
            raise ConfigError(path, "expected at least one value")
        return {"values": [evaluate_number(v, f"{path}[{k}]") for k, v in enumerate(raw)]}
    lo = _number(raw, "min", path)
    hi = _number(raw, "max", path)
    count = _int(raw, "count", path, 1, minimum=1)
    spacing = _get(raw, "spacing", path, "linear")
    if spacing not in ("linear", "log"):
        raise ConfigError(f"{path}.spacing", "expected 'linear' or 'log'")
    if not 0 < lo <= hi:
        raise ConfigError(path, f"need 0 < min <= max, got min={lo!r}, max={hi!r}")
    if count > 1 and lo == hi:
        raise ConfigError(path, "min == max with count > 1 repeats a grid point")
    return {"min": lo, "max": hi, "count": count, "spacing": spacing}


def eps_values(spec):
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    lo, hi, n = spec["min"], spec["max"], spec["count"]
    if n == 1:
        return [lo]
    if spec["spacing"] == "log":
        return [float(v) for v in np.geomspace(lo, hi, n)]
    return [float(v) for v in np.linspace(lo, hi, n)]


@dataclass(frozen=True)
class RunConfig:
    mode: str
    system: SelfSimilarSystem = None
    hull: Polygon = None
    polygon: Polygon = None
    profile: GeneratorProfile = None
    profiles: tuple = ()
    eps: tuple = ()
    truncation: tuple = ()
    window: float = None
    resolution: int = 1024
    out_dir: str = "out"
    svg: bool = False
    seed: int = 0
    spec: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self):
        """Normalised JSON-ready form; parsing it again gives the same config."""
        return json.loads(json.dumps(self.spec))

    @property
    def digest(self):
        text = json.dumps(self.spec, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


_NEEDS = {
    "dimensions": ("system",),
    "polygon": ("generator", "eps"),
    "tube": ("system", "generator", "eps"),
    "compare": ("system", "generator", "eps"),
    "conditions": ("system",),
}


def parse_config(raw):
    """Validate a decoded JSON object into a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be a JSON object")
    mode = _get(raw, "mode", "")
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {MODES}, got {mode!r}")
    for key in _NEEDS[mode]:
        _get(raw, key, "")
    spec = {"mode": mode}
    system = hull = polygon = profile = None
    if "system" in raw:
        spec["system"] = _parse_system(raw["system"])
        try:
            system, hull = build_system(spec["system"])
        except (TubeFormulaError, ValueError) as exc:
            raise ConfigError("system", str(exc)) from None
    profiles = ()
    if "generator" in raw:
        gen = raw["generator"]
        if isinstance(gen, list):
            if not gen:
                raise ConfigError("generator", "expected at least one generator")
            spec["generator"] = [_parse_generator(g, f"generator[{k}]") for k, g in enumerate(gen)]
            built = [build_generator(g, f"generator[{k}]") for k, g in enumerate(spec["generator"])]
        else:
            spec["generator"] = _parse_generator(gen)
            built = [build_generator(spec["generator"])]
        polygon, profile = built[0]
        profiles = tuple(p for _, p in built)
    eps = ()
    if "eps" in raw:
        spec["eps"] = _parse_eps(raw["eps"])
        eps = tuple(eps_values(spec["eps"]))
    if mode in ("tube", "compare"):
        if any(p is None for p in profiles):
            raise ConfigError("generator", "this mode needs a generator profile (polygon generators need 'h')")
        if any(p.d != system.d for p in profiles):
            raise ConfigError("generator", f"generator dimension differs from system dimension {system.d}")
        h = min(p.h for p in profiles)
        bad = [e for e in eps if not e < h]
        if bad:
            raise ConfigError("eps", f"values {bad} are not below h = {h!r}")
    if mode == "polygon" and (polygon is None or len(profiles) != 1):
        raise ConfigError("generator", "polygon mode needs a single polygon generator")
    if mode == "conditions":
        if hull is None:
            raise ConfigError("system.hull", "conditions mode needs a hull polygon")
        if not system.planar:
            raise ConfigError("system.maps", "conditions mode needs planar maps with 'translate'")

    trunc = raw.get("truncation", 100)
    trunc_list = trunc if isinstance(trunc, list) else [trunc]
    if not trunc_list:
        raise ConfigError("truncation", "expected at least one value")
    for k, n in enumerate(trunc_list):
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ConfigError(f"truncation[{k}]" if isinstance(trunc, list) else "truncation",
                              f"expected a non-negative integer, got {n!r}")
    spec["truncation"] = trunc
    window = None
    if raw.get("window") is not None:
        window = _number(raw, "window", "")
        if window <= 0:
            raise ConfigError("window", "must be positive")
        spec["window"] = window
    resolution = _int(raw, "resolution", "", 1024, minimum=64)
    spec["resolution"] = resolution
    out = raw.get("output", {})
    out_dir = _get(out, "dir", "output", "out")
    svg = _get(out, "svg", "output", False)
    if not isinstance(out_dir, str) or not isinstance(svg, bool):
        raise ConfigError("output", "expected {\"dir\": str, \"svg\": bool}")
    spec["output"] = {"dir": out_dir, "svg": svg}
    seed = _int(raw, "seed", "", 0)
    spec["seed"] = seed
    return RunConfig(mode=mode, system=system, hull=hull, polygon=polygon, profile=profile,
                     profiles=profiles, eps=eps, truncation=tuple(trunc_list), window=window,
                     resolution=resolution, out_dir=out_dir, svg=svg, seed=seed, spec=spec)


def bundled_configs():
    return sorted(p.name[:-5] for p in resources.files("tubeformula.configs").iterdir()
                  if p.name.endswith(".json"))


def read_config(source):
    """Decoded JSON from a file path or a bundled config name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        res = resources.files("tubeformula.configs") / f"{source}.json"
        if not res.is_file():
            raise ConfigError("--config", f"no such file or bundled config: {source!r} "
                              f"(bundled: {', '.join(bundled_configs())})")
        text = res.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None


def load_config(source):
    return parse_config(read_config(source))

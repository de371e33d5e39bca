"""Scenario configuration: JSON parsing and validation.

The schema is documented in docs/config.md.  Every validation error carries
the path of the offending field, e.g. ``scenarios[2].manifold.n_cells``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .charge import ChargeDistribution, atom, from_density, zero
from .grid import (Boundary, DiscreteManifold, build_circle, build_polar_sphere, build_radial_ball,
                   build_sphere_latlong, build_symmetric_profile)
from .obstacle import SolverParams

TASKS = ("bal", "harmonic-ball", "geodesic-ball", "growth", "equilibrium",
         "quadrature", "radial", "diagnose")


class ConfigError(ValueError):
    """Malformed scenario configuration."""


def _need(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in d:
        raise ConfigError(f"{path}.{key}: required field missing")
    return d[key]


def _number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    return v


# -- named fields ---------------------------------------------------------

def _weight_fn(spec: str, path: str) -> Callable[[np.ndarray], np.ndarray]:
    """'1', 'r^k' or 'sin^k' (k a nonnegative integer)."""
    s = spec.replace(" ", "")
    if s == "1":
        return lambda r: np.ones_like(np.asarray(r, dtype=float))
    for base, fn in (("r", lambda r: np.asarray(r, dtype=float)), ("sin", np.sin)):
        if s == base:
            return fn
        if s.startswith(base + "^"):
            try:
                k = int(s[len(base) + 1:])
            except ValueError:
                break
            if k >= 0:
                return lambda r, fn=fn, k=k: fn(r) ** k
    raise ConfigError(f"{path}: unknown weight function {spec!r} (use '1', 'r^k' or 'sin^k')")


DENSITY_FIELDS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "one": lambda c: np.ones(len(c)),
    "cos_theta": lambda c: np.cos(c[:, 0] if np.ndim(c) == 2 else c),
    "cos_2pi_x": lambda c: np.cos(2 * math.pi * np.asarray(c)),
    "r": lambda c: np.asarray(c, dtype=float),
}


# -- manifolds and charges ------------------------------------------------

def build_manifold(spec: dict, path: str) -> DiscreteManifold:
    kind = _need(spec, "kind", path)
    try:
        if kind == "circle":
            return build_circle(_int(_need(spec, "n_nodes", path), f"{path}.n_nodes"))
        if kind == "sphere_latlong":
            return build_sphere_latlong(_int(_need(spec, "n_theta", path), f"{path}.n_theta"),
                                        _int(_need(spec, "n_phi", path), f"{path}.n_phi"))
        if kind == "polar_sphere":
            return build_polar_sphere(_int(_need(spec, "n_cells", path), f"{path}.n_cells"),
                                      _int(spec.get("dim", 2), f"{path}.dim"))
        if kind == "radial_ball":
            return build_radial_ball(_int(_need(spec, "n", path), f"{path}.n"),
                                     _number(_need(spec, "radius", path), f"{path}.radius"),
                                     _int(_need(spec, "n_cells", path), f"{path}.n_cells"),
                                     spec.get("boundary", "dirichlet"))
        if kind == "symmetric_profile":
            interval = _need(spec, "interval", path)
            if not (isinstance(interval, list) and len(interval) == 2):
                raise ConfigError(f"{path}.interval: expected [lo, hi]")
            return build_symmetric_profile(
                _weight_fn(str(_need(spec, "weight", path)), f"{path}.weight"),
                (_number(interval[0], f"{path}.interval[0]"), _number(interval[1], f"{path}.interval[1]")),
                _number(_need(spec, "surface_factor", path), f"{path}.surface_factor"),
                _int(_need(spec, "n_cells", path), f"{path}.n_cells"),
                spec.get("boundary", "closed"), spec.get("dimension"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.kind: unknown manifold kind {kind!r}")


def parse_location(m: DiscreteManifold, loc, path: str):
    if isinstance(loc, list):
        if len(loc) != 2:
            raise ConfigError(f"{path}: expected [theta, phi]")
        loc = (_number(loc[0], f"{path}[0]"), _number(loc[1], f"{path}[1]"))
    elif loc is not None:
        loc = _number(loc, path)
    try:
        if loc is not None:
            m.check_location(loc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return loc


def build_charge(m: DiscreteManifold, items, path: str) -> ChargeDistribution:
    if items is None:
        return zero(m)
    if not isinstance(items, list):
        raise ConfigError(f"{path}: expected a list of charge terms")
    total = zero(m)
    for k, item in enumerate(items):
        p = f"{path}[{k}]"
        if isinstance(item, dict) and "atom" in item:
            a = item["atom"]
            loc = parse_location(m, _need(a, "location", f"{p}.atom"), f"{p}.atom.location")
            w = _number(a.get("weight", 1.0), f"{p}.atom.weight")
            total = total + atom(m, loc, w)
        elif isinstance(item, dict) and "density" in item:
            d = item["density"]
            if isinstance(d, (int, float)) and not isinstance(d, bool):
                total = total + from_density(m, float(d))
            elif isinstance(d, dict):
                name = _need(d, "field", f"{p}.density")
                if name not in DENSITY_FIELDS:
                    raise ConfigError(f"{p}.density.field: unknown field {name!r}; "
                                      f"known: {sorted(DENSITY_FIELDS)}")
                scale = _number(d.get("scale", 1.0), f"{p}.density.scale")
                vals = DENSITY_FIELDS[name](m.node_coords)
                total = total + from_density(m, scale * np.asarray(vals, dtype=float))
            else:
                raise ConfigError(f"{p}.density: expected a number or {{field, scale}}")
        else:
            raise ConfigError(f"{p}: expected {{atom: ...}} or {{density: ...}}")
    return total


# -- scenarios ------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    task: str
    raw: dict
    params: SolverParams
    path: str
    checks: list = field(default_factory=list)


@dataclass
class Config:
    scenarios: list
    seed: int = 42
    output: Optional[str] = None


def _params(d: Optional[dict], base: Optional[dict], path: str) -> SolverParams:
    merged = dict(base or {})
    merged.update(d or {})
    try:
        return SolverParams.from_dict(merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_config(text: str, source: str = "<config>") -> Config:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if isinstance(doc, list):
        doc = {"scenarios": doc}
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be an object or a list of scenarios")
    unknown = set(doc) - {"scenarios", "seed", "solver", "output"}
    if unknown:
        raise ConfigError(f"{source}: unknown top-level keys {sorted(unknown)}")
    scen = doc.get("scenarios", [])
    if not isinstance(scen, list):
        raise ConfigError("scenarios: expected a list")
    base = doc.get("solver")
    out = []
    names = set()
    for k, s in enumerate(scen):
        p = f"scenarios[{k}]"
        if not isinstance(s, dict):
            raise ConfigError(f"{p}: expected an object")
        name = str(s.get("name", f"scenario_{k}"))
        if name in names:
            raise ConfigError(f"{p}.name: duplicate scenario name {name!r}")
        if "/" in name or name in (".", ".."):
            raise ConfigError(f"{p}.name: {name!r} is not a valid directory name")
        names.add(name)
        task = _need(s, "task", p)
        if task not in TASKS:
            raise ConfigError(f"{p}.task: unknown task {task!r}; expected one of {list(TASKS)}")
        checks = s.get("checks", [])
        if not isinstance(checks, list):
            raise ConfigError(f"{p}.checks: expected a list")
        out.append(Scenario(name, task, s, _params(s.get("solver"), base, f"{p}.solver"), p, checks))
    seed = doc.get("seed", 42)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed: expected a nonnegative integer")
    return Config(out, seed, doc.get("output"))


def load_config(path) -> Config:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))

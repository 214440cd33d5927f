"""Scenario configuration files.

Flat INI text with named sections, e.g.::

    [scenario]
    name = paper-disk
    model = disk
    legs = alpha, beta
    seed = 0

    [profile.alpha]
    center = 0, 0
    knots = 0, 0.1, 0.2, 0.8, 0.9, 1
    values = 2.5, 2, 1, 1, 0, 0

    [points]
    s = 0, 0

    [integrator]
    steps = 4096

    [sweep]
    center = 0.55, 0.05
    radius = 0.2
    deltas = 0, 1e-4, 1e-3

``slopes`` may be given per profile; otherwise shape-preserving slopes are
derived from the knots.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ValidationError
from .profiles import RadialProfile


@dataclass(frozen=True)
class ProfileEntry:
    profile: RadialProfile
    center: tuple


@dataclass(frozen=True)
class SweepSettings:
    center: tuple = (0.55, 0.05)
    radius: float = 0.2
    deltas: tuple = (0.0, 1e-4, 1e-3)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model: str = "disk"
    profiles: dict = field(default_factory=dict)  # name -> ProfileEntry, insertion ordered
    legs: tuple = ()
    weights: tuple | None = None
    points: dict = field(default_factory=dict)
    aux_points: dict = field(default_factory=dict)
    steps: int = 4096
    grid: int = 201
    sweep: SweepSettings = SweepSettings()
    seed: int = 0
    description: str = ""

    def __post_init__(self):
        if self.model not in ("disk", "annulus", "torus"):
            raise ValidationError(f"unknown model {self.model!r}")
        for leg in self.legs:
            if leg not in self.profiles:
                raise ValidationError(f"leg {leg!r} has no [profile.{leg}] section")
        pts = list(self.points.values())
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if tuple(pts[i]) == tuple(pts[j]):
                    raise ValidationError("marked points must be pairwise distinct")
        if self.weights is not None and len(self.weights) != len(self.legs):
            raise ValidationError("weights must match legs")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ValidationError(f"bad number list {text!r}") from exc


def _point(text: str) -> tuple:
    v = _floats(text)
    if len(v) != 2:
        raise ValidationError(f"expected 'x, y', got {text!r}")
    return v


def _num(x: float) -> str:
    return repr(float(x))


def _nums(xs) -> str:
    return ", ".join(_num(x) for x in xs)


def loads(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"unreadable config: {exc}") from exc
    if "scenario" not in cp:
        raise ValidationError("missing [scenario] section")
    sc = cp["scenario"]
    profiles = {}
    for sec in cp.sections():
        if sec.startswith("profile."):
            name = sec.split(".", 1)[1]
            s = cp[sec]
            knots, values = _floats(s["knots"]), _floats(s["values"])
            slopes = _floats(s["slopes"]) if "slopes" in s else None
            prof = RadialProfile.from_knots(knots, values, slopes, name=name)
            profiles[name] = ProfileEntry(prof, _point(s.get("center", "0, 0")))
    legs = tuple(v.strip() for v in sc.get("legs", "").split(",") if v.strip())
    weights = _floats(sc["weights"]) if "weights" in sc else None
    points = {k: _point(v) for k, v in cp["points"].items()} if "points" in cp else {}
    aux = {k: _point(v) for k, v in cp["aux_points"].items()} if "aux_points" in cp else {}
    integ = cp["integrator"] if "integrator" in cp else {}
    sw = cp["sweep"] if "sweep" in cp else {}
    sweep = SweepSettings(
        center=_point(sw["center"]) if "center" in sw else SweepSettings.center,
        radius=float(sw.get("radius", SweepSettings.radius)),
        deltas=_floats(sw["deltas"]) if "deltas" in sw else SweepSettings.deltas,
    )
    try:
        return ScenarioConfig(
            name=sc.get("name", "unnamed"),
            model=sc.get("model", "disk"),
            profiles=profiles,
            legs=legs,
            weights=weights,
            points=points,
            aux_points=aux,
            steps=int(integ.get("steps", 4096)),
            grid=int(integ.get("grid", 201)),
            sweep=sweep,
            seed=int(sc.get("seed", 0)),
            description=sc.get("description", ""),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc


def dumps(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["scenario"] = {"name": cfg.name, "model": cfg.model, "legs": ", ".join(cfg.legs), "seed": str(cfg.seed)}
    if cfg.weights is not None:
        cp["scenario"]["weights"] = _nums(cfg.weights)
    if cfg.description:
        cp["scenario"]["description"] = cfg.description
    for name, entry in cfg.profiles.items():
        p = entry.profile
        cp[f"profile.{name}"] = {
            "center": _nums(entry.center),
            "knots": _nums(p.knots),
            "values": _nums(p.values),
            "slopes": _nums(p.slopes),
        }
    cp["points"] = {k: _nums(v) for k, v in cfg.points.items()}
    if cfg.aux_points:
        cp["aux_points"] = {k: _nums(v) for k, v in cfg.aux_points.items()}
    cp["integrator"] = {"steps": str(cfg.steps), "grid": str(cfg.grid)}
    cp["sweep"] = {"center": _nums(cfg.sweep.center), "radius": _num(cfg.sweep.radius),
                   "deltas": _nums(cfg.sweep.deltas)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue().rstrip("\n") + "\n"


def load(path) -> ScenarioConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def builtin_names() -> list:
    return sorted(p.name[:-4] for p in resources.files("braidflow.configs").iterdir() if p.name.endswith(".ini"))


def load_builtin(name: str) -> ScenarioConfig:
    if name not in builtin_names():
        raise ValidationError(f"unknown scenario {name!r}; choose from {', '.join(builtin_names())}")
    return loads(resources.files("braidflow.configs").joinpath(f"{name}.ini").read_text(encoding="utf-8"))

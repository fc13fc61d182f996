"""Robot configuration files.

YAML documents with a schema version key::

    schema_version: 1
    name: robot_a
    tubes:                      # outermost first
      - {length_straight: 80, length_curved: 20, precurvature: 0.01, stiffness: 10, margin: 0}
      - ...
    gains:                      # optional, named PI gain sets
      nominal: {kp: [1, 2, 3], ki: [3, 2, 1]}
    defaults:                   # optional experiment defaults
      seed: 0
      count: 5000
      tolerance: 1.0e-9

``load_robot`` accepts a path or a bare name; bare names are looked up in the
directory given by ``BETASPACE_CONFIG_DIR`` and then among the robots shipped
with the package.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import BetaSpaceError, ConfigError
from .kinematics import CTCRModel, TubeSpec
from .transform import TubeSet

SCHEMA_VERSION = 1
CONFIG_DIR_ENV = "BETASPACE_CONFIG_DIR"
_TUBE_KEYS = ("length_straight", "length_curved", "precurvature", "stiffness")


@dataclass(frozen=True)
class GainSet:
    kp: tuple[float, ...]
    ki: tuple[float, ...]


@dataclass(frozen=True)
class RobotConfig:
    name: str
    model: CTCRModel
    gains: dict[str, GainSet] = field(default_factory=dict)
    defaults: dict = field(default_factory=dict)
    source: str = ""

    @property
    def tubes(self) -> TubeSet:
        return self.model.tubeset


def shipped_robots() -> list[str]:
    root = resources.files("betaspace") / "robots"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve(name_or_path: str | os.PathLike) -> Path:
    p = Path(name_or_path)
    if p.suffix in (".yaml", ".yml") or p.exists():
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        return p
    env = os.environ.get(CONFIG_DIR_ENV)
    if env:
        for ext in (".yaml", ".yml"):
            cand = Path(env) / f"{p.name}{ext}"
            if cand.is_file():
                return cand
    shipped = resources.files("betaspace") / "robots" / f"{p.name}.yaml"
    if shipped.is_file():
        return Path(str(shipped))
    raise ConfigError(f"no robot config named {str(name_or_path)!r}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def parse_robot(doc, source: str = "") -> RobotConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    version = doc.get("schema_version")
    if version is None:
        raise ConfigError(f"{source}: missing schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{source}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    tubes = doc.get("tubes")
    if not isinstance(tubes, list) or not tubes:
        raise ConfigError(f"{source}: 'tubes' must be a non-empty list")

    specs = []
    for k, rec in enumerate(tubes, 1):
        where = f"{source}: tube {k}"
        if not isinstance(rec, dict):
            raise ConfigError(f"{where}: expected a mapping")
        missing = [key for key in _TUBE_KEYS if key not in rec]
        if missing:
            raise ConfigError(f"{where}: missing {', '.join(missing)}")
        unknown = set(rec) - set(_TUBE_KEYS) - {"margin"}
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        vals = {key: _number(rec[key], f"{where}.{key}") for key in _TUBE_KEYS}
        specs.append(TubeSpec(**vals, margin=_number(rec.get("margin", 0.0), f"{where}.margin")))
    try:
        model = CTCRModel(tuple(specs), str(doc.get("name", "")))
    except (BetaSpaceError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    gains = {}
    for gname, g in (doc.get("gains") or {}).items():
        try:
            kp = tuple(_number(x, f"{source}: gains.{gname}.kp") for x in g["kp"])
            ki = tuple(_number(x, f"{source}: gains.{gname}.ki") for x in g["ki"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{source}: gain set {gname!r} needs kp and ki lists") from exc
        if len(kp) != model.n or len(ki) != model.n:
            raise ConfigError(f"{source}: gain set {gname!r} must have {model.n} entries per list")
        gains[str(gname)] = GainSet(kp, ki)

    defaults = doc.get("defaults") or {}
    if not isinstance(defaults, dict):
        raise ConfigError(f"{source}: 'defaults' must be a mapping")
    return RobotConfig(model.name, model, gains, dict(defaults), source)


def load_robot(name_or_path: str | os.PathLike) -> RobotConfig:
    path = resolve(name_or_path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_robot(doc, str(path))

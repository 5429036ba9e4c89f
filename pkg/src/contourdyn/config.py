"""Scenario configuration: TOML parsing and validation."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_SCHEMA_VERSION = 1

KNOWN_KINDS = (
    "monopole",
    "dipole",
    "patch",
    "satellite",
    "perturbation",
    "spectral-reference",
    "cross-validate",
)


class ConfigError(ValueError):
    """The scenario configuration is incomplete or inconsistent."""


@dataclass
class ScenarioConfig:
    kind: str
    initial: dict
    horizon: float
    dt: float
    n_phi: int = 64
    n_w: int = 32
    n_grid: int = 256
    box_size: float | None = None
    outputs: int = 5
    probe_levels: tuple = ()
    topo_levels: tuple = ()
    seed: int = 1234
    out_dir: str = "out"
    raw: dict = field(default_factory=dict)

    def validate(self):
        problems = []
        if self.kind not in KNOWN_KINDS:
            problems.append("unknown kind %r (expected one of %s)" % (self.kind, ", ".join(KNOWN_KINDS)))
        if not (self.dt > 0):
            problems.append("time.dt must be positive")
        if not (self.horizon > 0):
            problems.append("time.horizon must be positive")
        if self.dt >= self.horizon:
            problems.append("time.dt must be smaller than time.horizon")
        if self.n_phi < 4 or self.n_phi % 2:
            problems.append("grid.n_phi must be an even integer >= 4")
        if self.n_w < 2:
            problems.append("grid.n_w must be >= 2")
        if self.outputs < 2:
            problems.append("time.outputs must be >= 2")
        problems.extend(_validate_initial(self.kind, self.initial))
        if problems:
            raise ConfigError("; ".join(problems))
        return self


_REQUIRED_INITIAL = {
    "patch": {"kirchhoff": ("a", "b", "strength"), "circle": ("radius", "strength")},
    "monopole": {
        "gaussian": ("strength", "core"),
        "scaled-ellipse": ("strength", "a", "b", "eps"),
        "elliptic-gaussian": ("strength", "a", "b"),
        "file": ("path",),
    },
    "dipole": {"gaussian-pair": ("strength1", "strength2", "core", "separation")},
    "satellite": {"point-background": ("distance", "intensity", "minimum", "r0_scale", "n_levels")},
    "perturbation": {"scaled-ellipse": ("strength", "a", "b", "eps")},
    "spectral-reference": {
        "gaussian": ("strength", "core"),
        "elliptic-gaussian": ("strength", "a", "b"),
        "gaussian-pair": ("strength1", "strength2", "core", "separation"),
        "kirchhoff-smoothed": ("a", "b", "strength"),
    },
    "cross-validate": {"elliptic-gaussian": ("strength", "a", "b")},
}


def _validate_initial(kind, initial):
    problems = []
    if kind not in _REQUIRED_INITIAL:
        return problems
    fam = initial.get("family")
    table = _REQUIRED_INITIAL[kind]
    if fam not in table:
        problems.append(
            "initial.family for kind %r must be one of %s" % (kind, ", ".join(sorted(table)))
        )
        return problems
    for key in table[fam]:
        if key not in initial:
            problems.append("initial.%s is required for family %r" % (key, fam))
    return problems


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config is not valid TOML: %s" % exc)
    return config_from_dict(data, default_out=path.stem)


def config_from_dict(data: dict, default_out: str = "out") -> ScenarioConfig:
    schema = data.get("schema", CONFIG_SCHEMA_VERSION)
    if schema != CONFIG_SCHEMA_VERSION:
        raise ConfigError("unsupported config schema %r" % schema)
    if "kind" not in data:
        raise ConfigError("missing required key: kind")
    time_tab = data.get("time", {})
    if "dt" not in time_tab:
        raise ConfigError("missing required key: time.dt")
    if "horizon" not in time_tab:
        raise ConfigError("missing required key: time.horizon")
    grid = data.get("grid", {})
    monitor = data.get("monitor", {})
    cfg = ScenarioConfig(
        kind=data["kind"],
        initial=dict(data.get("initial", {})),
        horizon=float(time_tab["horizon"]),
        dt=float(time_tab["dt"]),
        n_phi=int(grid.get("n_phi", 64)),
        n_w=int(grid.get("n_w", 32)),
        n_grid=int(grid.get("n", 256)),
        box_size=(float(grid["box_size"]) if "box_size" in grid else None),
        outputs=int(time_tab.get("outputs", 5)),
        probe_levels=tuple(monitor.get("probe_levels", ())),
        topo_levels=tuple(monitor.get("topo_levels", ())),
        seed=int(monitor.get("seed", 1234)),
        out_dir=str(data.get("out", default_out)),
        raw=data,
    )
    return cfg.validate()

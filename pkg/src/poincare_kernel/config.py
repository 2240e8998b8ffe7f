"""Run configuration: an INI file read with configparser, validated on load.

Example::

    [model]
    kind = flat
    tau_re = 0.0
    tau_im = 1.0

    [run]
    levels = 1, 2, 3, 5, 8
    pairs = 20
    radius = 8.0
    seed = 0

Values given on the command line override the file.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass

from .errors import ConfigError
from .geometry import ELEMENT_CAP, WORD_CAP, space_from_config

_FLAT_LEVELS = (1, 2, 3, 5, 8)
_DISC_LEVELS = (2, 3, 4)


@dataclass
class RunConfig:
    kind: str = "flat"
    tau_re: float = 0.0
    tau_im: float = 1.0
    levels: tuple = ()
    pairs: int = 0
    # flat: fixed truncation radius; disc: None means "derive from tail_tolerance"
    radius: float | None = None
    tail_tolerance: float = 1e-4
    comparison_slack: float = 1e-8
    beta: float | None = None
    seed: int = 0
    threads: int = 1
    torus_nodes: int = 64
    torus_check_nodes: int = 48
    octagon_nodes: int = 20
    octagon_check_nodes: int = 16
    idempotency_grid: int = 48
    family_tolerance: float = 1e-8
    family_max_radius: float = 11.2
    disc_tolerance: float = 1e-3
    element_cap: int = ELEMENT_CAP
    word_cap: int = WORD_CAP
    output: str = "reports"

    def __post_init__(self):
        if not self.levels:
            self.levels = _FLAT_LEVELS if self.kind == "flat" else _DISC_LEVELS
        if not self.pairs:
            self.pairs = 20 if self.kind == "flat" else 10
        if self.radius is None and self.kind == "flat":
            self.radius = 8.0
        self.levels = tuple(int(n) for n in self.levels)

    def validate(self) -> "RunConfig":
        if self.kind not in ("flat", "hyperbolic"):
            raise ConfigError(f"model kind must be 'flat' or 'hyperbolic', got {self.kind!r}")
        if self.kind == "flat" and not self.tau_im > 0:
            raise ConfigError("tau_im must be positive")
        low = 1 if self.kind == "flat" else 2
        if not self.levels or min(self.levels) < low:
            raise ConfigError(f"levels must be integers >= {low} for the {self.kind} model")
        for name in ("tail_tolerance", "comparison_slack", "family_tolerance", "family_max_radius",
                     "disc_tolerance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number")
        if self.radius is not None and not self.radius > 0:
            raise ConfigError("radius must be positive")
        if self.beta is not None and not self.beta > 0:
            raise ConfigError("beta must be positive")
        for name in ("pairs", "threads", "torus_nodes", "torus_check_nodes", "octagon_nodes",
                     "octagon_check_nodes", "idempotency_grid"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 1000 <= self.element_cap <= 50_000_000:
            raise ConfigError("element_cap must lie in [1000, 5e7]")
        if not 8 <= self.word_cap <= 200:
            raise ConfigError("word_cap must lie in [8, 200]")
        return self

    def space(self):
        return space_from_config({"kind": self.kind, "tau_re": self.tau_re, "tau_im": self.tau_im})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["levels"] = list(self.levels)
        return d


_SCHEMA = {
    "model": {"kind": str, "tau_re": float, "tau_im": float},
    "run": {"levels": "levels", "pairs": int, "radius": "optfloat", "tail_tolerance": float,
            "comparison_slack": float, "disc_tolerance": float, "beta": "optfloat", "seed": int, "threads": int},
    "quadrature": {"torus_nodes": int, "torus_check_nodes": int, "octagon_nodes": int,
                   "octagon_check_nodes": int, "idempotency_grid": int, "family_tolerance": float,
                   "family_max_radius": float},
    "limits": {"element_cap": int, "word_cap": int},
    "output": {"directory": str},
}


def _convert(kind, raw: str, where: str):
    try:
        if kind == "levels":
            return tuple(int(s) for s in raw.replace(",", " ").split())
        if kind == "optfloat":
            return None if raw.strip().lower() in ("", "auto", "none") else float(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from exc


def read_config_values(path=None, text: str | None = None) -> dict:
    """Parse an INI file (or string) into RunConfig keyword values; unknown sections or keys are errors."""
    cp = configparser.ConfigParser()
    try:
        if text is not None:
            cp.read_string(text)
        elif path is not None:
            with open(path) as fh:
                cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            name = "output" if (section, key) == ("output", "directory") else key
            values[name] = _convert(_SCHEMA[section][key], raw, f"[{section}] {key}")
    return values


def build_config(values: dict | None = None, **overrides) -> RunConfig:
    """RunConfig from file values with non-None overrides applied, then validated.

    Defaults that depend on the model (levels, pairs, radius) are resolved
    after the overrides, so a subcommand can fix the model kind.
    """
    merged = dict(values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path=None, text: str | None = None, **overrides) -> RunConfig:
    return build_config(read_config_values(path, text), **overrides)

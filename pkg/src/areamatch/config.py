"""Flat run configuration: every tunable of every stage in one namespace.

The JSON key for the pairwise balance weight is "lambda" (a reserved word in
Python, stored as `lam`), and `l_star` is the source-area level. Unknown keys
are rejected so configs cannot silently drift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

from .geometry import DEFAULT_LEVELS

DEFAULT_T_C = math.exp(-1.0) / (2.0 * math.pi)

_JSON_ALIASES = {"lambda": "lam"}
_FIELD_TO_JSON = {"lam": "lambda"}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    # candidate screening
    T_s: int = 80 ** 2
    T_r: float = 4.0
    # size levels and link prediction
    TL: tuple[int, ...] = DEFAULT_LEVELS
    delta_l: float = 0.1
    delta_h: float = 0.8
    # sparse (graph-cut) matching
    lam: float = 0.1
    T_as: float = 0.05
    mu: float = 4.0
    alpha: float = 2.0
    beta: float = 2.0
    gamma: float = 2.0
    T_Emax: float = 0.35
    T_Er: float = 0.1
    l_star: int = 1
    bidirectional: bool = False
    # dense (mixture) matching
    T_c: float = DEFAULT_T_C
    S_EM: int = 3
    # point-matching pipeline
    r_a: float = 1.0
    pm_input_side: int = 480
    occupancy_ratio: float = 0.6
    phi: float = 3.5
    # orchestration
    method: str = "mesa"
    seed: int = 0

    def __post_init__(self):
        self.TL = tuple(int(v) for v in self.TL)
        self.validate()

    def validate(self):
        if len(self.TL) < 2 or any(a >= b for a, b in zip(self.TL, self.TL[1:])):
            raise ConfigError("TL must be a strictly increasing list, length >= 2")
        if not (0.0 <= self.delta_l < self.delta_h <= 1.0):
            raise ConfigError("need 0 <= delta_l < delta_h <= 1")
        if self.T_s < 1 or self.T_r < 1:
            raise ConfigError("T_s and T_r must be positive")
        if not 0.0 <= self.occupancy_ratio <= 1.0:
            raise ConfigError("occupancy_ratio must be in [0, 1]")
        if self.r_a <= 0 or self.pm_input_side < 8:
            raise ConfigError("r_a must be > 0 and pm_input_side >= 8")
        if self.l_star < 0 or self.l_star > len(self.TL) - 2:
            raise ConfigError("l_star outside the usable level range")
        if self.T_c <= 0 or self.S_EM < 0:
            raise ConfigError("T_c must be > 0 and S_EM >= 0")
        if self.method not in ("mesa", "dmesa"):
            raise ConfigError(f"unknown method {self.method!r}")
        for name in ("mu", "alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in obj.items():
            name = _JSON_ALIASES.get(key, key)
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[name] = value
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as f:
                obj = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config {path}: {e}") from e
        if not isinstance(obj, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_json(obj)

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            key = _FIELD_TO_JSON.get(f.name, f.name)
            value = getattr(self, f.name)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out

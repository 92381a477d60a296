"""Experiment configuration and its flat ``section.key=value`` text format.

Example::

    objective = synthetic1d
    kernel.family = matern52
    attack.variant = clipping
    attack.delta = 17.8
    attack.dynamic.enabled = true

Values are read as JSON when possible (numbers, booleans, lists, objects)
and as bare strings otherwise. Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigurationError


@dataclass
class KernelConfig:
    family: str = "matern52"
    fit: str = "offline"  # offline | online | fixed
    lengthscale: float | None = None
    variance: float | None = None


@dataclass
class PlayerConfig:
    algorithm: str = "gpucb"
    beta: str = "practical"
    defense_c: float = 0.0
    lam: float = 1.0
    delta: float = 0.1
    rkhs_bound: float = 1.0
    log_base: float = math.e


@dataclass
class DynamicConfig:
    enabled: bool = False
    F: float = 0.1
    K: int = 3


@dataclass
class AttackConfig:
    variant: str = "none"
    delta: float = 0.0
    h_max: float = 0.0
    mu_a: float = 0.0
    sigma_a: float = 1.0
    transition_w: float = 0.0
    bumps: Any = "preset"
    budget_mode: str = "unconstrained"
    budget_cap: float = math.inf
    dynamic: DynamicConfig = field(default_factory=DynamicConfig)


@dataclass
class RegionConfig:
    centroid: Any = None
    lengths: Any = None


@dataclass
class ExperimentConfig:
    objective: str = "synthetic1d"
    noise_sigma: float = 0.01
    eta2: float = 1e-4
    n_init: int | None = None
    T: int | None = None
    grid: int | None = None
    seed: int = 0
    region: RegionConfig = field(default_factory=RegionConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    player: PlayerConfig = field(default_factory=PlayerConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)

    def validate(self) -> "ExperimentConfig":
        from .objectives import OBJECTIVE_NAMES

        if self.objective not in OBJECTIVE_NAMES:
            raise ConfigurationError(f"unknown objective {self.objective!r}")
        if self.T is not None and self.T < 1:
            raise ConfigurationError("T must be at least 1")
        if self.n_init is not None and self.n_init < 1:
            raise ConfigurationError("n_init must be at least 1")
        if self.noise_sigma < 0 or self.eta2 < 0:
            raise ConfigurationError("noise_sigma and eta2 must be nonnegative")
        if self.kernel.fit not in ("offline", "online", "fixed"):
            raise ConfigurationError(f"kernel.fit must be offline, online or fixed, got {self.kernel.fit!r}")
        if self.kernel.fit == "fixed" and (self.kernel.lengthscale is None or self.kernel.variance is None):
            raise ConfigurationError("kernel.fit=fixed needs kernel.lengthscale and kernel.variance")
        if (self.region.centroid is None) != (self.region.lengths is None):
            raise ConfigurationError("region override needs both centroid and lengths")
        return self


# dotted keys whose attribute name differs from the key
_ALIASES = {"player.lambda": "player.lam"}


def _field_path(key: str):
    key = _ALIASES.get(key, key)
    obj_type = ExperimentConfig
    path = key.split(".")
    for i, part in enumerate(path):
        names = {f.name: f for f in dataclasses.fields(obj_type)}
        if part not in names:
            raise ConfigurationError(f"unknown config key {key!r}")
        f = names[part]
        sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
        if i < len(path) - 1:
            if sub is None or not dataclasses.is_dataclass(sub):
                raise ConfigurationError(f"unknown config key {key!r}")
            obj_type = sub
        elif sub is not None and dataclasses.is_dataclass(sub):
            raise ConfigurationError(f"config key {key!r} names a section, not a value")
    return path


def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low in ("none", "null"):
        return None
    if low in ("true", "false"):
        return low == "true"
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _coerce(path, value):
    name = path[-1]
    if value is None:
        # "none" is a legal attack variant, not a missing value
        return "none" if name == "variant" else None
    if name in ("n_init", "T", "grid", "seed", "K"):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigurationError(f"{'.'.join(path)} must be an integer")
        return int(value)
    if name == "log_base":
        return math.e if value in ("e", "E") else float(value)
    if name in ("enabled",):
        return bool(value)
    if name in ("objective", "family", "fit", "algorithm", "beta", "variant", "budget_mode"):
        return str(value).lower()
    if name in ("bumps", "centroid", "lengths"):
        return value
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{'.'.join(path)}: cannot read {value!r} as a number") from exc


def set_value(config: ExperimentConfig, key: str, value) -> None:
    path = _field_path(key)
    target = config
    for part in path[:-1]:
        target = getattr(target, part)
    setattr(target, path[-1], _coerce(path, value))


def with_value(config: ExperimentConfig, key: str, value) -> ExperimentConfig:
    new = copy.deepcopy(config)
    set_value(new, key, value)
    return new


def get_value(config: ExperimentConfig, key: str):
    target = config
    for part in _field_path(key):
        target = getattr(target, part)
    return target


def parse_config(text: str) -> ExperimentConfig:
    config = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        try:
            set_value(config, key.strip(), parse_value(value))
        except ConfigurationError as exc:
            raise ConfigurationError(f"line {lineno}: {exc}") from None
    return config.validate()


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def _flatten(obj, prefix=""):
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        key = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(value):
            yield from _flatten(value, key + ".")
        else:
            yield {v: k for k, v in _ALIASES.items()}.get(key, key), value


def config_to_text(config: ExperimentConfig) -> str:
    lines = []
    for key, value in _flatten(config):
        if value is None:
            continue
        if isinstance(value, float) and math.isinf(value):
            text = "inf"
        elif isinstance(value, str):
            text = value
        else:
            text = json.dumps(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"

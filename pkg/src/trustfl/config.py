"""Experiment configuration: nested dataclasses, YAML files, dotted-key overrides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Optional, Union, get_args, get_origin, get_type_hints

import yaml

from .adversary import AttackStrategy
from .learner import AlgorithmParams
from .taskmodel import ConstraintParams, DataDistribution
from .topology import TopologyError, TopologySpec, build_topology
from .trust import TrustModel

VARIANTS = ("trusted", "old-baseline", "oracle-filter")
CONFIG_DIALECT = "yaml-1.1 (PyYAML safe_load)"


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class AlgorithmSpec:
    horizon: int = 1000
    step_scale: float = 1.0
    eta: Optional[float] = None  # pinned stepsize; None means step_scale / sqrt(horizon)
    delta: Optional[float] = None  # None means 1 / (4 eta^2)
    radius: float = 1.0
    clip_received: bool = False


@dataclass(frozen=True)
class ComparatorSpec:
    tol: float = 1e-6
    max_iter: int = 100_000


@dataclass(frozen=True)
class BoundSpec:
    zeta: float = 0.1
    beta: float = 0.5


@dataclass(frozen=True)
class SimConfig:
    topology: TopologySpec = field(default_factory=TopologySpec)
    trust: TrustModel = field(default_factory=TrustModel)
    task: DataDistribution = field(default_factory=DataDistribution)
    constraint: ConstraintParams = field(default_factory=ConstraintParams)
    algorithm: AlgorithmSpec = field(default_factory=AlgorithmSpec)
    attack: AttackStrategy = field(default_factory=AttackStrategy)
    comparator: ComparatorSpec = field(default_factory=ComparatorSpec)
    bounds: BoundSpec = field(default_factory=BoundSpec)
    variant: str = "trusted"
    force_trust: bool = False
    realizations: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"must be one of {VARIANTS}, got {self.variant!r}")
        if self.realizations < 1:
            raise ConfigError("realizations", f"must be >= 1, got {self.realizations}")
        if self.algorithm.horizon < 0:
            raise ConfigError("algorithm.horizon", "must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed", "must be >= 0")

    def algorithm_params(self) -> AlgorithmParams:
        a = self.algorithm
        return AlgorithmParams.from_horizon(a.horizon, a=a.step_scale, radius=a.radius, eta=a.eta, delta=a.delta)

    def replace(self, **changes) -> "SimConfig":
        """``replace(**{"algorithm.horizon": 100})`` style updates, validated."""
        data = to_dict(self)
        for key, value in changes.items():
            _set_dotted(data, key, value)
        return from_dict(data)


def to_dict(cfg) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if is_dataclass(v):
            out[f.name] = to_dict(v)
        elif isinstance(v, tuple):
            out[f.name] = [list(x) if isinstance(x, tuple) else x for x in v]
        else:
            out[f.name] = v
    return out


def _coerce(key: str, tp, value):
    origin = get_origin(tp)
    if origin is Union:
        args = [a for a in get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(key, args[0], value)
    if value is None:
        raise ConfigError(key, "may not be null")
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected a boolean, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(key, f"must be finite, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {value!r}")
        args = get_args(tp)
        inner = args[0]
        return tuple(_coerce(f"{key}[{i}]", inner, v) for i, v in enumerate(value))
    raise ConfigError(key, f"unsupported field type {tp}")


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(prefix or "<root>", f"expected a mapping, got {data!r}")
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls) if f.init}
    for k in data:
        if k not in known:
            raise ConfigError(f"{prefix}{k}", "unknown key")
    kwargs = {}
    for name in known:
        if name not in data:
            continue
        key = f"{prefix}{name}"
        tp = hints[name]
        if isinstance(tp, type) and is_dataclass(tp):
            kwargs[name] = _build(tp, data[name] or {}, key + ".")
        else:
            kwargs[name] = _coerce(key, tp, data[name])
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(prefix.rstrip(".") or "<root>", str(e)) from None


def from_dict(data: Optional[dict]) -> SimConfig:
    cfg = _build(SimConfig, data or {}, "")
    try:
        build_topology(cfg.topology)
    except TopologyError as e:
        raise ConfigError(f"topology.{e.field}" if e.field else "topology", str(e)) from None
    return cfg


def _set_dotted(data: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    cur = data
    for p in parts[:-1]:
        nxt = cur.get(p)
        if nxt is None:
            nxt = {}
            cur[p] = nxt
        if not isinstance(nxt, dict):
            raise ConfigError(key, f"{p} is not a section")
        cur = nxt
    cur[parts[-1]] = value


def parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def parse_config(path: Optional[Union[str, Path]] = None, overrides: Optional[dict] = None) -> SimConfig:
    """Load a YAML config (missing or empty file means all defaults) and apply overrides."""
    data: dict = {}
    if path is not None:
        text = Path(path).read_text()
        loaded = yaml.safe_load(text)
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigError("<root>", "config file must hold a mapping")
            data = loaded
    for key, value in (overrides or {}).items():
        _set_dotted(data, key, value)
    return from_dict(data)


def dump_config(cfg: SimConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def default_config() -> SimConfig:
    return SimConfig()

"""
Config Module - Run configuration with layered sources

Precedence, highest first: explicit overrides (CLI flags), a JSON config
file, SHACLTRAV_* environment variables, built-in defaults.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Mapping, Optional

from .errors import ConfigError
from .planner import (
    TRAVERSAL_CONFIGURATIONS,
    Connectivity,
    ConstraintTiebreak,
    PlannerConfig,
    Strategy,
)

logger = logging.getLogger(__name__)

ENV_PREFIX = 'SHACLTRAV_'


@dataclass
class RunConfig:
    """
    Everything a validation run needs besides the schema and data themselves.

    rewriting=False is the global-grounding baseline: no instance filters,
    declaration-order traversal and no early skipping.
    """

    schema: Optional[str] = None
    data: Optional[str] = None
    endpoint: Optional[str] = None
    output: Optional[str] = None
    dataset_id: str = ''
    strategy: str = Strategy.DFS.value
    seed_degree: str = Connectivity.HIGH_IN_DEGREE.value
    seed_constraints: str = ConstraintTiebreak.MANY.value
    rng_seed: int = 0
    config_name: Optional[str] = None
    page_size: int = 10000
    max_query_len: int = 65000
    max_parts: int = 10
    max_answers: int = 10000
    timeout: float = 60.0
    max_in_flight: int = 4
    rewriting: bool = True
    paged: bool = True
    prefetch: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ('page_size', 'max_query_len', 'max_parts', 'max_answers', 'max_in_flight'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if self.data and self.endpoint:
            raise ConfigError("Give either a data file or an endpoint, not both")
        if self.config_name is not None and self.config_name not in TRAVERSAL_CONFIGURATIONS:
            raise ConfigError(
                f"Unknown configuration name {self.config_name!r}; "
                f"expected one of {', '.join(TRAVERSAL_CONFIGURATIONS)}"
            )
        try:
            Strategy(self.strategy)
            Connectivity(self.seed_degree)
            ConstraintTiebreak(self.seed_constraints)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def planner(self) -> PlannerConfig:
        if self.config_name is not None:
            named = TRAVERSAL_CONFIGURATIONS[self.config_name]
            return PlannerConfig(named.strategy, named.connectivity,
                                 named.constraint_tiebreak, self.rng_seed)
        return PlannerConfig(
            Strategy(self.strategy),
            Connectivity(self.seed_degree),
            ConstraintTiebreak(self.seed_constraints),
            self.rng_seed,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: Mapping[str, Any]) -> 'RunConfig':
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
        return RunConfig(**{k: _coerce(k, v) for k, v in data.items()})


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    kind = _FIELD_TYPES[name]
    try:
        if kind in (bool, 'bool'):
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ('1', 'true', 'yes', 'on'):
                return True
            if text in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        if kind in (int, 'int'):
            if isinstance(value, bool):
                raise ValueError(f"not an integer: {value!r}")
            return int(value)
        if kind in (float, 'float'):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"Bad value for {name}: {exc}") from exc
    return str(value)


def environment_layer(environ: Mapping[str, str]) -> Dict[str, Any]:
    """Settings found in SHACLTRAV_<FIELD> variables."""
    layer = {}
    for f in fields(RunConfig):
        key = ENV_PREFIX + f.name.upper()
        if key in environ and environ[key] != '':
            layer[f.name] = _coerce(f.name, environ[key])
    return layer


def file_layer(path: str) -> Dict[str, Any]:
    """Settings from a JSON config file (the same keys as RunConfig.to_dict)."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown keys in {path}: {', '.join(unknown)}")
    return {k: _coerce(k, v) for k, v in data.items()}


def load_run_config(overrides: Optional[Mapping[str, Any]] = None,
                    config_path: Optional[str] = None,
                    environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    Merge defaults, environment, config file and overrides into a RunConfig.

    None-valued overrides are ignored, so unset CLI flags fall through.

    Raises:
        ConfigError: Bad value, unknown key or unreadable file
    """
    environ = os.environ if environ is None else environ
    merged: Dict[str, Any] = {}
    merged.update(environment_layer(environ))
    if config_path:
        merged.update(file_layer(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = _coerce(key, value)
    config = RunConfig.from_dict(merged)
    logger.debug("Run configuration: %s", config.to_dict())
    return config


def save_run_config(config: RunConfig, path: str):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write('\n')


BENCH_ENV_PREFIX = ENV_PREFIX + 'BENCH_'

SCALES = {'small': 10000, 'medium': 50000, 'large': 200000}


def parse_scale(text: str) -> int:
    """A triple count, or one of the named scales."""
    text = str(text).strip()
    if text in SCALES:
        return SCALES[text]
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"scale must be an integer or one of {', '.join(SCALES)}, got {text!r}")


@dataclass
class BenchConfig:
    """
    Settings of the bench commands.

    Each field can come from a SHACLTRAV_BENCH_<FIELD> variable; list
    fields take comma-separated values there.
    """

    schema_sizes: tuple = (3,)
    scales: tuple = (SCALES['small'],)
    invalid_pcts: tuple = (10.0, 50.0, 75.0)
    configs: tuple = tuple(TRAVERSAL_CONFIGURATIONS) + ('off',)
    reps: int = 1
    rng_seed: int = 0
    parallel_cells: int = 1

    def __post_init__(self):
        for name in ('schema_sizes', 'scales', 'invalid_pcts', 'configs'):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        for name in ('reps', 'parallel_cells'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        unknown = [c for c in self.configs if c != 'off' and c not in TRAVERSAL_CONFIGURATIONS]
        if unknown:
            raise ConfigError(f"Unknown bench configurations: {', '.join(unknown)}")


_BENCH_PARSERS = {
    'schema_sizes': int,
    'scales': parse_scale,
    'invalid_pcts': float,
    'configs': str,
}


def _bench_value(name: str, value: Any) -> Any:
    try:
        if name in _BENCH_PARSERS:
            items = value.split(',') if isinstance(value, str) else value
            return tuple(_BENCH_PARSERS[name](str(v).strip()) for v in items if str(v).strip())
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"Bad value for {name}: {exc}") from exc


def load_bench_config(overrides: Optional[Mapping[str, Any]] = None,
                      environ: Optional[Mapping[str, str]] = None) -> BenchConfig:
    """
    Merge defaults, SHACLTRAV_BENCH_* variables and overrides into a BenchConfig.

    None-valued overrides are ignored, so unset CLI flags fall through.

    Raises:
        ConfigError: Bad value
    """
    environ = os.environ if environ is None else environ
    merged: Dict[str, Any] = {}
    for f in fields(BenchConfig):
        key = BENCH_ENV_PREFIX + f.name.upper()
        if environ.get(key, '') != '':
            merged[f.name] = _bench_value(f.name, environ[key])
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = _bench_value(key, value)
    config = BenchConfig(**merged)
    logger.debug("Bench configuration: %s", asdict(config))
    return config

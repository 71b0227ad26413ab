"""Run configuration: JSON file, then ``MARKETMODES_*`` environment, then flags."""

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .portfolio import DEFAULT_DTS

ENV_PREFIX = "MARKETMODES_"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    prices: str
    seed: int
    sectors: Optional[str] = None
    out_dir: str = "out"
    rho_c: float = 0.9
    top_fraction: float = 0.03
    louvain_seed: Optional[int] = None
    master_seeds: Optional[list] = None
    grid_step: float = 0.02
    dt: list = field(default_factory=lambda: list(DEFAULT_DTS))
    n_runs: int = 10
    min_weight: float = 0.0005
    r_f: float = 0.0
    count_prices: bool = False
    check_edge: bool = True
    bins: int = 50
    market_weights: dict = field(default_factory=lambda: {"L": 0.26, "M": 0.74})
    planted_weights: Optional[dict] = None

    def __post_init__(self):
        if self.louvain_seed is None:
            self.louvain_seed = int(self.seed)
        if self.master_seeds is None:
            self.master_seeds = [int(self.seed) + i for i in range(3)]
        if isinstance(self.dt, (int, float)):
            self.dt = [int(self.dt)]

    def validate(self):
        for name in ("prices", "sectors"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{name} file not found: {p}")
        if not 0.0 <= self.rho_c <= 1.0:
            raise ConfigError(f"rho_c must lie in [0, 1], got {self.rho_c}")
        if not 0.0 < self.top_fraction <= 1.0:
            raise ConfigError(f"top_fraction must lie in (0, 1], got {self.top_fraction}")
        if not self.master_seeds:
            raise ConfigError("master_seeds must not be empty")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        if any(int(d) < 1 for d in self.dt):
            raise ConfigError("every dt must be >= 1")
        return self


def _coerce(value):
    """Environment values are JSON when they parse, plain strings otherwise."""
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def load_config(path=None, overrides=None, environ=None):
    """Merge config file, environment overrides and explicit overrides."""
    known = {f.name for f in fields(RunConfig)}
    data = {}
    if path is not None:
        data.update(json.loads(Path(path).read_text(encoding="utf-8")))
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in data:
            raise ConfigError("config must set 'seed' (no ambient randomness)")
    environ = os.environ if environ is None else environ
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            if name in known:
                data[name] = _coerce(value)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    missing = [k for k in ("prices", "seed") if k not in data]
    if missing:
        raise ConfigError(f"missing required settings: {missing}")
    return RunConfig(**data)

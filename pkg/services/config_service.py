# services/config_service.py
"""
ConfigService - builds a SolverConfig from defaults, a flat key=value file
and CLI overrides (in that order; later sources win).
"""

import logging
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values

from config.solver_config import SOLVER_CONFIG
from core.errors import ConfigError
from core.models import SolverConfig

logger = logging.getLogger(__name__)

# Keys whose default is None still need a concrete type when read from text
_OPTIONAL_TYPES = {
    'd': int,
    'stop_fraction': float,
    'wall_clock_s': float,
    'mix_steps': int,
}


class ConfigService:
    """Single responsibility: turn layered settings into a validated SolverConfig."""

    def __init__(self, defaults: Optional[Dict[str, Any]] = None):
        self.defaults = dict(defaults or SOLVER_CONFIG['solver'])
        self.known = {f.name for f in fields(SolverConfig)}
        logger.debug(f"🔧 ConfigService initialized with {len(self.defaults)} defaults")

    def build(self, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> SolverConfig:
        """
        Build the solver config.

        Args:
            path: optional flat config file (KEY=value per line, '#' comments)
            overrides: CLI values; None entries are ignored

        Returns:
            SolverConfig
        """
        values = dict(self.defaults)
        if path:
            values.update(self.read_file(path))
        for key, value in (overrides or {}).items():
            if value is not None:
                values[self._normalize_key(key)] = value

        unknown = sorted(set(values) - self.known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}", {"keys": unknown})

        config = SolverConfig(**values)
        self._validate(config)
        logger.info(f"🔧 Solver config: k={config.k}, eps0={config.eps0}, q={config.q}, "
                    f"restarts={config.restarts}, seed={config.seed}")
        return config

    def read_file(self, path: str) -> Dict[str, Any]:
        """Parse a flat key=value file into typed values."""
        if not Path(path).is_file():
            raise ConfigError(f"Config file not found: {path}", {"path": path})
        parsed: Dict[str, Any] = {}
        for raw_key, raw_value in dotenv_values(path).items():
            key = self._normalize_key(raw_key)
            if key not in self.known:
                raise ConfigError(f"Unknown config key '{raw_key}' in {path}", {"key": raw_key, "path": path})
            parsed[key] = self._coerce(key, raw_value)
        logger.info(f"🔧 Loaded {len(parsed)} settings from {path}")
        return parsed

    def _coerce(self, key: str, raw: Optional[str]) -> Any:
        if raw is None or raw.strip().lower() in ('', 'none', 'null'):
            return None
        default = self.defaults.get(key)
        target = _OPTIONAL_TYPES.get(key) if default is None else type(default)
        try:
            if target is bool:
                return raw.strip().lower() in ('true', '1', 't', 'yes')
            if target is None:
                return raw
            return target(raw)
        except ValueError as e:
            raise ConfigError(f"Bad value for '{key}': {raw!r} ({e})", {"key": key, "value": raw})

    @staticmethod
    def _normalize_key(key: str) -> str:
        return key.strip().lower().replace('-', '_')

    @staticmethod
    def _validate(config: SolverConfig) -> None:
        if not 0 < config.q < 1:
            raise ConfigError(f"q must lie in (0,1), got {config.q}", {"q": config.q})
        if not 0 < config.eps0 < 1:
            raise ConfigError(f"eps0 must lie in (0,1), got {config.eps0}", {"eps0": config.eps0})
        if config.restarts < 1 or config.steiner_retries < 1:
            raise ConfigError("restarts and steiner_retries must be at least 1")
        if config.d is not None and config.d < 1:
            raise ConfigError(f"d must be at least 1, got {config.d}", {"d": config.d})
        if config.bite_scale not in ('degree', 'vertices'):
            raise ConfigError(f"bite_scale must be 'degree' or 'vertices', got {config.bite_scale}")

"""
Runtime Configuration

Settings come from the environment (optionally a .env file) and can be
overridden by CLI flags. None of them changes a result: worker count and
verbosity only affect speed and output, and the sample cap is recorded in
every run report.
"""

import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from dotenv import load_dotenv

from .errors import ConfigError

DEFAULT_SAMPLE_CAP = 1_000_000
DEFAULT_EXACT_LIMIT = 24


@dataclass(frozen=True)
class SolverConfig:
    """Execution settings shared by the solvers and the bench runner."""

    workers: int = 1
    sample_cap: int = DEFAULT_SAMPLE_CAP
    exact_limit: int = DEFAULT_EXACT_LIMIT
    verbose: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.sample_cap < 1:
            raise ConfigError(f"sample_cap must be >= 1, got {self.sample_cap}")
        if self.exact_limit < 0:
            raise ConfigError(f"exact_limit must be >= 0, got {self.exact_limit}")

    def with_overrides(self, **overrides) -> "SolverConfig":
        """Return a copy with every non-None override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def _read_int(env: Mapping[str, str], name: str, default: int) -> int:
    raw = env.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


def _read_bool(env: Mapping[str, str], name: str, default: bool) -> bool:
    raw = env.get(name)
    if raw is None or raw.strip() == "":
        return default
    return raw.strip().lower() in {"1", "true", "yes", "on"}


def load_config(env: Optional[Mapping[str, str]] = None, dotenv: bool = True) -> SolverConfig:
    """
    Build a SolverConfig from environment variables.

    Recognised variables: MINSMC_WORKERS, MINSMC_SAMPLE_CAP,
    MINSMC_EXACT_LIMIT and MINSMC_VERBOSE.

    Args:
        env: Mapping to read from (defaults to os.environ)
        dotenv: Whether to load a .env file into os.environ first

    Returns:
        The validated configuration
    """
    if env is None:
        if dotenv:
            load_dotenv()
        env = os.environ

    return SolverConfig(
        workers=_read_int(env, "MINSMC_WORKERS", 1),
        sample_cap=_read_int(env, "MINSMC_SAMPLE_CAP", DEFAULT_SAMPLE_CAP),
        exact_limit=_read_int(env, "MINSMC_EXACT_LIMIT", DEFAULT_EXACT_LIMIT),
        verbose=_read_bool(env, "MINSMC_VERBOSE", False),
    )

"""
Centralized runtime settings for PWaveP.

Supports two configuration methods:
1. Programmatic: configure(threads=4, debug=True)
2. Environment variables: PWAVEP_THREADS, PWAVEP_DEBUG, ...

Settings cover process-wide knobs only (solver caps, threading, timeouts,
output location). Per-experiment parameters live in the pydantic models of
pwavep.core.config.
"""

from dataclasses import dataclass
from typing import Optional, Callable, TypeVar
import os
from dotenv import load_dotenv

from pwavep.core.errors import ConfigurationError

T = TypeVar("T")

DEFAULT_OUTPUT_DIR = "./pwavep-runs"


@dataclass
class PWavePSettings:
    """Configuration settings for PWaveP."""

    debug: bool = False
    threads: int = 1

    # Solver caps
    dense_cap: int = 4096
    hungarian_cap: int = 512
    power_iterations: int = 1000

    # External oracle
    oracle_timeout: float = 30.0

    output_dir: Optional[str] = None

    def get_output_dir(self) -> str:
        """
        Return the output directory, creating it if needed.

        If no output_dir is configured, uses ./pwavep-runs
        """
        path = self.output_dir or DEFAULT_OUTPUT_DIR
        os.makedirs(path, exist_ok=True)
        return path

    def validate(self) -> None:
        """Validate that all numeric settings are usable."""
        if self.threads < 1:
            raise ConfigurationError(
                f"threads must be at least 1, got {self.threads}. "
                "Either call configure(threads=...) or set PWAVEP_THREADS."
            )
        if self.dense_cap < 2:
            raise ConfigurationError(
                f"dense_cap must be at least 2, got {self.dense_cap}. "
                "Either call configure(dense_cap=...) or set PWAVEP_DENSE_CAP."
            )
        if self.hungarian_cap < 1:
            raise ConfigurationError(
                f"hungarian_cap must be at least 1, got {self.hungarian_cap}. "
                "Either call configure(hungarian_cap=...) or set PWAVEP_HUNGARIAN_CAP."
            )
        if self.power_iterations < 1:
            raise ConfigurationError(
                f"power_iterations must be at least 1, got {self.power_iterations}."
            )
        if self.oracle_timeout <= 0:
            raise ConfigurationError(
                f"oracle_timeout must be positive, got {self.oracle_timeout}. "
                "Either call configure(oracle_timeout=...) or set PWAVEP_ORACLE_TIMEOUT."
            )


# Global singleton for settings
_settings: Optional[PWavePSettings] = None


def configure(
    debug: bool = False,
    threads: int = 1,
    dense_cap: int = 4096,
    hungarian_cap: int = 512,
    power_iterations: int = 1000,
    oracle_timeout: float = 30.0,
    output_dir: Optional[str] = None,
) -> None:
    """
    Initialize PWaveP runtime configuration.

    Args:
        debug: Enable debug logging.
        threads: Worker threads for batch purification and experiments.
        dense_cap: Largest node count the dense eigensolver accepts.
        hungarian_cap: Largest cloud size solved by exact (Hungarian) EMD.
            Larger instances are routed to Sinkhorn.
        power_iterations: Iterations used to estimate lambda_max.
        oracle_timeout: Seconds to wait for an external oracle response.
        output_dir: Directory for run outputs. Defaults to ./pwavep-runs

    Example:
        >>> from pwavep import configure
        >>> configure(threads=4, debug=True)
    """
    global _settings
    settings = PWavePSettings(
        debug=debug,
        threads=threads,
        dense_cap=dense_cap,
        hungarian_cap=hungarian_cap,
        power_iterations=power_iterations,
        oracle_timeout=oracle_timeout,
        output_dir=output_dir,
    )
    settings.validate()
    _settings = settings


def _env(name: str, cast: Callable[[str], T], default: T) -> T:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        raise ConfigurationError(
            f"Environment variable {name}={raw!r} could not be parsed as "
            f"{cast.__name__}. Fix or unset it."
        )


def get_settings() -> PWavePSettings:
    """
    Get current settings.

    If configure() has not been called, attempts to load from environment variables.

    Returns:
        PWavePSettings instance
    """
    global _settings

    if _settings is None:
        # Load .env file if it exists
        load_dotenv()

        settings = PWavePSettings(
            debug=os.environ.get("PWAVEP_DEBUG", "").lower() in ("true", "1", "yes"),
            threads=_env("PWAVEP_THREADS", int, 1),
            dense_cap=_env("PWAVEP_DENSE_CAP", int, 4096),
            hungarian_cap=_env("PWAVEP_HUNGARIAN_CAP", int, 512),
            power_iterations=_env("PWAVEP_POWER_ITERATIONS", int, 1000),
            oracle_timeout=_env("PWAVEP_ORACLE_TIMEOUT", float, 30.0),
            output_dir=os.environ.get("PWAVEP_OUTPUT_DIR") or None,
        )
        settings.validate()
        _settings = settings

    return _settings


def reset_settings() -> None:
    """
    Reset settings to None. Useful for testing.
    """
    global _settings
    _settings = None

"""
Runtime configuration for the simulator.

Values are read from the environment after loading an optional ``.env`` file
at the project root, so experiments can be re-tuned without touching code.
CLI flags take precedence over anything defined here.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent
PROJECT_ROOT = BASE_DIR.parent
load_dotenv(PROJECT_ROOT / ".env", override=False)

_DEFAULT_LOG_LEVEL = "INFO"
_DEFAULT_BUDGET_FACTOR = 20
_DEFAULT_GNP_RETRY_CAP = 1000
_DEFAULT_BOUNDED_CYCLE_CONSTANT = 10
_DEFAULT_WORKERS = 1
_DEFAULT_ENVELOPE_TOLERANCE = 0.01


def _env_int(name: str, default: int, *, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw.strip())
    except ValueError:
        return default
    return value if value >= minimum else default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw.strip())
    except ValueError:
        return default


def _env_log_level(name: str) -> int:
    raw = (os.getenv(name) or _DEFAULT_LOG_LEVEL).strip().upper()
    level = logging.getLevelName(raw)
    return level if isinstance(level, int) else logging.INFO


@dataclass(frozen=True)
class SimConfig:
    log_level: int
    budget_factor: int
    gnp_retry_cap: int
    bounded_cycle_constant: int
    workers: int
    envelope_tolerance: float


def load_config() -> SimConfig:
    return SimConfig(
        log_level=_env_log_level("BEEPSIM_LOG_LEVEL"),
        budget_factor=_env_int(
            "BEEPSIM_BUDGET_FACTOR", _DEFAULT_BUDGET_FACTOR, minimum=1
        ),
        gnp_retry_cap=_env_int(
            "BEEPSIM_GNP_RETRY_CAP", _DEFAULT_GNP_RETRY_CAP, minimum=1
        ),
        bounded_cycle_constant=_env_int(
            "BEEPSIM_BOUNDED_CYCLE_CONSTANT",
            _DEFAULT_BOUNDED_CYCLE_CONSTANT,
            minimum=1,
        ),
        workers=_env_int("BEEPSIM_WORKERS", _DEFAULT_WORKERS, minimum=1),
        envelope_tolerance=_env_float(
            "BEEPSIM_ENVELOPE_TOLERANCE", _DEFAULT_ENVELOPE_TOLERANCE
        ),
    )


CONFIG = load_config()

from __future__ import annotations

import logging
import sys

from .config import CONFIG

LOGGER_ROOT = "beepsim"


def get_logger(name: str) -> logging.Logger:
    """Return a stdout logger named ``beepsim.<name>``."""
    logger = logging.getLogger(f"{LOGGER_ROOT}.{name}")
    logger.setLevel(CONFIG.log_level)
    logger.propagate = False
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(
            logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s")
        )
        logger.addHandler(handler)
    return logger

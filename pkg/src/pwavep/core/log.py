"""
Logging setup.

The package logs through loguru and is silent until setup_logging() is
called (the CLI does this). Library users who want the output can call it
themselves or run logger.enable("pwavep").
"""

import sys
from typing import Optional

from loguru import logger

from pwavep.core.settings import get_settings

LOG_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | "
    "<cyan>{name}</cyan> - <level>{message}</level>"
)


def setup_logging(debug: Optional[bool] = None) -> None:
    """
    Route pwavep logs to stderr.

    Args:
        debug: Force DEBUG level on or off. Defaults to settings.debug.
    """
    if debug is None:
        debug = get_settings().debug
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if debug else "INFO", format=LOG_FORMAT)
    logger.enable("pwavep")

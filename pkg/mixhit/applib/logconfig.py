"""
Logging setup shared by the CLI and the experiment runner.

Modules only ever do ``logger = logging.getLogger(__name__)``; handlers and
levels are installed once here.
"""

from __future__ import annotations

import logging.config
from typing import Optional

from mixhit.applib.config import config


def get_logging_dict(level: Optional[str] = None) -> dict:
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
        },
        "handlers": {"console": {"class": "logging.StreamHandler", "formatter": "plain"}},
        "root": {"handlers": ["console"], "level": (level or config.LOG_LEVEL or "INFO").upper()},
    }


def configure_logging(level: Optional[str] = None) -> None:
    logging.config.dictConfig(get_logging_dict(level))

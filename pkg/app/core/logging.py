"""
============================================================================
LOGGING MODULE
============================================================================
Setup logging untuk library dan CLI.

Usage:
    from app.core.logging import get_logger

    logger = get_logger(__name__)
    logger.info("training round %d", 3)
============================================================================
"""

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
BANNER = "=" * 70


def setup_logging(level: str = "INFO") -> None:
    """
    Configure root logger dengan satu stream handler ke stderr.
    Aman dipanggil berkali-kali (handler lama diganti).
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level.upper())


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def log_banner(logger: logging.Logger, *lines: str) -> None:
    """Print banner seperti startup event: garis '=' lalu lines lalu garis."""
    logger.info(BANNER)
    for line in lines:
        logger.info(line)
    logger.info(BANNER)

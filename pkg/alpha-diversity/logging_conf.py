import logging
import os

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def configure_logging(level: str | None = None) -> None:
    """Route logs to LOG_FILE when set, else stderr (stdout carries CLI output)."""
    level_name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    log_file = os.getenv("LOG_FILE")

    kwargs = {"filename": log_file} if log_file else {}
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        force=True,
        **kwargs,
    )

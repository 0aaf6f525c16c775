"""Central logging setup."""

import logging
import sys

from .settings import Settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(settings: Settings, quiet: bool = False) -> None:
    """Setup logging configuration.

    Args:
        settings: Supplies the level and the optional log file.
        quiet: Raise the level to WARNING.
    """
    level = getattr(logging, settings.log_level.upper())
    if settings.debug:
        level = logging.DEBUG
    if quiet:
        level = max(level, logging.WARNING)

    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file))

    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)

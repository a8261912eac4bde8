"""Logging module."""

from __future__ import annotations

import logging
from typing import ClassVar

from colorama import Back, Fore, Style

_BADGES = {
    logging.DEBUG: Back.WHITE + Fore.BLACK + " debug ",
    logging.INFO: Back.BLUE + Fore.WHITE + " info ",
    logging.WARNING: Back.YELLOW + Fore.BLACK + " warning ",
    logging.ERROR: Back.RED + Fore.WHITE + " error ",
    logging.CRITICAL: Back.BLACK + Fore.WHITE + " critical ",
}


class Logger:
    """Static class to store loggers."""

    loggers: ClassVar[dict[str, logging.Logger]] = {}
    level: int | str = logging.ERROR

    @staticmethod
    def set_level(level: int | str) -> None:
        """Set level of logging for all loggers.

        Parameters:
            level: Level of logging.
        """
        Logger.level = level
        for logger in Logger.loggers.values():
            logger.setLevel(level)

    @staticmethod
    def get_logger(name: str, fmt: str = ":%(lineno)d: %(message)s") -> logging.Logger:
        """Return a logger, creating it on first use.

        Parameters:
            name: Name to pass to the logging module.
            fmt: Format string appended to the logger name.

        Returns:
            Logger from ``logging.getLogger``.
        """
        if name not in Logger.loggers:
            logger = logging.getLogger(name)
            handler = logging.StreamHandler()
            handler.setFormatter(LoggingFormatter(fmt=name + fmt))
            logger.addHandler(handler)
            logger.setLevel(Logger.level)
            Logger.loggers[name] = logger
        return Logger.loggers[name]


class LoggingFormatter(logging.Formatter):
    """Formatter prefixing each record with a colored level badge."""

    def format(self, record: logging.LogRecord) -> str:  # noqa: A003
        """Override default format method.

        Parameters:
            record: A log record.

        Returns:
            The formatted record.
        """
        badge = _BADGES.get(record.levelno, "")
        return f"{Style.RESET_ALL}{badge}{Style.RESET_ALL} {super().format(record)}"

"""
Logging Utilities Package

Centralized logging configuration for the simulator: one named logger per
domain module, console plus rotating file output, consistent formatting.

Available Functions:
- get_logger(): Create or retrieve configured logger instances
- set_console_level(): Dynamically adjust console log levels
- configured_loggers(): All loggers named in LOGGING_CONFIG

Usage:
    from common.logging_utils import get_logger, set_console_level

    logger = get_logger('engine')
    logger.info('Starting sweep...')
    set_console_level(logger, 'WARNING')

Version: 3.0.0
"""

from .logging_config import (
    get_logger,
    set_console_level,
    configured_loggers,
    LOGGING_CONFIG,
    DEFAULT_LOG_DIR,
    DEFAULT_LOG_FORMAT,
    DEFAULT_DATE_FORMAT,
)

__all__ = [
    'get_logger',
    'set_console_level',
    'configured_loggers',
    'LOGGING_CONFIG',
    'DEFAULT_LOG_DIR',
    'DEFAULT_LOG_FORMAT',
    'DEFAULT_DATE_FORMAT',
]

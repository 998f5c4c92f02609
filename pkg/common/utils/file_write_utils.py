"""
File Writing Utilities Module

This module provides utilities for publishing result files atomically: content
is written to a temporary file next to the destination and moved into place
only once it is complete, so an interrupted or failed run never leaves a
partial CSV behind.

Key Features:
- Atomic replace of the destination file
- Parent directory creation
- Cleanup of the temporary file on failure
- Comprehensive logging

Version: 2.0.0
"""

import os
import tempfile
from pathlib import Path
from typing import Union

from common.logging_utils.logging_config import get_logger

logger = get_logger('cli')


def atomic_write_text(destination: Union[str, Path], text: str, encoding: str = "utf-8") -> Path:
    """
    Write text to ``destination`` atomically.

    Args:
        destination (Union[str, Path]): Final path of the file
        text (str): Full file content
        encoding (str): Text encoding, UTF-8 by default

    Returns:
        Path: The destination path

    Raises:
        OSError: If the directory cannot be created or the file cannot be written.
                 The destination is left untouched in that case.

    Example:
        >>> atomic_write_text(Path("results/link-probability.csv"), "experiment_id,...\\n")
        PosixPath('results/link-probability.csv')
    """
    destination = Path(destination)
    logger.debug(f"Atomically writing {len(text)} characters to {destination}")

    try:
        destination.parent.mkdir(parents=True, exist_ok=True)
    except Exception as e:
        error_msg = f"Failed to create output directory {destination.parent}: {e}"
        logger.error(error_msg)
        raise OSError(error_msg) from e

    tmp_path = None
    try:
        fd, tmp_name = tempfile.mkstemp(
            prefix=f".{destination.name}.", suffix=".tmp", dir=destination.parent
        )
        tmp_path = Path(tmp_name)
        # newline="" keeps the caller's line endings byte-identical across platforms
        with os.fdopen(fd, "w", encoding=encoding, newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, destination)
        tmp_path = None
    except Exception as e:
        error_msg = f"Failed to write {destination}: {e}"
        logger.error(error_msg)
        raise OSError(error_msg) from e
    finally:
        if tmp_path is not None and tmp_path.exists():
            tmp_path.unlink()

    logger.debug(f"Wrote {destination}")
    return destination


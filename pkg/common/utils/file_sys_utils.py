"""
Path Utilities Module

This module provides cross-platform path handling utilities for the simulator.
It supports both regular Python execution and PyInstaller frozen applications,
ensuring consistent path resolution for presets, edge-list traces, result files
and log directories.

Key Features:
- Cross-platform path resolution (Windows, macOS, Linux)
- PyInstaller frozen application support
- Relative and absolute path handling
- Directory creation and validation
- Filename sanitization for experiment identifiers used as file names

Version: 2.0.0
"""

import os
import sys
from pathlib import Path
from typing import Union, Optional


def resolve_path(path_input: Union[str, Path], base_dir: Optional[Path] = None) -> Path:
    """
    Resolve a path, handling both relative and absolute paths.

    Relative paths are resolved against ``base_dir`` (the project root when
    omitted). Config files use this to resolve edge-list paths relative to the
    directory the config file lives in.

    Args:
        path_input (Union[str, Path]): Input path as string or Path object
        base_dir (Optional[Path]): Base directory for relative paths.
                                 Defaults to the project root if None

    Returns:
        Path: Resolved Path object (always absolute)

    Raises:
        OSError: If the path cannot be resolved

    Example:
        >>> resolve_path("traces/friends.txt", base_dir=Path("/data"))
        PosixPath('/data/traces/friends.txt')
    """
    try:
        if base_dir is None:
            base_dir = get_script_directory()

        if isinstance(path_input, str):
            if not path_input.strip():
                raise ValueError("Path input cannot be empty")
            path_input = Path(path_input)

        if path_input.is_absolute():
            return path_input.resolve()

        return (Path(base_dir) / path_input).resolve()
    except Exception as e:
        raise OSError(f"Failed to resolve path '{path_input}': {e}")


def ensure_directory(directory_path: Union[str, Path]) -> Path:
    """
    Ensure a directory exists, creating it if necessary.

    Safe to call multiple times; parent directories are created as needed.

    Args:
        directory_path (Union[str, Path]): Path to the directory to ensure

    Returns:
        Path: Path object pointing to the ensured directory

    Raises:
        OSError: If the directory cannot be created due to permissions
                or filesystem issues
    """
    try:
        directory_path = Path(directory_path)

        if not str(directory_path).strip():
            raise ValueError("Directory path cannot be empty")

        if not directory_path.exists():
            directory_path.mkdir(parents=True, exist_ok=True)

        return directory_path
    except Exception as e:
        raise OSError(f"Failed to ensure directory '{directory_path}': {e}")


def get_project_root() -> Path:
    """
    Get the repository root directory (the level holding ``common/`` and ``socialdsa/``).

    Returns:
        Path: Path object pointing to the project root directory

    Raises:
        OSError: If the project root cannot be determined
    """
    try:
        if getattr(sys, 'frozen', False):
            return Path(sys.executable).resolve().parent
        # common/utils/ -> common/ -> project root
        return Path(__file__).resolve().parent.parent.parent
    except Exception as e:
        raise OSError(f"Failed to determine project root directory: {e}")


def get_script_directory() -> Path:
    """
    Get the base directory used for resolving relative paths.

    Returns:
        Path: Path object pointing to the project root directory
    """
    return get_project_root()


def sanitize_filename(filename: str) -> str:
    """
    Sanitize a filename by removing or replacing unsafe characters.

    Experiment identifiers come from user-edited config files and become
    default result file names, so they pass through here first.

    The sanitization process:
    1. Replaces unsafe characters (< > : " / \\ | ? *) and whitespace with underscores
    2. Removes leading/trailing dots
    3. Ensures filename is not empty (uses 'unnamed_experiment' if empty)
    4. Limits filename length to 255 characters (preserving extension)

    Args:
        filename (str): Original filename to sanitize

    Returns:
        str: Sanitized filename safe for filesystem use

    Raises:
        ValueError: If the filename is None or not a string

    Example:
        >>> sanitize_filename("link probability:P_L")
        'link_probability_P_L'
    """
    if filename is None:
        raise ValueError("Filename cannot be None")

    if not isinstance(filename, str):
        raise ValueError(f"Filename must be a string, got {type(filename).__name__}")

    unsafe_chars = '<>:"/\\|?*'

    sanitized = filename.strip()
    for char in unsafe_chars:
        sanitized = sanitized.replace(char, '_')
    sanitized = "_".join(sanitized.split())
    sanitized = sanitized.strip('.')

    if not sanitized:
        sanitized = 'unnamed_experiment'

    if len(sanitized) > 255:
        name, ext = os.path.splitext(sanitized)
        if ext:
            sanitized = name[:255 - len(ext)] + ext
        else:
            sanitized = sanitized[:255]

    return sanitized

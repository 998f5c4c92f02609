"""
Utilities Package

Cross-platform utilities shared by the simulator and its command-line surface:
path handling, directory creation, filename sanitization and atomic file
publication.

Available Functions:
- resolve_path(): Resolve relative and absolute paths with base directory support
- ensure_directory(): Create directories and parent directories as needed
- get_script_directory(): Base directory for relative path resolution
- get_project_root(): Repository root directory
- sanitize_filename(): Sanitize filenames for filesystem safety

Usage:
    from common.utils import resolve_path
    from common.utils.file_write_utils import atomic_write_text

    trace = resolve_path("traces/friends.txt", base_dir=config_dir)
    atomic_write_text("results/link-probability.csv", csv_text)

Version: 2.0.0
"""

from .file_sys_utils import (
    resolve_path,
    ensure_directory,
    get_script_directory,
    get_project_root,
    sanitize_filename,
)

__all__ = [
    "resolve_path",
    "ensure_directory",
    "get_script_directory",
    "get_project_root",
    "sanitize_filename",
]

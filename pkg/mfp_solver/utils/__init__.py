"""
Utility modules for the solver.

Includes:
- console: Colored console output
- paths: Project-root and output-directory resolution
- formatters: CSV/JSON artifact formatting
"""

from .console import log_progress, log_summary, log_table, log_check, log_error, log_warning, log_info

__all__ = [
    "log_progress",
    "log_summary",
    "log_table",
    "log_check",
    "log_error",
    "log_warning",
    "log_info",
]

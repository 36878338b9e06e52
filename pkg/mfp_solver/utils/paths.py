"""
Path resolution utilities.

Provides centralized path resolution from project root and the output
directory precedence used by the CLI.
"""

from pathlib import Path
from typing import Optional, Union

from mfp_solver.config import get_settings


def get_project_root() -> Path:
    """
    Get the project root directory (parent of mfp_solver/).

    Returns:
        Path: Absolute path to project root directory
    """
    # This file is at mfp_solver/utils/paths.py
    return Path(__file__).parent.parent.parent


def resolve_from_project_root(path: Union[str, Path]) -> Path:
    """
    Resolve a path from the project root directory.

    If the path is absolute, it's returned as-is.
    If the path is relative, it's resolved from the project root.

    Args:
        path: Path to resolve (can be string or Path object)

    Returns:
        Path: Absolute resolved path

    Examples:
        >>> resolve_from_project_root("configs/poisson1d_desk.json")
        Path("/home/user/project/configs/poisson1d_desk.json")
    """
    path_obj = Path(path)

    if path_obj.is_absolute():
        return path_obj

    return (get_project_root() / path_obj).resolve()


def get_output_dir(cli_out: Optional[str], config_out: Union[str, Path]) -> Path:
    """
    Get the output directory for an experiment and create it.

    Precedence: --out flag, then MFP_OUT, then the config file's output_dir.
    Relative paths are taken relative to the current working directory.

    Args:
        cli_out: Value of the --out flag, if given.
        config_out: output_dir from the experiment config.

    Returns:
        Path: Existing output directory.
    """
    settings = get_settings()
    chosen = cli_out or settings.mfp_out or config_out
    out = Path(chosen).expanduser()
    out.mkdir(parents=True, exist_ok=True)
    return out

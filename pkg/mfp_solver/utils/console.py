"""
Colored console output utilities.

Uses colorama for cross-platform colored terminal output.
Color scheme:
- Cyan: Training progress lines
- Yellow: Per-run result summaries
- Green: Aggregate tables and passed checks
- Red: Errors
- Magenta: Warnings
"""

from typing import Iterable, Optional, Sequence

from colorama import Fore, Style, init

# Initialize colorama for cross-platform support
init(autoreset=True)


def log_progress(
    stage: str,
    epoch: int,
    epochs: int,
    loss: float,
    best_loss: float,
    eps_u: Optional[float] = None
) -> None:
    """
    Log one training progress line in CYAN.

    Args:
        stage: Stage name (e.g. "primary seed=0").
        epoch: Current epoch.
        epochs: Epoch budget of the stage.
        loss: Loss at the current epoch.
        best_loss: Smallest loss recorded so far.
        eps_u: Optional relative solution error on the training set.
    """
    error_info = f"  eps_u={eps_u:.3e}" if eps_u is not None else ""
    print(
        f"{Fore.CYAN}[{stage}] epoch {epoch:>7,}/{epochs:,}  "
        f"loss={loss:.6e}  best={best_loss:.6e}{error_info}{Style.RESET_ALL}"
    )


def log_summary(title: str, rows: Sequence[tuple[str, str]]) -> None:
    """
    Log a per-run result block in YELLOW.

    Args:
        title: Block title (run label and seed).
        rows: (name, formatted value) pairs.
    """
    print(f"\n{Fore.YELLOW}{'=' * 80}")
    print(f"{Fore.YELLOW}[RUN SUMMARY] {title}")
    print(f"{Fore.YELLOW}{'=' * 80}")
    for name, value in rows:
        print(f"{Fore.YELLOW}  {name:<22}{value}")
    print(f"{Fore.YELLOW}{'=' * 80}{Style.RESET_ALL}\n")


def log_table(title: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    """
    Log an aggregate table in GREEN.

    Args:
        title: Table label.
        header: Column names.
        rows: Formatted cells per row.
    """
    rows = [list(r) for r in rows]
    widths = [
        max(len(str(col)), *(len(str(r[i])) for r in rows)) if rows else len(str(col))
        for i, col in enumerate(header)
    ]
    print(f"\n{Fore.GREEN}{'=' * 80}")
    print(f"{Fore.GREEN}[TABLE] {title}")
    print(f"{Fore.GREEN}{'=' * 80}")
    print(f"{Fore.GREEN}" + "  ".join(str(c).ljust(w) for c, w in zip(header, widths)))
    for row in rows:
        print(f"{Fore.GREEN}" + "  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
    print(f"{Fore.GREEN}{'=' * 80}{Style.RESET_ALL}\n")


def log_check(name: str, passed: bool, detail: str = "") -> None:
    """
    Log one self-check result, GREEN when passed and RED otherwise.

    Args:
        name: Check name.
        passed: Outcome.
        detail: Measured quantity vs tolerance.
    """
    color = Fore.GREEN if passed else Fore.RED
    status = "PASS" if passed else "FAIL"
    print(f"{color}[{status}] {name}  {detail}{Style.RESET_ALL}")


def log_error(message: str, details: str = "") -> None:
    """
    Log error message in RED.

    Args:
        message: The error message.
        details: Optional detailed error information.
    """
    print(f"\n{Fore.RED}{'=' * 80}")
    print(f"{Fore.RED}[ERROR]")
    print(f"{Fore.RED}{'=' * 80}")
    print(f"{Fore.RED}{message}")
    if details:
        print(f"{Fore.RED}\nDetails:")
        print(f"{Fore.RED}{details}")
    print(f"{Fore.RED}{'=' * 80}{Style.RESET_ALL}\n")


def log_warning(message: str) -> None:
    """
    Log warning message in MAGENTA.

    Used for recoverable conditions (e.g. a run without enough seeds for a
    standard deviation).

    Args:
        message: The warning message.
    """
    print(f"{Fore.MAGENTA}[WARNING] {message}{Style.RESET_ALL}")


def log_info(message: str) -> None:
    """
    Log informational message (no color).

    Args:
        message: The informational message.
    """
    print(f"[INFO] {message}")

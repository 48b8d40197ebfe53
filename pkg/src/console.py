"""Console and logging shared by the CLI and the library modules.

stdout is kept for machine-readable output (threshold sizes, stats JSON);
everything meant for a human goes to stderr through rich.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

console = Console(stderr=True)


def setup_logging(verbose: bool = False) -> None:
    """Route the `src` loggers through a RichHandler on the shared console."""
    level = logging.DEBUG if verbose else logging.INFO
    root = logging.getLogger("src")
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = RichHandler(console=console, show_path=False, rich_tracebacks=True)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.propagate = False

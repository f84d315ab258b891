"""
Logging setup for the CLI and library modules
Library code logs through logging.getLogger(__name__); only the CLI configures handlers
"""

import logging
import sys

LOG_FORMAT = "%(message)s"
VERBOSE_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(verbose: bool = False) -> logging.Logger:
    """Attach a single stream handler to the `app` logger"""
    root = logging.getLogger("app")
    root.setLevel(logging.DEBUG if verbose else logging.INFO)

    # Re-running the CLI in-process (tests) must not stack handlers
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(VERBOSE_FORMAT if verbose else LOG_FORMAT))
    root.addHandler(handler)
    root.propagate = False
    return root

#!/usr/bin/env python3
"""Main entry point for mbo-lab."""

import logging
import sys

from rich.console import Console

from config import config
from core.errors import MboLabError
from ui.cli import CLI

logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    """Main function."""
    console = Console(stderr=True)
    if not config.validate():
        console.print("[red]Error: invalid MBO_* environment settings.[/red]")
        console.print("Check MBO_THREADS, MBO_EXACT_MAX_N, MBO_OVERSAMPLE, MBO_BLOWUP_FACTOR and MBO_LOG_LEVEL.")
        return 2

    cli = CLI()
    try:
        return cli.run(argv)
    except KeyboardInterrupt:
        console.print("\n\nInterrupted")
        return 130
    except MboLabError as e:
        console.print(f"\n\nError: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception("unexpected failure")
        console.print(f"\n\nError: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())

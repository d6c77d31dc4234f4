"""
Command-line entry point.

Every subcommand prints one JSON object on stdout. Failures print an error
payload on stderr and exit with status 1; usage errors exit with status 2.
"""

import argparse
import json
import sys
from typing import List, Optional

from .commands import COMMANDS
from .config import logging_settings
from .models import ErrorResponse
from .utils.errors import EtNetError
from .utils.logging import configure, logger


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etnet",
        description="Similarity learning, anomaly scoring and clustering for event-triggered time series",
    )
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def _fail(payload: ErrorResponse) -> int:
    sys.stderr.write(json.dumps(payload.model_dump(), sort_keys=True) + "\n")
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure(args.log_level or logging_settings().get("level"))
        args.handler(args)
    except EtNetError as e:
        return _fail(ErrorResponse(**e.to_dict()))
    except Exception as e:
        logger.exception("Unexpected failure")
        return _fail(
            ErrorResponse(error=str(e), error_type=type(e).__name__, details={})
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

This module parses the command line, configures logging and maps failures
to exit codes: 1 for invalid input, 2 for internal errors.
"""

import sys
from collections.abc import Sequence

from pydantic import ValidationError

from src.domain.exceptions import DomainError, WorkloadValidationError
from src.infrastructure.cli.commands import build_parser
from src.shared.logging import bind_run_context, clear_run_context, configure_logging, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_INTERNAL = 2

# Exception handlers, first match wins.
EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (WorkloadValidationError, EXIT_INVALID_INPUT),
    (ValidationError, EXIT_INVALID_INPUT),
    (OSError, EXIT_INVALID_INPUT),
    (ValueError, EXIT_INVALID_INPUT),
    (DomainError, EXIT_INTERNAL),
    (Exception, EXIT_INTERNAL),
)


def exit_code_for(error: BaseException) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code
    return EXIT_INTERNAL


def cli_main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand.

    Args:
        argv: Arguments without the program name; ``sys.argv[1:]`` when None.

    Returns:
        The exit code. Usage errors keep argparse's own code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return exit_request.code if isinstance(exit_request.code, int) else EXIT_INVALID_INPUT

    configure_logging(args.log_level)
    bind_run_context(
        command=args.command,
        seed=getattr(args, "seed", None),
        epoch_length=getattr(args, "epoch_len", None),
    )
    try:
        return args.handler(args)
    except Exception as error:
        code = exit_code_for(error)
        logger.error("cli_failed", error=str(error), kind=type(error).__name__, exit_code=code)
        print(f"{parser.prog} {args.command}: {error}", file=sys.stderr)
        return code
    finally:
        clear_run_context()


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

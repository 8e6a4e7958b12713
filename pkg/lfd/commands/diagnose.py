"""
lfd diagnose command.

Parse a moment file and run the full diagnostics over every date.
"""

import logging
from typing import Any

from lfd.cli import LFDError, emit, run_config
from linfac.io.moment_file import MomentFileError, parse_moment_file
from linfac.io.report import DiagnosticsError, render_text, run_diagnostics, to_json

logger = logging.getLogger(__name__)


def diagnose_command(args: Any) -> int:
    """
    Execute the diagnose command.

    Returns:
        The run's exit status (0 ok, 1 data errors, 3 implication violations)
    """
    config = run_config(args)
    try:
        panel = parse_moment_file(args.file)
    except MomentFileError as e:
        raise LFDError(f"{args.file}: {e}") from e

    try:
        output = run_diagnostics(panel, config)
    except DiagnosticsError as e:
        raise LFDError(str(e)) from e

    emit(to_json(output) if config.output_format == "json" else render_text(output), args)
    return output.exit_code

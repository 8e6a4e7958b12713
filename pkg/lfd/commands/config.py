"""
lfd config command.

Print the default configuration as a commented TOML document.
"""

from typing import Any

from lfd.cli import emit
from linfac.config import default_config_toml


def config_command(args: Any) -> int:
    """Execute the config command."""
    emit(default_config_toml(), args)
    return 0

"""
CLI Module for stakesim

This module contains the command-line interface components for
the stakesim tool.
"""

from .main import main
from .commands import (
    bounds_command,
    check_command,
    conformance_command,
    info_command,
    list_command,
    run_command,
)

__all__ = [
    "main",
    "run_command",
    "check_command",
    "bounds_command",
    "conformance_command",
    "list_command",
    "info_command",
]

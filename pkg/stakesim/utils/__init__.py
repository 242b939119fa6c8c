"""
Utilities Module for stakesim

This module contains configuration, logging, validation,
formatting and the exception hierarchy.
"""

from .exceptions import (
    CheckerInputError,
    ConfigError,
    DelayError,
    DomainError,
    ProgressError,
    StakeSimError,
    UnknownPartyError,
    VacuousBoundError,
)
from .validators import validate_party_id, validate_probability, validate_seed
from .formatters import format_hash, format_chain, format_verdict

__all__ = [
    "StakeSimError",
    "ConfigError",
    "UnknownPartyError",
    "ProgressError",
    "DelayError",
    "DomainError",
    "VacuousBoundError",
    "CheckerInputError",
    "validate_party_id",
    "validate_probability",
    "validate_seed",
    "format_hash",
    "format_chain",
    "format_verdict",
]

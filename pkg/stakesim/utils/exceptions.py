"""
Exception Hierarchy

All errors raised by stakesim derive from StakeSimError so callers
(the CLI in particular) can catch the whole family at once.
"""

from typing import Iterable, List


class StakeSimError(Exception):
    """Base class for every stakesim error."""


class ConfigError(StakeSimError, ValueError):
    """
    A scenario or settings document failed validation.

    Carries every violation found, not only the first one.
    """

    def __init__(self, issues: Iterable[str]):
        self.issues: List[str] = list(issues)
        summary = "; ".join(self.issues) if self.issues else "invalid configuration"
        super().__init__(summary)


class UnknownPartyError(StakeSimError, ValueError):
    """A party id outside the configured party enumeration was queried."""

    def __init__(self, party: int):
        self.party = party
        super().__init__(f"Unknown party: {party}")


class ProgressError(StakeSimError, RuntimeError):
    """A transition was attempted from the wrong progress state."""


class DelayError(StakeSimError, ValueError):
    """A per-recipient delay outside {1, 2} was requested."""


class DomainError(StakeSimError, ValueError):
    """A numeric argument lies outside the domain of an operation."""


class VacuousBoundError(StakeSimError, ValueError):
    """The epsilon condition does not hold, so the requested bound says nothing."""


class CheckerInputError(StakeSimError, ValueError):
    """A checker was asked about an unknown party, slot or window."""

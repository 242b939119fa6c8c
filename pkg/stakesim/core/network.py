"""
Network Messages

Messages, buffered message tuples and per-recipient delay maps.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional

from ..utils.exceptions import DelayError
from .model import Block

ALLOWED_DELAYS = (1, 2)


@dataclass(frozen=True)
class BlockMsg:
    """The only message kind: a flooded block."""
    block: Block


@dataclass
class MsgTuple:
    """
    A buffered message for one recipient.

    ``cd`` counts down on every Increment; the message is delivered by
    the Receive transition once it reaches 0.
    """
    msg: BlockMsg
    rcv: int
    cd: int


class DelayMap:
    """
    Total map from recipient to a delay in {1, 2}.

    Recipients not listed get ``default``.
    """

    def __init__(self, delays: Optional[Mapping[int, int]] = None, default: int = 1):
        self._delays: Dict[int, int] = dict(delays or {})
        self.default = default
        for party, delay in list(self._delays.items()) + [(None, default)]:
            if delay not in ALLOWED_DELAYS:
                target = "default" if party is None else f"party {party}"
                raise DelayError(f"Delay {delay!r} for {target} must be 1 or 2")

    @classmethod
    def uniform(cls, delay: int = 1) -> "DelayMap":
        return cls(default=delay)

    @classmethod
    def for_partition(cls, partition: Iterable[int], fast: int = 1, slow: int = 2) -> "DelayMap":
        """Delay ``fast`` for the partition members, ``slow`` for everybody else."""
        return cls({p: fast for p in partition}, default=slow)

    def __call__(self, party: int) -> int:
        return self._delays.get(party, self.default)

    def __repr__(self) -> str:
        return f"DelayMap({self._delays!r}, default={self.default})"

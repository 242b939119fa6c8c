"""
Lottery

The winner predicate, the honesty map and slot classification.

Draws are derived by hashing (seed, party, slot), so the predicate is a
pure function: repeated or reordered queries always agree, and any party
(the adversary included) may query future slots.
"""

import hashlib
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..utils.config_manager import ScenarioConfig
from ..utils.exceptions import CheckerInputError, ConfigError, UnknownPartyError
from .model import GENESIS_BID

_UNIT = float(1 << 64)


class LotteryModel(ABC):
    """Abstract winner predicate over a fixed party enumeration."""

    def __init__(self, parties: Iterable[int]):
        self.parties: Tuple[int, ...] = tuple(parties)
        self._known: FrozenSet[int] = frozenset(self.parties)

    def _check_party(self, party: int) -> None:
        if party not in self._known:
            raise UnknownPartyError(party)

    def winner(self, party: int, sl: int) -> bool:
        """
        Whether ``party`` wins slot ``sl``.

        Slot 0 belongs to the genesis block and is never won.

        Raises:
            UnknownPartyError: party is not in the enumeration
        """
        self._check_party(party)
        if sl <= 0:
            return False
        return self._draw(party, sl)

    def is_winner(self, party: int, sl: int) -> bool:
        """Like winner, but unknown parties simply do not win."""
        try:
            return self.winner(party, sl)
        except UnknownPartyError:
            return False

    def winners(self, sl: int) -> List[int]:
        """Parties winning ``sl``, in enumeration order."""
        return [p for p in self.parties if self.winner(p, sl)]

    @abstractmethod
    def _draw(self, party: int, sl: int) -> bool:
        ...


class BernoulliLottery(LotteryModel):
    """Independent per-slot wins with probability q[p] for party p."""

    def __init__(self, q: Mapping[int, float], seed: int):
        super().__init__(q.keys())
        self.q = dict(q)
        self.seed = seed

    def uniform(self, party: int, sl: int) -> float:
        """The [0, 1) draw for (party, slot)."""
        digest = hashlib.blake2b(
            struct.pack("<QQQ", self.seed, party, sl), digest_size=8
        ).digest()
        return int.from_bytes(digest, "little") / _UNIT

    def _draw(self, party: int, sl: int) -> bool:
        q = self.q[party]
        if q <= 0.0:
            return False
        return self.uniform(party, sl) < q


class ScriptedLottery(LotteryModel):
    """An explicit table of (party, slot) wins."""

    def __init__(self, parties: Iterable[int], wins: Iterable[Tuple[int, int]]):
        super().__init__(parties)
        self.wins: FrozenSet[Tuple[int, int]] = frozenset((int(p), int(s)) for p, s in wins)

    def _draw(self, party: int, sl: int) -> bool:
        return (party, sl) in self.wins


class HonestyMap:
    """
    Static corruption: who is honest, fixed at configuration.

    The genesis baker (party 0) is always honest.
    """

    def __init__(self, honest: Mapping[int, bool]):
        self._honest: Dict[int, bool] = dict(honest)
        if not any(self._honest.values()):
            raise ConfigError(["At least one honest party is required"])
        self._honest[GENESIS_BID] = True

    def is_honest(self, party: int) -> bool:
        if party not in self._honest:
            raise UnknownPartyError(party)
        return self._honest[party]

    __call__ = is_honest

    @property
    def honest(self) -> List[int]:
        return [p for p, h in self._honest.items() if h and p != GENESIS_BID]

    @property
    def corrupted(self) -> List[int]:
        return [p for p, h in self._honest.items() if not h]

    def to_dict(self) -> Dict[int, bool]:
        return {p: h for p, h in self._honest.items() if p != GENESIS_BID}


@dataclass(frozen=True)
class SlotClass:
    """Classification of one slot; super implies lucky."""
    lucky: bool
    super: bool
    adversarial: bool


def classify_slot(sl: int, lottery: LotteryModel, honesty: HonestyMap,
                  parties: Optional[Sequence[int]] = None) -> SlotClass:
    """
    Classify a slot from its winners.

    Lucky: at least one honest winner. Super: exactly one honest winner.
    Adversarial: at least one corrupted winner.
    """
    honest_wins = 0
    adversarial = False
    for party in parties if parties is not None else lottery.parties:
        if lottery.winner(party, sl):
            if honesty.is_honest(party):
                honest_wins += 1
            else:
                adversarial = True
    return SlotClass(lucky=honest_wins >= 1, super=honest_wins == 1, adversarial=adversarial)


def honest_advantage(sl_lo: int, sl_hi: int, lottery: LotteryModel, honesty: HonestyMap,
                     parties: Optional[Sequence[int]] = None) -> int:
    """Lucky slots minus adversarial slots over the closed interval [sl_lo, sl_hi]."""
    advantage = 0
    for sl in range(max(sl_lo, 0), sl_hi + 1):
        cls = classify_slot(sl, lottery, honesty, parties)
        advantage += int(cls.lucky) - int(cls.adversarial)
    return advantage


class SlotLedger:
    """
    Slot classifications for slots 0..last with prefix sums.

    Interval counts over closed [lo, hi] are O(1). An interval with
    hi < lo is empty and counts 0; lo below 0 is clamped to 0.
    """

    def __init__(self, lottery: LotteryModel, honesty: HonestyMap, last: int):
        self.last = last
        self.classes: List[SlotClass] = [
            classify_slot(sl, lottery, honesty) for sl in range(last + 1)
        ]
        self.lucky = np.array([c.lucky for c in self.classes], dtype=np.int64)
        self.super = np.array([c.super for c in self.classes], dtype=np.int64)
        self.adversarial = np.array([c.adversarial for c in self.classes], dtype=np.int64)
        self._prefix = {
            name: np.concatenate(([0], np.cumsum(arr)))
            for name, arr in (("lucky", self.lucky), ("super", self.super), ("adversarial", self.adversarial))
        }

    def _count(self, name: str, lo: int, hi: int) -> int:
        lo = max(lo, 0)
        if hi < lo:
            return 0
        if hi > self.last:
            raise CheckerInputError(f"Slot {hi} lies beyond the classified range 0..{self.last}")
        prefix = self._prefix[name]
        return int(prefix[hi + 1] - prefix[lo])

    def lucky_count(self, lo: int, hi: int) -> int:
        return self._count("lucky", lo, hi)

    def super_count(self, lo: int, hi: int) -> int:
        return self._count("super", lo, hi)

    def adversarial_count(self, lo: int, hi: int) -> int:
        return self._count("adversarial", lo, hi)

    def honest_advantage(self, lo: int, hi: int) -> int:
        return self.lucky_count(lo, hi) - self.adversarial_count(lo, hi)

    def advantage_steps(self) -> np.ndarray:
        """Per-slot lucky minus adversarial, as an int64 array."""
        return self.lucky - self.adversarial

    def __getitem__(self, sl: int) -> SlotClass:
        return self.classes[sl]


def stake_to_probability(alpha: float, f: float) -> float:
    """
    Per-slot win probability of a party holding relative stake alpha.

    Uses q = 1 - (1 - f)^alpha for active-slot coefficient f.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError([f"Relative stake {alpha} out of range [0, 1]"])
    return 1.0 - (1.0 - f) ** alpha


def win_probabilities(cfg: ScenarioConfig) -> Dict[int, float]:
    """Per-party q, derived from stake when the scenario gives stake."""
    if all(p.q is not None for p in cfg.parties):
        return {p.id: float(p.q) for p in cfg.parties}
    total = sum(p.stake or 0.0 for p in cfg.parties)
    f = cfg.lottery.active_slot_coefficient
    return {p.id: stake_to_probability((p.stake or 0.0) / total, f) for p in cfg.parties}


def build_lottery(cfg: ScenarioConfig, seed: int) -> LotteryModel:
    """
    Build the scenario's lottery.

    Args:
        cfg: Scenario
        seed: Lottery seed stream

    Returns:
        LotteryModel
    """
    if cfg.lottery.type == "scripted":
        return ScriptedLottery(cfg.party_ids, cfg.lottery.wins)
    return BernoulliLottery(win_probabilities(cfg), seed)


def build_honesty(cfg: ScenarioConfig) -> HonestyMap:
    return HonestyMap(cfg.honest_map)

"""
Adversary

The adversarial interface and the built-in strategies.

One strategy instance acts for every corrupted party jointly. It is
activated once per Receive and once per Bake transition with a read-only
view of the whole global state, and emits (message, delay map) pairs.
"""

import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from ..utils.config_manager import ScenarioConfig
from ..utils.exceptions import ConfigError
from ..utils.logger import get_logger
from .blocktree import IndexedTree
from .lottery import HonestyMap, LotteryModel
from .model import DEFAULT_HASH_WIDTH, GENESIS, Block, hash_block
from .network import BlockMsg, DelayMap, MsgTuple
from .parties import LocalState

logger = get_logger()

Emission = List[Tuple[BlockMsg, DelayMap]]


@dataclass(frozen=True)
class AdversaryContext:
    """
    Read-only view handed to the strategy. The sequences are shared
    with the world and must not be mutated.

    Attributes:
        slot: Current slot
        new_msgs: Messages delivered to corrupted parties in this step
        msg_pool: In-flight message tuples with their delays
        history: Every message sent so far, in order
        lottery: Winner predicate (any party, any slot)
        honesty: Honesty map
        exec_order: Current execution order
        state_map: Honest local states by party id
        horizon: Last simulated slot
        width: Hash width
    """
    slot: int
    new_msgs: Tuple[BlockMsg, ...]
    msg_pool: Sequence[MsgTuple]
    history: Sequence[BlockMsg]
    lottery: LotteryModel
    honesty: HonestyMap
    exec_order: Tuple[int, ...]
    state_map: Mapping[int, Optional[LocalState]]
    horizon: int
    width: int = DEFAULT_HASH_WIDTH

    @classmethod
    def build(cls, slot: int, new_msgs: Sequence[BlockMsg], msg_pool: Sequence[MsgTuple],
              history: Sequence[BlockMsg], lottery: LotteryModel, honesty: HonestyMap,
              exec_order: Sequence[int], state_map: Dict[int, Optional[LocalState]],
              horizon: int, width: int) -> "AdversaryContext":
        return cls(
            slot=slot,
            new_msgs=tuple(new_msgs),
            msg_pool=msg_pool,
            history=history,
            lottery=lottery,
            honesty=honesty,
            exec_order=tuple(exec_order),
            state_map=MappingProxyType(state_map),
            horizon=horizon,
            width=width,
        )

    @property
    def corrupted(self) -> List[int]:
        return [p for p in self.exec_order if not self.honesty.is_honest(p)]

    @property
    def honest(self) -> List[int]:
        return [p for p in self.exec_order if self.honesty.is_honest(p)]

    def corrupted_winners(self, sl: int) -> List[int]:
        return [p for p in self.corrupted if self.lottery.winner(p, sl)]

    def honest_heads(self, sl: int) -> List[Block]:
        """Distinct heads of the honest best chains at ``sl``, in execution order."""
        heads: List[Block] = []
        for party in self.honest:
            st = self.state_map.get(party)
            if st is None:
                continue
            head = st.tree.best_head(sl)
            if head not in heads:
                heads.append(head)
        return heads


class AdversaryStrategy(ABC):
    """
    Base class for strategies.

    ``on_rcv`` and ``on_bake`` return the messages to flood together with
    the new strategy state. ``schedule`` picks the execution order when
    the scheduler policy is adversarial.
    """

    name = "abstract"

    def initial_state(self) -> Any:
        return None

    @abstractmethod
    def on_rcv(self, ctx: AdversaryContext, state: Any) -> Tuple[Emission, Any]:
        ...

    @abstractmethod
    def on_bake(self, ctx: AdversaryContext, state: Any) -> Tuple[Emission, Any]:
        ...

    def schedule(self, ctx: AdversaryContext, exec_order: Sequence[int]) -> List[int]:
        """Honest parties first (order kept), corrupted parties last."""
        honest = [p for p in exec_order if ctx.honesty.is_honest(p)]
        corrupted = [p for p in exec_order if not ctx.honesty.is_honest(p)]
        return honest + corrupted


class NoopStrategy(AdversaryStrategy):
    """Never sends anything."""

    name = "noop"

    def on_rcv(self, ctx: AdversaryContext, state: Any) -> Tuple[Emission, Any]:
        return [], state

    def on_bake(self, ctx: AdversaryContext, state: Any) -> Tuple[Emission, Any]:
        return [], state


@dataclass
class WithholdState:
    public: Optional[IndexedTree] = None
    seen: int = 0
    private: List[Block] = field(default_factory=list)
    base_length: int = 0
    public_length_at_start: int = 0
    released: int = 0


class WithholdStrategy(AdversaryStrategy):
    """
    Private-chain attack.

    Corrupted winners extend a private fork that starts at the public best
    head. Once the public chain has grown since the fork started, the fork
    is released when it is longer than the public chain by more than
    ``release_lead`` blocks. A fork that fell behind is abandoned unless
    the next ``lookahead`` slots promise enough corrupted wins over lucky
    slots to catch up. Everything still private is released one slot
    before the horizon. Uses lottery lookahead.
    """

    name = "withhold"

    def __init__(self, release_lead: int = 0, lookahead: int = 2,
                 partition: Optional[Sequence[int]] = None):
        if release_lead < 0 or lookahead < 0:
            raise ConfigError(["withhold needs release_lead >= 0 and lookahead >= 0"])
        self.release_lead = release_lead
        self.lookahead = lookahead
        self.partition = list(partition) if partition is not None else None

    def initial_state(self) -> WithholdState:
        return WithholdState()

    def _delays(self) -> DelayMap:
        if self.partition is None:
            return DelayMap.uniform(1)
        return DelayMap.for_partition(self.partition)

    def _sync(self, ctx: AdversaryContext, state: WithholdState) -> IndexedTree:
        if state.public is None:
            state.public = IndexedTree(ctx.lottery.is_winner, ctx.width)
        for msg in ctx.history[state.seen:]:
            state.public.extend(msg.block)
        state.seen = len(ctx.history)
        return state.public

    def _outlook(self, ctx: AdversaryContext) -> int:
        gain = 0
        for sl in range(ctx.slot + 1, min(ctx.slot + self.lookahead, ctx.horizon) + 1):
            winners = [p for p in ctx.lottery.parties if ctx.lottery.winner(p, sl)]
            if any(not ctx.honesty.is_honest(p) for p in winners):
                gain += 1
            if any(ctx.honesty.is_honest(p) for p in winners):
                gain -= 1
        return gain

    def on_rcv(self, ctx: AdversaryContext, state: WithholdState) -> Tuple[Emission, WithholdState]:
        self._sync(ctx, state)
        return [], state

    def on_bake(self, ctx: AdversaryContext, state: WithholdState) -> Tuple[Emission, WithholdState]:
        public = self._sync(ctx, state)
        public_link = public.best_link(ctx.slot)
        public_length = public_link.length if public_link is not None else 1

        winners = ctx.corrupted_winners(ctx.slot)
        if winners:
            if not state.private:
                base = public.best_link(ctx.slot - 1)
                head = base.block if base is not None else GENESIS
                state.base_length = base.length if base is not None else 1
                state.public_length_at_start = public_length
            else:
                head = state.private[-1]
            state.private.append(
                Block(pred=hash_block(head, ctx.width), slot=ctx.slot, txs=b"", bid=winners[0])
            )

        if not state.private:
            return [], state

        fork_length = state.base_length + len(state.private)
        release = ctx.slot >= ctx.horizon - 1
        if not release and public_length > state.public_length_at_start:
            if fork_length > public_length + self.release_lead:
                release = True
            elif fork_length < public_length and fork_length + self._outlook(ctx) <= public_length:
                logger.debug("withhold: abandoning %d private block(s) at slot %d",
                             len(state.private), ctx.slot)
                state.private = []
                return [], state

        if not release:
            return [], state

        delays = self._delays()
        emitted = [(BlockMsg(block), delays) for block in state.private]
        state.released += len(state.private)
        state.private = []
        return emitted, state


class EquivocateStrategy(AdversaryStrategy):
    """
    On every corrupted winning slot, bake one block on top of each distinct
    honest best-chain head (same slot, same baker, different pred).
    No lookahead.
    """

    name = "equivocate"

    def _delays(self) -> DelayMap:
        return DelayMap.uniform(1)

    def on_rcv(self, ctx: AdversaryContext, state: Any) -> Tuple[Emission, Any]:
        return [], state

    def on_bake(self, ctx: AdversaryContext, state: Any) -> Tuple[Emission, Any]:
        winners = ctx.corrupted_winners(ctx.slot)
        if not winners:
            return [], state
        delays = self._delays()
        emitted = [
            (BlockMsg(Block(pred=hash_block(head, ctx.width), slot=ctx.slot, txs=b"", bid=winners[0])), delays)
            for head in ctx.honest_heads(ctx.slot - 1)
        ]
        return emitted, state


class SplitDeliveryStrategy(EquivocateStrategy):
    """Equivocation delivered after one slot to the partition and after two to everybody else."""

    name = "split"

    def __init__(self, partition: Sequence[int]):
        self.partition = list(partition)

    def _delays(self) -> DelayMap:
        return DelayMap.for_partition(self.partition)


class ForgeStrategy(AdversaryStrategy):
    """
    Sends one block carrying an honest party's id at the first slot.
    Only exists to exercise the forging monitor.
    """

    name = "forge"

    def initial_state(self) -> bool:
        return False

    def on_rcv(self, ctx: AdversaryContext, state: bool) -> Tuple[Emission, bool]:
        return [], state

    def on_bake(self, ctx: AdversaryContext, state: bool) -> Tuple[Emission, bool]:
        if state or ctx.slot < 1:
            return [], state
        victim = ctx.honest[0]
        block = Block(pred=hash_block(GENESIS, ctx.width), slot=ctx.slot,
                      txs=struct.pack("<Q", 0xF0F0), bid=victim)
        return [(BlockMsg(block), DelayMap.uniform(1))], True


def strategy_noop() -> AdversaryStrategy:
    return NoopStrategy()


def strategy_withhold(release_lead: int = 0, lookahead: int = 2,
                      partition: Optional[Sequence[int]] = None) -> AdversaryStrategy:
    return WithholdStrategy(release_lead, lookahead, partition)


def strategy_equivocate() -> AdversaryStrategy:
    return EquivocateStrategy()


def strategy_split_delivery(partition: Sequence[int]) -> AdversaryStrategy:
    return SplitDeliveryStrategy(partition)


def build_strategy(cfg: ScenarioConfig) -> AdversaryStrategy:
    """
    Build the scenario's strategy.

    Raises:
        ConfigError: unknown strategy or bad parameters
    """
    name = cfg.adversary.strategy
    params = cfg.adversary.params
    if name == "noop":
        return strategy_noop()
    if name == "withhold":
        return strategy_withhold(
            release_lead=int(params.get("release_lead", 0)),
            lookahead=int(params.get("lookahead", 2)),
            partition=params.get("partition"),
        )
    if name == "equivocate":
        return strategy_equivocate()
    if name == "split":
        partition = params.get("partition")
        if partition is None:
            partition = [p for p in cfg.party_ids if cfg.honest_map[p]][:1]
        return strategy_split_delivery(partition)
    if name == "forge":
        return ForgeStrategy()
    raise ConfigError([f"Unknown adversary strategy '{name}'"])

"""
World

Global state, the two flooding functionalities, the atomic transitions
(Receive, Bake, Increment and the two permutations) and the slot driver
that produces a Trace.

Delays: a flooded message enters the buffer with cd 1 (or the delay
chosen by the adversary), every Increment decrements cd and Receive
delivers the tuples whose cd reached 0. An honest block sent in slot sl
is therefore delivered during slot sl + 1.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..utils.config_manager import ScenarioConfig
from ..utils.exceptions import DelayError, ProgressError, UnknownPartyError
from ..utils.logger import get_logger
from .adversary import AdversaryContext, AdversaryStrategy, build_strategy
from .lottery import HonestyMap, LotteryModel, SlotClass, SlotLedger, build_honesty, build_lottery
from .model import GENESIS, Block, Chain, ChainLink, hash_block
from .network import ALLOWED_DELAYS, BlockMsg, DelayMap, MsgTuple
from .parties import LocalState, get_tx_selector, honest_bake, honest_rcv, local_state_init

logger = get_logger()

COLLISION = "collision"
FORGING = "forging"
KNOWLEDGE = "knowledge"
MONITORS = (COLLISION, FORGING, KNOWLEDGE)

# Materialized chains kept per trace; links are walked again past this.
CHAIN_CACHE_SIZE = 2048


class Progress(Enum):
    READY = "ready"
    DELIVERED = "delivered"
    BAKED = "baked"


class TransitionKind(Enum):
    RECEIVE = "receive"
    BAKE = "bake"
    INCREMENT = "increment"
    PERMUTE_EXEC = "permute_exec"
    PERMUTE_BUFFER = "permute_buffer"


@dataclass
class GlobalState:
    """Everything the protocol run consists of."""
    clock: int
    msg_buffer: List[MsgTuple]
    state_map: Dict[int, Optional[LocalState]]
    history: List[BlockMsg]
    adv_state: Any
    exec_order: List[int]
    progress: Progress = Progress.READY


@dataclass(frozen=True)
class HistoryEntry:
    slot: int
    block: Block
    by_adversary: bool


@dataclass
class MonitorEvent:
    monitor: str
    slot: int
    detail: Dict[str, Any]


@dataclass
class Trace:
    """
    Everything the property checkers need from one run.

    ``snapshots[p][sl]`` is party p's best chain over slots < sl as seen
    at the Ready state of slot sl (slot 0 reads the genesis chain), for
    sl in 0..horizon. ``final[p]`` is the best chain after the last slot.
    """
    name: str
    horizon: int
    width: int
    parties: List[int]
    honest: List[int]
    seeds: Dict[str, int]
    lottery: LotteryModel
    honesty: HonestyMap
    ledger: SlotLedger
    snapshots: Dict[int, List[ChainLink]]
    final: Dict[int, ChainLink]
    history_log: List[HistoryEntry]
    monitor_events: List[MonitorEvent]
    block_store: Dict[int, Block]
    knowledge_monitored: bool = True

    def __post_init__(self) -> None:
        self._materialize = lru_cache(maxsize=CHAIN_CACHE_SIZE)(ChainLink.to_chain)

    def _party_snapshots(self, party: int) -> List[ChainLink]:
        if party not in self.snapshots:
            raise UnknownPartyError(party)
        return self.snapshots[party]

    def snapshot(self, party: int, sl: int) -> Chain:
        """Head-first chain held by ``party`` at the Ready state of ``sl``."""
        return self._materialize(self.snapshot_link(party, sl))

    def snapshot_link(self, party: int, sl: int) -> ChainLink:
        links = self._party_snapshots(party)
        if not 0 <= sl < len(links):
            raise IndexError(f"No snapshot for slot {sl} (range 0..{len(links) - 1})")
        return links[sl]

    def snapshot_length(self, party: int, sl: int) -> int:
        return self.snapshot_link(party, sl).length

    def final_chain(self, party: int) -> Chain:
        return self.final[party].to_chain()

    @property
    def slot_classes(self) -> List[SlotClass]:
        return self.ledger.classes[: self.horizon + 1]

    def first_violation(self, monitor: str) -> Optional[int]:
        for event in self.monitor_events:
            if event.monitor == monitor:
                return event.slot
        return None

    def monitor_flags(self, sl: int) -> List[str]:
        """Monitors whose first violation happened at or before ``sl``."""
        flags = []
        for monitor in MONITORS:
            first = self.first_violation(monitor)
            if first is not None and first <= sl:
                flags.append(monitor)
        return flags

    @property
    def history_blocks(self) -> List[Block]:
        return [entry.block for entry in self.history_log]


class World:
    """
    Drives one simulation.

    The driver exposes ``step`` for custom harnesses and ``run`` for the
    standard slot loop (permutations only at the three points between
    transitions).
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.seeds = cfg.seeds.resolved()
        self.width = cfg.hash_width
        self.lottery = build_lottery(cfg, self.seeds["lottery"])
        self.honesty = build_honesty(cfg)
        self.winner = self.lottery.is_winner
        self.strategy: AdversaryStrategy = build_strategy(cfg)
        self.tx_selector = get_tx_selector(cfg.tx_selector)
        self.rng = np.random.default_rng(self.seeds["scheduler"])

        self.state = GlobalState(
            clock=0,
            msg_buffer=[],
            state_map={
                p.id: local_state_init(p.id, cfg.tree_impl_for(p.id), self.winner, self.width)
                if p.honest else None
                for p in cfg.parties
            },
            history=[],
            adv_state=self.strategy.initial_state(),
            exec_order=list(cfg.party_ids),
        )

        self.history_log: List[HistoryEntry] = []
        self.monitor_events: List[MonitorEvent] = []
        self._known_hashes: Dict[int, Block] = {hash_block(GENESIS, self.width): GENESIS}
        self._sent: Set[Block] = {GENESIS}
        self._ready_counts: Dict[int, int] = {}
        self._fired: Set[str] = set()

    @property
    def honest_parties(self) -> List[int]:
        return [p for p in self.cfg.party_ids if self.honesty.is_honest(p)]

    def _honest(self, party: int) -> bool:
        try:
            return self.honesty.is_honest(party)
        except UnknownPartyError:
            return False

    def _record(self, monitor: str, detail: Dict[str, Any]) -> None:
        self.monitor_events.append(MonitorEvent(monitor, self.state.clock, detail))
        if monitor not in self._fired:
            self._fired.add(monitor)
            logger.log_monitor_violation(monitor, self.state.clock, detail)

    def _append_history(self, msg: BlockMsg, by_adversary: bool) -> None:
        block = msg.block
        h = hash_block(block, self.width)
        other = self._known_hashes.get(h)
        if other is None:
            self._known_hashes[h] = block
        elif other != block:
            self._record(COLLISION, {"hash": f"{h:x}", "slots": [other.slot, block.slot]})
        self.state.history.append(msg)
        self._sent.add(block)
        self.history_log.append(HistoryEntry(self.state.clock, block, by_adversary))

    def flood_msgs(self, msgs: Sequence[BlockMsg]) -> None:
        """Honest flooding: every party receives each message with delay 1."""
        for msg in msgs:
            for party in self.state.exec_order:
                self.state.msg_buffer.append(MsgTuple(msg, party, 1))
            self._append_history(msg, by_adversary=False)

    def flood_msgs_adv(self, pairs: Sequence[Tuple[BlockMsg, DelayMap]]) -> None:
        """
        Adversarial flooding with per-recipient delays.

        Raises:
            DelayError: a delay outside {1, 2}
        """
        for msg, delays in pairs:
            tuples = []
            for party in self.state.exec_order:
                cd = delays(party)
                if cd not in ALLOWED_DELAYS:
                    raise DelayError(f"Delay {cd!r} for party {party} must be 1 or 2")
                tuples.append(MsgTuple(msg, party, cd))
            block = msg.block
            if self._honest(block.bid) and block not in self._sent:
                self._record(FORGING, {"slot": block.slot, "bid": block.bid})
            self.state.msg_buffer.extend(tuples)
            self._append_history(msg, by_adversary=True)

    def _context(self, new_msgs: Sequence[BlockMsg]) -> AdversaryContext:
        st = self.state
        return AdversaryContext.build(
            slot=st.clock, new_msgs=new_msgs, msg_pool=st.msg_buffer, history=st.history,
            lottery=self.lottery, honesty=self.honesty, exec_order=st.exec_order,
            state_map=st.state_map, horizon=self.cfg.horizon, width=self.width,
        )

    def _expect(self, progress: Progress, transition: TransitionKind) -> None:
        if self.state.progress is not progress:
            raise ProgressError(
                f"{transition.value} requires progress {progress.value}, "
                f"current progress is {self.state.progress.value}"
            )

    def _receive(self) -> None:
        st = self.state
        self._expect(Progress.READY, TransitionKind.RECEIVE)
        due: Dict[int, List[BlockMsg]] = {p: [] for p in st.exec_order}
        remaining: List[MsgTuple] = []
        for item in st.msg_buffer:
            if item.cd == 0:
                due.setdefault(item.rcv, []).append(item.msg)
            else:
                remaining.append(item)
        st.msg_buffer = remaining

        corrupted_msgs = [
            msg for p in st.exec_order if st.state_map.get(p) is None for msg in due[p]
        ]
        adversary_done = False
        for party in st.exec_order:
            local = st.state_map.get(party)
            if local is not None:
                honest_rcv(due[party], st.clock, local, self.cfg.filter_on_receive, self.winner)
            elif not adversary_done:
                adversary_done = True
                emitted, st.adv_state = self.strategy.on_rcv(self._context(corrupted_msgs), st.adv_state)
                self.flood_msgs_adv(emitted)
        st.progress = Progress.DELIVERED

    def _bake(self) -> None:
        st = self.state
        self._expect(Progress.DELIVERED, TransitionKind.BAKE)
        adversary_done = False
        for party in st.exec_order:
            local = st.state_map.get(party)
            if local is not None:
                msgs, _ = honest_bake(st.clock, self.tx_selector(st.clock, party), local,
                                      self.winner, self.width)
                self.flood_msgs(msgs)
            elif not adversary_done:
                adversary_done = True
                emitted, st.adv_state = self.strategy.on_bake(self._context([]), st.adv_state)
                self.flood_msgs_adv(emitted)
        st.progress = Progress.BAKED

    def _increment(self) -> None:
        st = self.state
        self._expect(Progress.BAKED, TransitionKind.INCREMENT)
        st.clock += 1
        for item in st.msg_buffer:
            item.cd -= 1
        st.progress = Progress.READY

    @staticmethod
    def _check_permutation(perm: Sequence[int], n: int) -> List[int]:
        perm = [int(i) for i in perm]
        if sorted(perm) != list(range(n)):
            raise ValueError(f"{perm} is not a permutation of 0..{n - 1}")
        return perm

    def step(self, kind: TransitionKind, perm: Optional[Sequence[int]] = None) -> GlobalState:
        """
        Apply one atomic transition.

        Args:
            kind: Transition to apply
            perm: Index permutation for PERMUTE_EXEC / PERMUTE_BUFFER

        Returns:
            The updated global state

        Raises:
            ProgressError: Receive, Bake or Increment from the wrong progress
        """
        st = self.state
        if kind is TransitionKind.RECEIVE:
            self._receive()
        elif kind is TransitionKind.BAKE:
            self._bake()
        elif kind is TransitionKind.INCREMENT:
            self._increment()
        elif kind is TransitionKind.PERMUTE_EXEC:
            order = self._check_permutation(perm if perm is not None else [], len(st.exec_order))
            st.exec_order = [st.exec_order[i] for i in order]
        elif kind is TransitionKind.PERMUTE_BUFFER:
            order = self._check_permutation(perm if perm is not None else [], len(st.msg_buffer))
            st.msg_buffer = [st.msg_buffer[i] for i in order]
        return st

    def _permute(self) -> None:
        policy = self.cfg.scheduler
        st = self.state
        if policy == "random":
            self.step(TransitionKind.PERMUTE_EXEC, self.rng.permutation(len(st.exec_order)).tolist())
            self.step(TransitionKind.PERMUTE_BUFFER, self.rng.permutation(len(st.msg_buffer)).tolist())
        elif policy == "adversarial":
            wanted = self.strategy.schedule(self._context([]), list(st.exec_order))
            self.step(TransitionKind.PERMUTE_EXEC, [st.exec_order.index(p) for p in wanted])

    def _snapshot(self, snapshots: Dict[int, List[ChainLink]]) -> None:
        sl = self.state.clock
        for party in self.honest_parties:
            link = self.state.state_map[party].tree.best_link(max(sl - 1, 0))
            snapshots[party].append(link if link is not None else ChainLink(GENESIS))

    def _knowledge_ready(self) -> List[Block]:
        """Blocks honest parties gained since the previous Ready."""
        gained: List[Block] = []
        for party in self.honest_parties:
            tree = self.state.state_map[party].tree
            before = self._ready_counts.get(party, 0)
            gained.extend(tree.blocks_since(before))
            self._ready_counts[party] = len(tree)
        return gained

    def _knowledge_check(self, gained: List[Block]) -> None:
        for party in self.honest_parties:
            tree = self.state.state_map[party].tree
            missing = [b for b in gained if b not in tree]
            if missing:
                self._record(KNOWLEDGE, {"party": party, "missing": len(missing),
                                         "first_missing_slot": missing[0].slot})
                return

    def run(self) -> Trace:
        """Run slots 0..horizon and return the trace."""
        cfg = self.cfg
        logger.log_run_started(cfg.name, cfg.horizon, len(cfg.parties), cfg.seeds.master)
        snapshots: Dict[int, List[ChainLink]] = {p: [] for p in self.honest_parties}

        for _ in range(cfg.horizon + 1):
            self._snapshot(snapshots)
            gained = self._knowledge_ready() if cfg.checks.monitor_knowledge else []
            self._permute()
            self.step(TransitionKind.RECEIVE)
            if cfg.checks.monitor_knowledge:
                self._knowledge_check(gained)
            self._permute()
            self.step(TransitionKind.BAKE)
            self._permute()
            self.step(TransitionKind.INCREMENT)
            logger.log_slot_progress(self.state.clock - 1, cfg.horizon, len(self.history_log))

        final = {}
        for party in self.honest_parties:
            link = self.state.state_map[party].tree.best_link(cfg.horizon)
            final[party] = link if link is not None else ChainLink(GENESIS)

        return Trace(
            name=cfg.name,
            horizon=cfg.horizon,
            width=self.width,
            parties=list(cfg.party_ids),
            honest=self.honest_parties,
            seeds=dict(self.seeds, master=cfg.seeds.master),
            lottery=self.lottery,
            honesty=self.honesty,
            ledger=SlotLedger(self.lottery, self.honesty, cfg.horizon + 1),
            snapshots=snapshots,
            final=final,
            history_log=list(self.history_log),
            monitor_events=list(self.monitor_events),
            block_store=dict(self._known_hashes),
            knowledge_monitored=cfg.checks.monitor_knowledge,
        )


def world_init(cfg: ScenarioConfig) -> World:
    """Initial world: clock 0, empty buffer and history, genesis-only trees, progress Ready."""
    return World(cfg)


def run(cfg: ScenarioConfig) -> Trace:
    return World(cfg).run()

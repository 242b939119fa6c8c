"""
Block Trees

The block-tree interface (init / extend / all blocks / best chain), two
conforming implementations and a conformance harness that exercises the
five correctness conditions:

- Instantiated: a fresh tree holds exactly the genesis block.
- Extendable: extending adds exactly the given block to the member set.
- Valid: every best chain is a valid chain.
- Optimal: no valid chain over the members with slots <= sl is longer.
- Self-contained: the best chain only uses members with slots <= sl.

Both implementations break ties among longest chains with the canonical
rank from ``chain_rank`` so their answers are byte-comparable.
"""

import bisect
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Set, Tuple, Type

import numpy as np

from ..utils.exceptions import ConfigError, UnknownPartyError
from ..utils.logger import get_logger
from .lottery import BernoulliLottery
from .model import (
    DEFAULT_HASH_WIDTH,
    GENESIS,
    Block,
    Chain,
    ChainLink,
    WinnerFn,
    hash_block,
    serialize_block,
    valid_chain,
)

logger = get_logger()

Rank = Tuple[int, int, bytes]


class BlockTree(ABC):
    """
    Abstract block tree owned by a single party.

    Members are stored once (set semantics) in insertion order.
    """

    name = "abstract"

    def __init__(self, winner: WinnerFn, width: int = DEFAULT_HASH_WIDTH):
        self.winner = winner
        self.width = width
        self._members: Set[Block] = set()
        self._order: List[Block] = []
        self._reset()
        self.extend(GENESIS)

    def _wins(self, block: Block) -> bool:
        try:
            return bool(self.winner(block.bid, block.slot))
        except UnknownPartyError:
            return False

    def extend(self, block: Block) -> "BlockTree":
        """Insert a block; re-inserting a member is a no-op."""
        if block in self._members:
            return self
        self._members.add(block)
        self._order.append(block)
        self._insert(block)
        return self

    def all_blocks(self) -> List[Block]:
        return list(self._order)

    def blocks_since(self, n: int) -> List[Block]:
        """Members inserted after the first ``n``."""
        return self._order[n:]

    def __contains__(self, block: object) -> bool:
        return block in self._members

    def __len__(self) -> int:
        return len(self._order)

    def best_chain(self, sl: int) -> Chain:
        link = self.best_link(sl)
        return link.to_chain() if link is not None else ()

    def best_head(self, sl: int) -> Block:
        link = self.best_link(sl)
        return link.block if link is not None else GENESIS

    def best_link(self, sl: int) -> Optional[ChainLink]:
        """Best chain over the members with slot <= sl (negative sl reads as 0)."""
        return self._best_link(max(sl, 0))

    def _reset(self) -> None:
        """Hook for implementation state, called before genesis is inserted."""

    @abstractmethod
    def _insert(self, block: Block) -> None:
        ...

    @abstractmethod
    def _best_link(self, sl: int) -> Optional[ChainLink]:
        ...


class ReferenceTree(BlockTree):
    """
    Keeps the plain pool and recomputes every best chain from scratch.

    For each member (by ascending slot) the longest valid chain ending at
    it is derived from every member whose hash matches its pred, so the
    answer stays optimal even when hashes collide.
    """

    name = "reference"

    def _insert(self, block: Block) -> None:
        pass

    def _best_link(self, sl: int) -> Optional[ChainLink]:
        pool = [b for b in self._order if b.slot <= sl]
        by_hash: Dict[int, List[Block]] = {}
        for b in pool:
            by_hash.setdefault(hash_block(b, self.width), []).append(b)

        best: Dict[Block, ChainLink] = {}
        for b in sorted(pool, key=lambda blk: blk.slot):
            if b == GENESIS:
                best[b] = ChainLink(GENESIS)
                continue
            if not self._wins(b):
                continue
            parent: Optional[ChainLink] = None
            for candidate in by_hash.get(b.pred, ()):
                link = best.get(candidate)
                if link is None or candidate.slot >= b.slot:
                    continue
                if parent is None or link.length > parent.length:
                    parent = link
            if parent is not None:
                best[b] = ChainLink(b, parent)

        chosen: Optional[ChainLink] = None
        chosen_rank: Optional[Rank] = None
        for link in best.values():
            rank = _link_rank(link, self.width)
            if chosen_rank is None or rank < chosen_rank:
                chosen, chosen_rank = link, rank
        return chosen


def _link_rank(link: ChainLink, width: int) -> Rank:
    return (-link.length, hash_block(link.block, width), serialize_block(link.block))


class IndexedTree(BlockTree):
    """
    Incremental tree.

    Blocks are linked to the first member seen for their pred hash.
    Blocks whose pred is not linked yet wait in ``pending`` and are
    connected when the missing ancestor arrives. A frontier of
    (slot, rank) entries with strictly improving rank answers best-chain
    queries with one bisection.
    """

    name = "indexed"

    def _reset(self) -> None:
        self._rep: Dict[int, Block] = {}
        self._children: Dict[int, List[Block]] = {}
        self._links: Dict[Block, ChainLink] = {}
        self.pending: Set[Block] = set()
        self._frontier_slots: List[int] = []
        self._frontier_ranks: List[Rank] = []
        self._frontier_links: List[ChainLink] = []

    def _insert(self, block: Block) -> None:
        h = hash_block(block, self.width)
        if h not in self._rep:
            self._rep[h] = block

        if block == GENESIS:
            self._attach(block, None)
            self._propagate(block)
            return

        self._children.setdefault(block.pred, []).append(block)
        parent = self._rep.get(block.pred)
        if parent is not None and parent in self._links and self._links_to(block, parent):
            self._attach(block, self._links[parent])
            self._propagate(block)
        else:
            self.pending.add(block)

    def _links_to(self, block: Block, parent: Block) -> bool:
        return parent.slot < block.slot and self._wins(block)

    def _attach(self, block: Block, parent: Optional[ChainLink]) -> None:
        link = ChainLink(block, parent)
        self._links[block] = link
        self.pending.discard(block)
        self._update_frontier(block.slot, _link_rank(link, self.width), link)

    def _propagate(self, block: Block) -> None:
        stack = [block]
        while stack:
            current = stack.pop()
            h = hash_block(current, self.width)
            if self._rep.get(h) != current:
                continue
            for child in self._children.get(h, ()):
                if child in self._links or not self._links_to(child, current):
                    continue
                self._attach(child, self._links[current])
                stack.append(child)

    def _update_frontier(self, slot: int, rank: Rank, link: ChainLink) -> None:
        slots, ranks, links = self._frontier_slots, self._frontier_ranks, self._frontier_links
        at = bisect.bisect_right(slots, slot)
        if at > 0 and ranks[at - 1] <= rank:
            return
        if at > 0 and slots[at - 1] == slot:
            at -= 1
            del slots[at], ranks[at], links[at]
        end = at
        while end < len(slots) and ranks[end] >= rank:
            end += 1
        slots[at:end] = [slot]
        ranks[at:end] = [rank]
        links[at:end] = [link]

    def _best_link(self, sl: int) -> Optional[ChainLink]:
        at = bisect.bisect_right(self._frontier_slots, sl)
        if at == 0:
            return None
        return self._frontier_links[at - 1]


class BrokenTree(IndexedTree):
    """Ignores the slot filter. Negative control for the conformance harness only."""

    name = "broken"

    def _best_link(self, sl: int) -> Optional[ChainLink]:
        if not self._frontier_links:
            return None
        return self._frontier_links[-1]


TREE_IMPLEMENTATIONS: Dict[str, Type[BlockTree]] = {
    "reference": ReferenceTree,
    "indexed": IndexedTree,
}

TEST_IMPLEMENTATIONS: Dict[str, Type[BlockTree]] = {
    "broken": BrokenTree,
}


def make_tree(name: str, winner: WinnerFn, width: int = DEFAULT_HASH_WIDTH,
              allow_test_impls: bool = False) -> BlockTree:
    """
    Instantiate a tree implementation by name.

    Raises:
        ConfigError: unknown implementation name
    """
    registry = dict(TREE_IMPLEMENTATIONS)
    if allow_test_impls:
        registry.update(TEST_IMPLEMENTATIONS)
    if name not in registry:
        raise ConfigError([f"Unknown tree implementation '{name}'"])
    return registry[name](winner, width)


def tree_init(name: str, winner: WinnerFn, width: int = DEFAULT_HASH_WIDTH) -> BlockTree:
    return make_tree(name, winner, width)


def extend_tree(tree: BlockTree, block: Block) -> BlockTree:
    return tree.extend(block)


def all_blocks(tree: BlockTree) -> List[Block]:
    return tree.all_blocks()


def best_chain(sl: int, tree: BlockTree) -> Chain:
    return tree.best_chain(sl)


def enumerate_valid_chains(pool: List[Block], sl: int, winner: WinnerFn,
                           width: int = DEFAULT_HASH_WIDTH) -> List[Chain]:
    """
    Every duplicate-free valid chain over the pool members with slot <= sl.

    Chains are grown upward from genesis; every trailing segment of a
    valid chain is valid, so the search only follows valid extensions.
    """
    candidates = [b for b in dict.fromkeys(pool) if b.slot <= sl and b != GENESIS]
    chains: List[Chain] = []
    stack: List[Chain] = [(GENESIS,)]
    while stack:
        chain = stack.pop()
        chains.append(chain)
        head_hash = hash_block(chain[0], width)
        for b in candidates:
            if b.pred != head_hash or b.slot <= chain[0].slot or b in chain:
                continue
            extended = (b,) + chain
            if valid_chain(extended, winner, width):
                stack.append(extended)
    return chains


@dataclass
class ConformanceFailure:
    """First counterexample found by the harness."""
    condition: str
    step: int
    slot: int
    detail: str
    stream: List[Tuple[str, Block]] = field(default_factory=list)


@dataclass
class ConformanceReport:
    impl: str
    seed: int
    n_blocks: int
    queries: int = 0
    oracle_queries: int = 0
    failure: Optional[ConformanceFailure] = None

    @property
    def passed(self) -> bool:
        return self.failure is None

    def to_dict(self) -> dict:
        data = {
            "impl": self.impl,
            "seed": self.seed,
            "n_blocks": self.n_blocks,
            "queries": self.queries,
            "oracle_queries": self.oracle_queries,
            "passed": self.passed,
        }
        if self.failure is not None:
            data["failure"] = {
                "condition": self.failure.condition,
                "step": self.failure.step,
                "slot": self.failure.slot,
                "detail": self.failure.detail,
                "stream": [
                    {"kind": kind, "slot": b.slot, "bid": b.bid, "pred": f"{b.pred:016x}",
                     "hash": f"{hash_block(b, DEFAULT_HASH_WIDTH):016x}"}
                    for kind, b in self.failure.stream
                ],
            }
        return data


CONFORMANCE_PARTIES = (1, 2, 3, 4)
CONFORMANCE_Q = 0.85
_KINDS = ("linked", "unlinked", "future", "duplicate")
_KIND_WEIGHTS = (0.6, 0.12, 0.1, 0.18)


def generate_stream(seed: int, n_blocks: int, winner: WinnerFn,
                    width: int = DEFAULT_HASH_WIDTH) -> List[Tuple[str, Block]]:
    """
    Randomized mixed block stream for the harness.

    Linked blocks extend a random earlier block, unlinked blocks point at
    a random hash, future blocks extend the current longest chain far
    ahead of the queried slots, and duplicates re-send an earlier block.
    Adjacent pairs are swapped at random to model out-of-order arrival.
    """
    rng = np.random.default_rng(seed)
    made: List[Block] = []
    aid = ReferenceTree(winner, width)
    stream: List[Tuple[str, Block]] = []
    top_slot = 0

    for i in range(n_blocks):
        kind = str(rng.choice(_KINDS, p=_KIND_WEIGHTS))
        if kind == "duplicate" and not made:
            kind = "linked"
        txs = i.to_bytes(4, "little")
        bid = int(rng.integers(1, len(CONFORMANCE_PARTIES) + 1))

        if kind == "duplicate":
            block = made[int(rng.integers(0, len(made)))]
        elif kind == "unlinked":
            slot = int(rng.integers(1, top_slot + 3))
            pred = int(rng.integers(0, 2 ** 63)) & ((1 << width) - 1)
            block = Block(pred=pred, slot=slot, txs=txs, bid=bid)
        elif kind == "future":
            parent = aid.best_head(10 ** 9)
            slot = max(parent.slot, top_slot) + int(rng.integers(20, 60))
            while not winner(bid, slot):
                slot += 1
            block = Block(pred=hash_block(parent, width), slot=slot, txs=txs, bid=bid)
        else:
            pool = [GENESIS] + [b for b in made if b.slot <= top_slot + 3]
            parent = pool[int(rng.integers(0, len(pool)))]
            slot = parent.slot + int(rng.integers(1, 4))
            block = Block(pred=hash_block(parent, width), slot=slot, txs=txs, bid=bid)
            top_slot = max(top_slot, slot)

        made.append(block)
        aid.extend(block)
        stream.append((kind, block))

    i = 0
    while i < len(stream) - 1:
        if rng.random() < 0.2:
            stream[i], stream[i + 1] = stream[i + 1], stream[i]
            i += 2
        else:
            i += 1
    return stream


def conformance_check(impl: str, seed: int, n_blocks: int, width: int = DEFAULT_HASH_WIDTH,
                      oracle_limit: int = 25,
                      tree_factory: Optional[Callable[[WinnerFn, int], BlockTree]] = None
                      ) -> ConformanceReport:
    """
    Exercise an implementation against the five correctness conditions.

    Optimal is checked against exhaustive chain enumeration while the
    pool holds at most ``oracle_limit`` blocks, and against the reference
    implementation (length and exact chain) at every query.

    Args:
        impl: Implementation name (reference, indexed or broken)
        seed: Stream seed
        n_blocks: Number of blocks in the stream (>= 1)
        width: Hash width
        oracle_limit: Pool size bound for exhaustive enumeration
        tree_factory: Optional custom constructor instead of ``impl``

    Returns:
        ConformanceReport with the first counterexample, if any
    """
    if n_blocks < 1:
        raise ConfigError(["n_blocks must be >= 1"])

    lottery = BernoulliLottery({p: CONFORMANCE_Q for p in CONFORMANCE_PARTIES}, seed)
    winner = lottery.is_winner
    report = ConformanceReport(impl=impl, seed=seed, n_blocks=n_blocks)

    def build() -> BlockTree:
        if tree_factory is not None:
            return tree_factory(winner, width)
        return make_tree(impl, winner, width, allow_test_impls=True)

    tree = build()
    if set(tree.all_blocks()) != {GENESIS} or tree.best_chain(0) != (GENESIS,):
        report.failure = ConformanceFailure("instantiated", 0, 0, "fresh tree is not genesis-only")
        return report

    stream = generate_stream(seed, n_blocks, winner, width)
    reference = ReferenceTree(winner, width)
    rng = np.random.default_rng(seed ^ 0x5EED)
    top_slot = 0

    def fail(condition: str, step: int, sl: int, detail: str) -> ConformanceReport:
        report.failure = ConformanceFailure(condition, step, sl, detail, stream[: step + 1])
        logger.debug("Conformance failure for %s: %s at step %d", impl, condition, step)
        return report

    for step, (kind, block) in enumerate(stream):
        before = set(tree.all_blocks())
        tree.extend(block)
        reference.extend(block)
        if kind != "future":
            top_slot = max(top_slot, block.slot)

        if set(tree.all_blocks()) != before | {block}:
            return fail("extendable", step, 0, f"member set after inserting slot {block.slot} block is wrong")

        for sl in (int(rng.integers(0, top_slot + 3)), top_slot):
            report.queries += 1
            result = tree.best_chain(sl)
            members = set(tree.all_blocks())

            if not valid_chain(result, winner, width):
                return fail("valid", step, sl, f"best_chain({sl}) is not a valid chain")
            outside = [b for b in result if b not in members or b.slot > sl]
            if outside:
                return fail("self-contained", step, sl,
                            f"best_chain({sl}) uses a block at slot {outside[0].slot}")

            if len(members) <= oracle_limit:
                report.oracle_queries += 1
                longest = max(len(c) for c in enumerate_valid_chains(list(members), sl, winner, width))
                if len(result) < longest:
                    return fail("optimal", step, sl,
                                f"best_chain({sl}) has length {len(result)}, oracle found {longest}")

            expected = reference.best_chain(sl)
            if len(result) != len(expected):
                return fail("optimal", step, sl,
                            f"best_chain({sl}) has length {len(result)}, reference has {len(expected)}")
            if result != expected:
                return fail("tie-break", step, sl, f"best_chain({sl}) differs from the reference chain")

    return report

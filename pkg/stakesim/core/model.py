"""
Core Model

Blocks, chains and the pure chain functions used everywhere else:
hashing, validity, pruning, the prefix relation, chain-from-block and
block position.

Chains are tuples of blocks stored head first (highest slot at index 0)
and end with the genesis block when valid.
"""

import hashlib
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from ..utils.exceptions import UnknownPartyError

DEFAULT_HASH_WIDTH = 64

# Party id 0 bakes the genesis block and is honest in every scenario.
GENESIS_BID = 0


@dataclass(frozen=True)
class Block:
    """
    The on-wire unit.

    Attributes:
        pred: Hash of the predecessor block
        slot: Slot the block was baked in
        txs: Opaque payload
        bid: Id of the baking party
    """
    pred: int
    slot: int
    txs: bytes
    bid: int


GENESIS = Block(pred=0, slot=0, txs=b"", bid=GENESIS_BID)

Chain = Tuple[Block, ...]
WinnerFn = Callable[[int, int], bool]


def serialize_block(block: Block) -> bytes:
    """
    Serialize a block for hashing.

    Layout (little endian): pred u64, slot u64, len(txs) u32, txs, bid u64.
    The layout is fixed so hashes are stable across runs and platforms.
    """
    return (
        struct.pack("<QQI", block.pred, block.slot, len(block.txs))
        + block.txs
        + struct.pack("<Q", block.bid)
    )


@lru_cache(maxsize=1 << 18)
def hash_block(block: Block, width: int = DEFAULT_HASH_WIDTH) -> int:
    """
    Hash a block to a ``width``-bit unsigned integer.

    Args:
        block: Block to hash
        width: Output width in bits (1..64)

    Returns:
        Hash value
    """
    digest = hashlib.blake2b(serialize_block(block), digest_size=8).digest()
    value = int.from_bytes(digest, "little")
    if width >= 64:
        return value
    return value & ((1 << width) - 1)


def valid_chain(chain: Sequence[Block], winner: WinnerFn, width: int = DEFAULT_HASH_WIDTH) -> bool:
    """
    Check the three validity conditions of a chain.

    A valid chain is made of winning blocks only, every block points at
    the hash of its successor and the last block is the genesis block, and
    slots strictly decrease from head to genesis. The genesis block owns
    slot 0 and is accepted without a lottery check.

    Args:
        chain: Head-first chain
        winner: Winner predicate (party, slot) -> bool
        width: Hash width in bits

    Returns:
        True if the chain is valid
    """
    if not chain or chain[-1] != GENESIS:
        return False

    for index in range(len(chain) - 1):
        block, successor = chain[index], chain[index + 1]
        if block.slot <= successor.slot:
            return False
        if block.pred != hash_block(successor, width):
            return False
        try:
            if not winner(block.bid, block.slot):
                return False
        except UnknownPartyError:
            return False
    return True


def prune(sl: int, chain: Sequence[Block]) -> Chain:
    """Keep the blocks with slot <= sl, order preserved."""
    return tuple(block for block in chain if block.slot <= sl)


def is_prefix(c1: Sequence[Block], c2: Sequence[Block]) -> bool:
    """
    Chain prefix relation.

    Chains are head first, so c1 is a prefix of c2 when it equals a
    trailing segment of c2.
    """
    if len(c1) > len(c2):
        return False
    if not c1:
        return True
    return tuple(c2[len(c2) - len(c1):]) == tuple(c1)


class BlockPool:
    """
    A block pool indexed by hash for pointer walks.

    When several pool blocks share a hash the first one in pool order
    wins, and the hash is recorded in ``ambiguous`` so callers can flag
    the pool as collision-suspect.
    """

    def __init__(self, blocks: Iterable[Block], width: int = DEFAULT_HASH_WIDTH):
        self.width = width
        self.blocks: List[Block] = list(blocks)
        self.by_hash: Dict[int, Block] = {}
        self.ambiguous: Dict[int, List[Block]] = {}
        for block in self.blocks:
            h = hash_block(block, width)
            first = self.by_hash.get(h)
            if first is None:
                self.by_hash[h] = block
            elif first != block:
                self.ambiguous.setdefault(h, [first])
                if block not in self.ambiguous[h]:
                    self.ambiguous[h].append(block)

    def cfb(self, block: Block) -> Chain:
        """Chain from a block: follow pred pointers inside the pool down to genesis."""
        chain = [block]
        seen = {block}
        current = block
        while current != GENESIS:
            pred = self.by_hash.get(current.pred)
            if pred is None or pred in seen:
                return ()
            chain.append(pred)
            seen.add(pred)
            current = pred
        return tuple(chain)

    def pos(self, block: Block) -> int:
        return len(self.cfb(block))

    @property
    def collision_suspect(self) -> bool:
        return bool(self.ambiguous)


def cfb(block: Block, pool: Sequence[Block], width: int = DEFAULT_HASH_WIDTH) -> Chain:
    """
    Chain from a block.

    Args:
        block: Starting block
        pool: Blocks available for pointer resolution
        width: Hash width in bits

    Returns:
        The head-first chain ending in genesis, or () when a pointer is
        unresolvable, a cycle is met or the walk does not reach genesis
    """
    if block == GENESIS:
        return (GENESIS,)
    return BlockPool(pool, width).cfb(block)


def pos(block: Block, pool: Sequence[Block], width: int = DEFAULT_HASH_WIDTH) -> int:
    """Position of a block: the length of its chain-from-block."""
    return len(cfb(block, pool, width))


def pool_collisions(pool: Iterable[Block], width: int = DEFAULT_HASH_WIDTH) -> List[Tuple[Block, Block]]:
    """Return pairs of distinct blocks in the pool sharing a hash."""
    first: Dict[int, Block] = {}
    pairs: List[Tuple[Block, Block]] = []
    for block in pool:
        h = hash_block(block, width)
        other = first.get(h)
        if other is None:
            first[h] = block
        elif other != block and (other, block) not in pairs:
            pairs.append((other, block))
    return pairs


def chain_rank(chain: Sequence[Block], width: int = DEFAULT_HASH_WIDTH) -> Tuple[int, int, bytes]:
    """
    Canonical ordering key for candidate chains; smaller is better.

    Longer chains win; among equal lengths the head with the smallest hash
    wins, and the serialized head breaks the remaining tie (only possible
    under a hash collision).
    """
    if not chain:
        return (0, 0, b"")
    head = chain[0]
    return (-len(chain), hash_block(head, width), serialize_block(head))


class ChainLink:
    """
    Persistent head-first chain.

    Each link shares its tail with its predecessor's link, so storing one
    link per party per slot costs O(1) instead of a chain copy.
    """

    __slots__ = ("block", "rest", "length")

    def __init__(self, block: Block, rest: Optional["ChainLink"] = None):
        self.block = block
        self.rest = rest
        self.length = 1 + (rest.length if rest is not None else 0)

    @classmethod
    def from_chain(cls, chain: Sequence[Block]) -> Optional["ChainLink"]:
        link: Optional[ChainLink] = None
        for block in reversed(chain):
            link = cls(block, link)
        return link

    def to_chain(self) -> Chain:
        blocks = []
        link: Optional[ChainLink] = self
        while link is not None:
            blocks.append(link.block)
            link = link.rest
        return tuple(blocks)

    def __len__(self) -> int:
        return self.length

    def __repr__(self) -> str:
        return f"ChainLink(head_slot={self.block.slot}, length={self.length})"

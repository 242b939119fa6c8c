"""
Honest Parties

Local state and the two honest activations: receive and bake.
"""

import struct
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..utils.exceptions import ConfigError
from .blocktree import BlockTree, make_tree
from .model import DEFAULT_HASH_WIDTH, Block, WinnerFn, hash_block
from .network import BlockMsg

TxSelector = Callable[[int, int], bytes]


@dataclass
class LocalState:
    """An honest party's local state."""
    id: int
    tree_impl: str
    tree: BlockTree


def select_empty(sl: int, party: int) -> bytes:
    return b""


def select_slot_tagged(sl: int, party: int) -> bytes:
    """Payload encoding (slot, party), so otherwise identical blocks differ."""
    return struct.pack("<QQ", sl, party)


TX_SELECTORS: Dict[str, TxSelector] = {
    "empty": select_empty,
    "slot-tagged": select_slot_tagged,
}


def get_tx_selector(name: str) -> TxSelector:
    if name not in TX_SELECTORS:
        raise ConfigError([f"Unknown tx_selector '{name}'"])
    return TX_SELECTORS[name]


def local_state_init(party: int, tree_impl: str, winner: WinnerFn,
                     width: int = DEFAULT_HASH_WIDTH) -> LocalState:
    return LocalState(id=party, tree_impl=tree_impl, tree=make_tree(tree_impl, winner, width))


def honest_rcv(msgs: Sequence[BlockMsg], sl: int, st: LocalState,
               filter_on_receive: bool = False,
               winner: Optional[WinnerFn] = None) -> LocalState:
    """
    Extend the tree with every received block, in message order.

    With ``filter_on_receive`` a block is only kept when its baker won its
    slot and the slot is not in the future.

    Args:
        msgs: Delivered messages
        sl: Current slot
        st: Local state (updated in place and returned)
        filter_on_receive: Drop blocks failing the winner/slot test
        winner: Winner predicate, required when filtering

    Returns:
        The updated local state
    """
    for msg in msgs:
        block = msg.block
        if filter_on_receive:
            if winner is None:
                raise ConfigError(["filter_on_receive needs a winner predicate"])
            if block.slot > sl or not winner(block.bid, block.slot):
                continue
        st.tree.extend(block)
    return st


def honest_bake(sl: int, txs: bytes, st: LocalState, winner: WinnerFn,
                width: int = DEFAULT_HASH_WIDTH) -> Tuple[List[BlockMsg], LocalState]:
    """
    Bake a block when the party wins the slot.

    The new block extends best_chain(sl - 1), is added to the party's own
    tree and flooded as a single message.
    """
    if not winner(st.id, sl):
        return [], st
    head = st.tree.best_head(sl - 1)
    block = Block(pred=hash_block(head, width), slot=sl, txs=txs, bid=st.id)
    st.tree.extend(block)
    return [BlockMsg(block)], st

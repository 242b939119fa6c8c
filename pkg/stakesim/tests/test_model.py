"""
Tests for blocks, chains and the pure chain functions.
"""

import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from ..core.model import (
    GENESIS,
    Block,
    BlockPool,
    ChainLink,
    cfb,
    chain_rank,
    hash_block,
    is_prefix,
    pool_collisions,
    pos,
    prune,
    serialize_block,
    valid_chain,
)
from ..utils.exceptions import UnknownPartyError


def always(party, sl):
    return True


def build_chain(slots, bid=1, txs=b""):
    """Head-first valid chain with blocks at the given increasing slots."""
    chain = [GENESIS]
    for sl in slots:
        chain.insert(0, Block(pred=hash_block(chain[0]), slot=sl, txs=txs, bid=bid))
    return tuple(chain)


increasing_slots = st.lists(st.integers(1, 500), max_size=12, unique=True).map(sorted)


class TestHashing(unittest.TestCase):
    """Block serialization and hashing."""

    def test_hash_is_deterministic(self):
        block = Block(pred=7, slot=3, txs=b"abc", bid=2)
        self.assertEqual(hash_block(block), hash_block(Block(pred=7, slot=3, txs=b"abc", bid=2)))

    def test_fields_change_hash(self):
        base = Block(pred=7, slot=3, txs=b"abc", bid=2)
        variants = [
            Block(pred=8, slot=3, txs=b"abc", bid=2),
            Block(pred=7, slot=4, txs=b"abc", bid=2),
            Block(pred=7, slot=3, txs=b"abd", bid=2),
            Block(pred=7, slot=3, txs=b"abc", bid=3),
        ]
        for variant in variants:
            self.assertNotEqual(hash_block(base), hash_block(variant))

    def test_narrow_width_masks_full_hash(self):
        block = Block(pred=1, slot=1, txs=b"", bid=1)
        self.assertEqual(hash_block(block, 16), hash_block(block, 64) & 0xFFFF)
        self.assertLess(hash_block(block, 16), 1 << 16)

    def test_serialization_layout(self):
        data = serialize_block(Block(pred=1, slot=2, txs=b"xy", bid=3))
        self.assertEqual(len(data), 8 + 8 + 4 + 2 + 8)
        self.assertEqual(data[20:22], b"xy")


class TestValidChain(unittest.TestCase):
    """The three validity conditions."""

    def test_genesis_alone_is_valid(self):
        self.assertTrue(valid_chain((GENESIS,), always))

    def test_linked_chain_is_valid(self):
        self.assertTrue(valid_chain(build_chain([1, 2, 5]), always))

    def test_empty_and_headless_chains_are_invalid(self):
        self.assertFalse(valid_chain((), always))
        chain = build_chain([1, 2])
        self.assertFalse(valid_chain(chain[:-1], always))

    def test_wrong_pred_is_invalid(self):
        chain = build_chain([1, 2])
        broken = (Block(pred=12345, slot=2, txs=b"", bid=1),) + chain[1:]
        self.assertFalse(valid_chain(broken, always))

    def test_slots_must_strictly_decrease(self):
        b1 = Block(pred=hash_block(GENESIS), slot=2, txs=b"", bid=1)
        b2 = Block(pred=hash_block(b1), slot=2, txs=b"", bid=1)
        self.assertFalse(valid_chain((b2, b1, GENESIS), always))

    def test_losing_baker_is_invalid(self):
        chain = build_chain([1, 2])
        self.assertFalse(valid_chain(chain, lambda party, sl: sl != 2))

    def test_unknown_baker_is_invalid(self):
        def winner(party, sl):
            raise UnknownPartyError(party)

        self.assertFalse(valid_chain(build_chain([1]), winner))

    @given(increasing_slots)
    def test_every_trailing_segment_of_a_valid_chain_is_valid(self, slots):
        chain = build_chain(slots)
        for start in range(len(chain)):
            self.assertTrue(valid_chain(chain[start:], always))


class TestPruneAndPrefix(unittest.TestCase):
    """prune and is_prefix."""

    def test_prune_keeps_low_slots(self):
        chain = build_chain([1, 3, 6])
        self.assertEqual([b.slot for b in prune(3, chain)], [3, 1, 0])
        self.assertEqual(prune(0, chain), (GENESIS,))

    def test_prefix_is_a_trailing_segment(self):
        chain = build_chain([1, 2, 3])
        self.assertTrue(is_prefix(chain[1:], chain))
        self.assertTrue(is_prefix((), chain))
        self.assertTrue(is_prefix(chain, chain))
        self.assertFalse(is_prefix(chain, chain[1:]))
        self.assertFalse(is_prefix(build_chain([1, 2], txs=b"x"), chain))

    @given(increasing_slots, st.integers(0, 600))
    def test_pruned_chain_is_prefix(self, slots, k):
        chain = build_chain(slots)
        self.assertTrue(is_prefix(prune(k, chain), chain))

    @given(increasing_slots, st.integers(0, 600), st.integers(0, 600))
    def test_prefix_is_transitive_under_pruning(self, slots, k1, k2):
        chain = build_chain(slots)
        lo, hi = sorted((k1, k2))
        inner, outer = prune(lo, chain), prune(hi, chain)
        self.assertTrue(is_prefix(inner, outer))
        self.assertTrue(is_prefix(outer, chain))
        self.assertTrue(is_prefix(inner, chain))


class TestPool(unittest.TestCase):
    """Chain-from-block, positions and collisions."""

    def test_cfb_follows_pointers(self):
        chain = build_chain([1, 2, 4])
        pool = list(reversed(chain))
        self.assertEqual(cfb(chain[0], pool), chain)
        self.assertEqual(pos(chain[0], pool), 4)
        self.assertEqual(pos(GENESIS, []), 1)

    def test_cfb_of_unresolvable_block_is_empty(self):
        orphan = Block(pred=999, slot=3, txs=b"", bid=1)
        self.assertEqual(cfb(orphan, [GENESIS, orphan]), ())
        self.assertEqual(pos(orphan, [GENESIS, orphan]), 0)

    def test_narrow_width_finds_collisions(self):
        blocks = [Block(pred=0, slot=s, txs=b"", bid=1) for s in range(1, 4)]
        pairs = pool_collisions(blocks, width=1)
        self.assertTrue(pairs)
        first, second = pairs[0]
        self.assertEqual(hash_block(first, 1), hash_block(second, 1))
        self.assertTrue(BlockPool(blocks, width=1).collision_suspect)

    def test_full_width_pool_has_no_collisions(self):
        chain = build_chain(range(1, 50))
        self.assertEqual(pool_collisions(chain), [])
        self.assertFalse(BlockPool(chain).collision_suspect)


class TestChainLink(unittest.TestCase):
    """Persistent chains."""

    def test_round_trip(self):
        chain = build_chain([1, 2, 3])
        link = ChainLink.from_chain(chain)
        self.assertEqual(len(link), 4)
        self.assertEqual(link.to_chain(), chain)

    def test_shared_tail(self):
        chain = build_chain([1, 2])
        base = ChainLink.from_chain(chain)
        head = Block(pred=hash_block(chain[0]), slot=3, txs=b"", bid=1)
        extended = ChainLink(head, base)
        self.assertIs(extended.rest, base)
        self.assertEqual(extended.length, 4)

    def test_rank_prefers_longer_chains(self):
        short, long = build_chain([1]), build_chain([1, 2])
        self.assertLess(chain_rank(long), chain_rank(short))


if __name__ == "__main__":
    unittest.main()

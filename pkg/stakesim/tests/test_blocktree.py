"""
Tests for the block-tree implementations and the conformance harness.
"""

import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from ..core.blocktree import (
    BrokenTree,
    IndexedTree,
    ReferenceTree,
    conformance_check,
    enumerate_valid_chains,
    generate_stream,
    make_tree,
    tree_init,
)
from ..core.model import GENESIS, Block, hash_block, valid_chain
from ..utils.exceptions import ConfigError

IMPLEMENTATIONS = (ReferenceTree, IndexedTree)


def always(party, sl):
    return True


def child(parent, slot, bid=1, txs=b""):
    return Block(pred=hash_block(parent), slot=slot, txs=txs, bid=bid)


class TestTreeBasics(unittest.TestCase):
    """Behavior shared by both implementations."""

    def test_fresh_tree_holds_genesis(self):
        for cls in IMPLEMENTATIONS:
            tree = cls(always)
            self.assertEqual(tree.all_blocks(), [GENESIS])
            self.assertEqual(tree.best_chain(0), (GENESIS,))
            self.assertEqual(tree.best_chain(-5), (GENESIS,))

    def test_extend_is_idempotent(self):
        b1 = child(GENESIS, 1)
        for cls in IMPLEMENTATIONS:
            tree = cls(always)
            tree.extend(b1).extend(b1)
            self.assertEqual(len(tree), 2)
            self.assertIn(b1, tree)

    def test_slot_filter(self):
        b1 = child(GENESIS, 1)
        b5 = child(b1, 5)
        for cls in IMPLEMENTATIONS:
            tree = cls(always)
            tree.extend(b1).extend(b5)
            self.assertEqual(tree.best_chain(4), (b1, GENESIS))
            self.assertEqual(tree.best_chain(5), (b5, b1, GENESIS))

    def test_out_of_order_arrival(self):
        b1 = child(GENESIS, 1)
        b2 = child(b1, 2)
        b3 = child(b2, 3)
        for cls in IMPLEMENTATIONS:
            tree = cls(always)
            tree.extend(b3).extend(b2)
            self.assertEqual(tree.best_chain(10), (GENESIS,))
            tree.extend(b1)
            self.assertEqual(tree.best_chain(10), (b3, b2, b1, GENESIS))

    def test_indexed_pending_blocks_are_connected(self):
        b1 = child(GENESIS, 1)
        b2 = child(b1, 2)
        tree = IndexedTree(always)
        tree.extend(b2)
        self.assertIn(b2, tree.pending)
        self.assertEqual(tree.best_chain(2), (GENESIS,))
        tree.extend(b1)
        self.assertFalse(tree.pending)
        self.assertEqual(tree.best_chain(2), (b2, b1, GENESIS))

    def test_losing_blocks_are_ignored(self):
        def winner(party, sl):
            return party == 1

        b1 = child(GENESIS, 1, bid=2)
        b2 = child(GENESIS, 2, bid=1)
        for cls in IMPLEMENTATIONS:
            tree = cls(winner)
            tree.extend(b1).extend(b2)
            self.assertEqual(tree.best_chain(3), (b2, GENESIS))
            self.assertIn(b1, tree.all_blocks())

    def test_implementations_agree_on_ties(self):
        left = child(GENESIS, 1, bid=1)
        right = child(GENESIS, 1, bid=2)
        left2 = child(left, 3, bid=1)
        right2 = child(right, 2, bid=2)
        answers = []
        for cls in IMPLEMENTATIONS:
            tree = cls(always)
            for block in (left, right, left2, right2):
                tree.extend(block)
            answers.append((tree.best_chain(1), tree.best_chain(3)))
        self.assertEqual(answers[0], answers[1])
        self.assertEqual(len(answers[0][1]), 3)

    def test_best_chain_is_longest_valid(self):
        b1 = child(GENESIS, 1)
        b2 = child(b1, 2)
        fork = child(GENESIS, 3, bid=2)
        for cls in IMPLEMENTATIONS:
            tree = cls(always)
            for block in (b1, fork, b2):
                tree.extend(block)
            best = tree.best_chain(3)
            self.assertTrue(valid_chain(best, always))
            self.assertEqual(best, (b2, b1, GENESIS))

    def test_make_tree(self):
        self.assertIsInstance(make_tree("indexed", always), IndexedTree)
        self.assertIsInstance(tree_init("reference", always), ReferenceTree)
        with self.assertRaises(ConfigError):
            make_tree("broken", always)
        self.assertIsInstance(make_tree("broken", always, allow_test_impls=True), BrokenTree)


class TestOracle(unittest.TestCase):
    """Exhaustive chain enumeration."""

    def test_enumerates_all_chains(self):
        b1 = child(GENESIS, 1)
        b2 = child(b1, 2)
        fork = child(GENESIS, 2, bid=2)
        chains = enumerate_valid_chains([GENESIS, b1, b2, fork], 2, always)
        self.assertEqual(len(chains), 4)
        self.assertEqual(max(len(c) for c in chains), 3)
        self.assertEqual(len(enumerate_valid_chains([GENESIS, b1, b2, fork], 1, always)), 2)


class TestConformance(unittest.TestCase):
    """The conformance harness."""

    def test_stream_is_deterministic(self):
        self.assertEqual(generate_stream(4, 50, always), generate_stream(4, 50, always))
        kinds = {kind for kind, _ in generate_stream(4, 200, always)}
        self.assertIn("linked", kinds)

    def test_conforming_implementations_pass(self):
        for impl in ("reference", "indexed"):
            for seed in range(3):
                report = conformance_check(impl, seed, 120)
                self.assertTrue(report.passed, report.to_dict())
                self.assertGreater(report.oracle_queries, 0)

    def test_broken_implementation_fails(self):
        failures = [conformance_check("broken", seed, 200) for seed in range(5)]
        self.assertTrue(any(not report.passed for report in failures))
        failed = next(report for report in failures if not report.passed)
        self.assertEqual(failed.failure.condition, "self-contained")
        self.assertIn("failure", failed.to_dict())

    def test_custom_factory(self):
        report = conformance_check("custom", 0, 40, tree_factory=IndexedTree)
        self.assertTrue(report.passed)

    def test_rejects_empty_stream(self):
        with self.assertRaises(ConfigError):
            conformance_check("indexed", 0, 0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_indexed_matches_reference(self, seed):
        report = conformance_check("indexed", seed, 60)
        self.assertTrue(report.passed, report.to_dict())


if __name__ == "__main__":
    unittest.main()

"""
Tests for the property checkers on small hand-checked traces.
"""

import unittest
from unittest import mock

from ..core import properties as properties_module
from ..core.properties import (
    CheckConstants,
    Verdict,
    VerdictKind,
    check_chain_growth,
    check_chain_growth_all,
    check_chain_quality,
    check_chain_quality_all,
    check_collision_free,
    check_common_prefix,
    check_common_prefix_all,
    check_forging_free,
    check_knowledge_propagation,
    check_super_positions,
    quality_windows,
    replay_verdict,
    rollback_depth,
    rollback_requested,
    run_checks,
    sweep_slots,
    worst,
)
from ..core.world import run
from ..utils.exceptions import CheckerInputError
from .fixtures import always_wins, bernoulli, scripted


def fork_trace():
    """Parties 1 and 2 both win only slot 1."""
    return run(scripted(2, [(1, 1), (2, 1)], horizon=3))


class TestMonitors(unittest.TestCase):
    """Collision, forging, knowledge and super-slot positions."""

    def test_honest_run_passes_monitors(self):
        trace = run(always_wins(2, horizon=10))
        for verdict in (check_collision_free(trace), check_forging_free(trace),
                        check_knowledge_propagation(trace), check_super_positions(trace)):
            self.assertIs(verdict.kind, VerdictKind.HOLDS, verdict.to_dict())

    def test_single_party_super_slots(self):
        trace = run(always_wins(1, horizon=10))
        verdict = check_super_positions(trace)
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        self.assertEqual(verdict.details["super_blocks"], 10)

    def test_disabled_knowledge_monitor(self):
        trace = run(bernoulli([1.0], horizon=3, checks={"monitor_knowledge": False}))
        self.assertIs(check_knowledge_propagation(trace).kind, VerdictKind.PRECONDITION_FAILED)

    def test_forging_and_replay(self):
        cfg = bernoulli([0.5, 0.5], corrupted=[2], horizon=5, adversary={"strategy": "forge"})
        trace = run(cfg)
        verdict = check_forging_free(trace)
        self.assertIs(verdict.kind, VerdictKind.VIOLATED)
        self.assertEqual(verdict.witness["first_slot"], 1)
        self.assertEqual(replay_verdict(cfg, "forging", {}).to_dict(), verdict.to_dict())
        self.assertIs(check_chain_growth_all(trace).kind, VerdictKind.PRECONDITION_FAILED)
        self.assertIs(check_common_prefix_all(trace, 2).kind, VerdictKind.PRECONDITION_FAILED)

    def test_collision_blocks_other_checkers(self):
        cfg = bernoulli([0.5] * 20, horizon=300, hash_width=16, tx_selector="slot-tagged")
        trace = run(cfg)
        self.assertIs(check_collision_free(trace).kind, VerdictKind.VIOLATED)
        self.assertIs(check_chain_growth(trace, 1, 1, 10, 2).kind, VerdictKind.PRECONDITION_FAILED)


class TestChainGrowth(unittest.TestCase):
    """Growth between snapshots."""

    def test_holds_with_lucky_slots(self):
        trace = run(scripted(1, [(1, sl) for sl in range(1, 6)], horizon=5))
        verdict = check_chain_growth(trace, 1, 1, 5, 1)
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        self.assertEqual(verdict.details["lucky"], 2)

    def test_tight_offsets_are_violated(self):
        trace = run(always_wins(1, horizon=5))
        tight = CheckConstants(growth_lo_offset=0, growth_hi_offset=0)
        verdict = check_chain_growth(trace, 1, 1, 3, 1, tight)
        self.assertIs(verdict.kind, VerdictKind.VIOLATED)
        self.assertEqual(verdict.witness["lucky"], 3)
        self.assertEqual((verdict.witness["length1"], verdict.witness["length2"]), (1, 3))
        self.assertIs(check_chain_growth(trace, 1, 1, 3, 1).kind, VerdictKind.HOLDS)

    def test_same_slot_different_parties(self):
        trace = run(always_wins(2, horizon=4))
        verdict = check_chain_growth(trace, 2, 1, 2, 2)
        self.assertIs(verdict.kind, VerdictKind.PRECONDITION_FAILED)

    def test_bad_inputs(self):
        trace = run(always_wins(1, horizon=4))
        with self.assertRaises(CheckerInputError):
            check_chain_growth(trace, 3, 1, 2, 1)
        with self.assertRaises(CheckerInputError):
            check_chain_growth(trace, 1, 9, 2, 1)

    def test_sweep(self):
        verdict = check_chain_growth_all(run(always_wins(2, horizon=10)), stride=3)
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        self.assertGreater(verdict.details["checks"], 0)


class TestChainQuality(unittest.TestCase):
    """Honest block counts in chain windows."""

    def test_windows(self):
        self.assertEqual(quality_windows(10), [(0, 9), (0, 3), (4, 7), (0, 7)])
        self.assertEqual(quality_windows(3), [(0, 2)])

    def test_all_honest_chain(self):
        trace = run(always_wins(1, horizon=12))
        verdict = check_chain_quality(trace, 10, 1, 0, 5)
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        self.assertGreaterEqual(verdict.details["honest"], verdict.details["required"])
        self.assertIs(check_chain_quality_all(trace).kind, VerdictKind.HOLDS)

    def test_window_out_of_range(self):
        trace = run(always_wins(1, horizon=5))
        with self.assertRaises(CheckerInputError):
            check_chain_quality(trace, 3, 1, 0, 10)
        with self.assertRaises(CheckerInputError):
            check_chain_quality(trace, 3, 1, 2, 1)


class TestCommonPrefix(unittest.TestCase):
    """Common prefix and rollback depth."""

    def test_fork_violates_tight_constants(self):
        verdict = check_common_prefix(fork_trace(), 2, 1, 2, 2, 1, CheckConstants.literal())
        self.assertIs(verdict.kind, VerdictKind.VIOLATED)
        self.assertEqual(verdict.witness["divergence_slot"], 1)

    def test_fork_holds_through_bad_event(self):
        verdict = check_common_prefix(fork_trace(), 2, 1, 2, 2, 1)
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        self.assertEqual(verdict.details["disjunct"], "bad-event")

    def test_pruning_past_the_fork(self):
        verdict = check_common_prefix(fork_trace(), 2, 1, 2, 2, 0, CheckConstants.literal())
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        self.assertEqual(verdict.details["disjunct"], "prefix")

    def test_rollback_depth(self):
        self.assertEqual(rollback_depth(fork_trace()), 2)
        self.assertEqual(rollback_depth(run(always_wins(1, horizon=8))), 0)

    def test_replay_of_a_violation(self):
        cfg = scripted(2, [(1, 1), (2, 1)], horizon=3)
        literal = CheckConstants.literal()
        verdict = check_common_prefix(run(cfg), 2, 1, 2, 2, 1, literal)
        replayed = replay_verdict(cfg, "common-prefix", verdict.params, literal)
        self.assertEqual(replayed.to_dict(), verdict.to_dict())

    def test_sweep_counts_disjuncts(self):
        verdict = check_common_prefix_all(fork_trace(), 1)
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        self.assertEqual(verdict.details["checks"],
                         verdict.details["prefix"] + verdict.details["bad_event"])
        self.assertGreater(verdict.details["bad_event"], 0)


def slow_rollback_depth(trace, stride=1):
    """Pairwise rollback depth straight from the chain tuples."""
    depth = 0
    slots = sweep_slots(trace, stride)
    for p1 in trace.honest:
        for p2 in trace.honest:
            for a, sl1 in enumerate(slots):
                c1 = trace.snapshot(p1, sl1)
                for sl2 in slots[a:]:
                    c2 = trace.snapshot(p2, sl2)
                    common = 0
                    while (common < min(len(c1), len(c2))
                           and c1[len(c1) - common - 1] == c2[len(c2) - common - 1]):
                        common += 1
                    if common < len(c1):
                        depth = max(depth, sl1 - c1[len(c1) - common - 1].slot + 1)
    return depth


class TestRollbackDepth(unittest.TestCase):
    """Incremental rollback depth against the pairwise definition."""

    def test_matches_pairwise_definition(self):
        for strategy in ("withhold", "equivocate", "split"):
            for master in (1, 2):
                with self.subTest(strategy=strategy, master=master):
                    trace = run(bernoulli([0.3, 0.3, 0.3, 0.25], corrupted=[4], horizon=40,
                                          adversary={"strategy": strategy}, seeds={"master": master}))
                    self.assertEqual(rollback_depth(trace), slow_rollback_depth(trace))
                    self.assertEqual(rollback_depth(trace, 3), slow_rollback_depth(trace, 3))

    def test_withheld_fork_rolls_back_honest_block(self):
        trace = run(scripted(2, [(2, sl) for sl in range(1, 6)] + [(1, 6)], corrupted=[2],
                             horizon=10, adversary={"strategy": "withhold"}))
        # Party 1's slot-7 snapshot ends in its own slot-6 block; the fork replaces it in slot 8.
        self.assertEqual(rollback_depth(trace), 2)
        self.assertEqual(rollback_depth(trace), slow_rollback_depth(trace))

    def test_only_with_common_prefix(self):
        self.assertTrue(rollback_requested(None))
        self.assertTrue(rollback_requested(["growth", "common-prefix"]))
        self.assertFalse(rollback_requested(["forging"]))
        self.assertFalse(rollback_requested([]))

    def test_index_cache_is_bounded(self):
        with mock.patch.object(properties_module, "CHAIN_CACHE_SIZE", 4):
            trace = run(always_wins(2, horizon=30))
            verdict = check_chain_quality_all(trace)
        self.assertIs(verdict.kind, VerdictKind.HOLDS)
        info = properties_module._index(trace).cache_info()
        self.assertEqual(info.maxsize, 4)
        self.assertLessEqual(info.currsize, 4)


class TestAdversarialRuns(unittest.TestCase):
    """Default constants under every built-in strategy."""

    def test_chain_quality_under_attack(self):
        for strategy in ("withhold", "equivocate"):
            with self.subTest(strategy=strategy):
                trace = run(bernoulli([0.2, 0.2, 0.2, 0.15], corrupted=[4], horizon=120,
                                      adversary={"strategy": strategy}, seeds={"master": 5}))
                self.assertIsNot(check_chain_quality_all(trace, 2).kind, VerdictKind.VIOLATED)

    def test_withheld_chain_quality(self):
        trace = run(scripted(2, [(2, sl) for sl in range(1, 6)] + [(1, 6)], corrupted=[2],
                             horizon=10, adversary={"strategy": "withhold"}))
        self.assertIsNot(check_chain_quality_all(trace).kind, VerdictKind.VIOLATED)

    def test_no_violations_with_default_constants(self):
        qs = [0.05] * 10
        for strategy in ("noop", "withhold", "equivocate", "split"):
            for master in (1, 2, 3):
                with self.subTest(strategy=strategy, master=master):
                    cfg = bernoulli(qs, corrupted=[8, 9, 10], horizon=200,
                                    adversary={"strategy": strategy}, seeds={"master": master})
                    verdicts = run_checks(run(cfg), k_values=[10, 20, 40], stride=5)
                    violated = [v.to_dict() for v in verdicts if v.kind is VerdictKind.VIOLATED]
                    self.assertEqual(violated, [])


class TestDrivers(unittest.TestCase):
    """run_checks, worst and verdict serialization."""

    def test_run_checks_on_honest_run(self):
        verdicts = run_checks(run(always_wins(2, horizon=10)), k_values=[1, 2])
        self.assertEqual(len(verdicts), 8)
        self.assertTrue(all(v.ok for v in verdicts))
        self.assertIsNot(worst(verdicts), VerdictKind.VIOLATED)

    def test_unknown_checker(self):
        with self.assertRaises(CheckerInputError):
            run_checks(run(always_wins(1, horizon=2)), ["liveness"])
        with self.assertRaises(CheckerInputError):
            replay_verdict(always_wins(1, horizon=2), "liveness", {})

    def test_worst(self):
        self.assertIs(worst([]), VerdictKind.HOLDS)
        verdicts = [
            Verdict.holds("growth"),
            Verdict.precondition_failed("growth", {}, "x"),
        ]
        self.assertIs(worst(verdicts), VerdictKind.PRECONDITION_FAILED)
        verdicts.append(Verdict.violated("growth", {}, {}))
        self.assertIs(worst(verdicts), VerdictKind.VIOLATED)

    def test_to_dict(self):
        data = Verdict.precondition_failed("quality", {"sl": 1}, "trace is not forging-free").to_dict()
        self.assertEqual(data, {
            "checker": "quality",
            "params": {"sl": 1},
            "verdict": "precondition_failed",
            "reason": "trace is not forging-free",
        })


if __name__ == "__main__":
    unittest.main()

"""
Tests for slot probabilities, Chernoff tails and the failure bounds.
"""

import math
import unittest

import numpy as np

from ..core.bounds import (
    SlotProbs,
    bounds_table,
    cg_growth_bound,
    chernoff_lower,
    chernoff_upper,
    cp_epsilon_condition,
    cp_failure_bound,
    cp_failure_terms,
    cq_epsilon_condition,
    cq_failure_bound,
    empirical_tail,
    monte_carlo_slot_probs,
    sample_from_lottery,
    slot_probs,
    stake_regime,
)
from ..core.lottery import BernoulliLottery, HonestyMap
from ..utils.exceptions import DomainError, VacuousBoundError

Q = {1: 0.1, 2: 0.1, 3: 0.1}
HONESTY = {1: True, 2: True, 3: False}
STRONG = SlotProbs(p_ls=0.5, p_ss=0.5, p_as=0.05)


class TestSlotProbs(unittest.TestCase):
    """Slot-type probabilities."""

    def test_three_parties(self):
        probs = slot_probs(Q, HONESTY)
        self.assertAlmostEqual(probs.p_ls, 0.19)
        self.assertAlmostEqual(probs.p_ss, 0.18)
        self.assertAlmostEqual(probs.p_as, 0.1)
        self.assertEqual(set(probs.as_dict()), {"p_LS", "p_SS", "p_AS"})

    def test_no_corrupted_parties(self):
        probs = slot_probs({1: 0.3}, {1: True})
        self.assertAlmostEqual(probs.p_ls, 0.3)
        self.assertAlmostEqual(probs.p_ss, 0.3)
        self.assertEqual(probs.p_as, 0.0)

    def test_rejects_bad_probability(self):
        with self.assertRaises(DomainError):
            slot_probs({1: 1.2}, {1: True})

    def test_monte_carlo_estimate(self):
        estimate = monte_carlo_slot_probs(Q, HONESTY, 200000, seed=1)
        exact = slot_probs(Q, HONESTY)
        self.assertAlmostEqual(estimate.p_ls, exact.p_ls, delta=0.01)
        self.assertAlmostEqual(estimate.p_ss, exact.p_ss, delta=0.01)
        self.assertAlmostEqual(estimate.p_as, exact.p_as, delta=0.01)

    def test_lottery_frequencies(self):
        lottery = BernoulliLottery(Q, seed=3)
        observed = sample_from_lottery(lottery, HonestyMap(HONESTY), 20000)
        exact = slot_probs(Q, HONESTY)
        self.assertAlmostEqual(observed.p_ls, exact.p_ls, delta=0.015)
        self.assertAlmostEqual(observed.p_as, exact.p_as, delta=0.015)

    def test_lottery_frequencies_need_a_slot(self):
        with self.assertRaises(DomainError):
            sample_from_lottery(BernoulliLottery(Q, seed=3), HonestyMap(HONESTY), 0)


class TestChernoff(unittest.TestCase):
    """Tail bounds and their empirical counterparts."""

    def test_values(self):
        self.assertAlmostEqual(chernoff_lower(8, 0.5), math.exp(-1))
        self.assertAlmostEqual(chernoff_upper(6, 1.0), math.exp(-2))
        self.assertEqual(chernoff_lower(0, 0.5), 1.0)

    def test_domain(self):
        with self.assertRaises(DomainError):
            chernoff_lower(-1, 0.5)
        with self.assertRaises(DomainError):
            chernoff_upper(5, 1.5)

    def test_bounds_dominate_sampled_tails(self):
        p = 0.08
        for mu in (8, 20):
            n = int(mu / p)
            for delta in (0.3, 0.5):
                lower = empirical_tail(p, n, (1 - delta) * mu, 20000, seed=2)
                upper = empirical_tail(p, n, (1 + delta) * mu, 20000, seed=2, side="upper")
                self.assertLessEqual(lower, chernoff_lower(mu, delta))
                self.assertLessEqual(upper, chernoff_upper(mu, delta))

    def test_tail_side(self):
        with self.assertRaises(DomainError):
            empirical_tail(0.5, 10, 5, 10, 0, side="middle")


class TestEpsilonCondition(unittest.TestCase):
    """The epsilon condition and the union bounds."""

    def test_vacuous_common_prefix(self):
        probs = slot_probs(Q, HONESTY)
        check = cp_epsilon_condition(probs, 0.1, 0.1)
        self.assertAlmostEqual(check.required, 0.2 * (1.1 / 0.9 - 1))
        self.assertAlmostEqual(check.actual, -0.02)
        self.assertFalse(check.satisfied)
        with self.assertRaises(VacuousBoundError):
            cp_failure_bound(10, 100, probs, 0.1, 0.1)

    def test_quality_condition_uses_lucky_slots(self):
        probs = slot_probs(Q, HONESTY)
        check = cq_epsilon_condition(probs, 0.1, 0.1)
        self.assertAlmostEqual(check.actual, 0.09)
        self.assertTrue(check.satisfied)
        self.assertLessEqual(cq_failure_bound(10, 100, probs, 0.1, 0.1), 1.0)

    def test_delta_domain(self):
        with self.assertRaises(DomainError):
            cp_epsilon_condition(STRONG, 1.0, 0.1)
        with self.assertRaises(DomainError):
            cp_failure_bound(20, 10, STRONG, 0.1, 0.1)

    def test_zero_delta_is_trivial(self):
        self.assertEqual(cp_failure_bound(5, 50, STRONG, 0.0, 0.0), 1.0)

    def test_bound_matches_terms(self):
        bound = cp_failure_bound(300, 400, STRONG, 0.5, 1.0)
        terms = cp_failure_terms(300, 400, STRONG, 0.5, 1.0)
        self.assertEqual(len(terms), 101)
        self.assertAlmostEqual(bound, float(terms.sum()))
        self.assertLess(bound, 1.0)

    def test_terms_reject_bad_inputs(self):
        with self.assertRaises(DomainError):
            cp_failure_terms(5, 50, STRONG, 1.0, 0.1)
        with self.assertRaises(DomainError):
            cp_failure_terms(5, 50, STRONG, 0.1, 1.5)
        with self.assertRaises(DomainError):
            cp_failure_terms(60, 50, STRONG, 0.1, 0.1)
        with self.assertRaises(DomainError):
            cp_failure_terms(-1, 50, STRONG, 0.1, 0.1)
        with self.assertRaises(DomainError):
            cp_failure_terms(5, 50, SlotProbs(p_ls=1.2, p_ss=1.2, p_as=0.1), 0.1, 0.1)

    def test_bounds_shrink_with_k(self):
        values = [cp_failure_bound(k, 2000, STRONG, 0.5, 1.0) for k in range(100, 1000, 100)]
        self.assertTrue(all(a >= b for a, b in zip(values, values[1:])))
        self.assertLess(values[-1], 1.0)


class TestGrowthAndTable(unittest.TestCase):
    """Growth bound, stake regime and the tabulated bounds."""

    def test_growth_bound(self):
        growth, failure = cg_growth_bound(1000, 0.2, 0.19)
        self.assertEqual(growth, 152)
        self.assertAlmostEqual(failure, math.exp(-3.8))
        self.assertEqual(cg_growth_bound(0, 0.2, 0.19), (0, 1.0))
        with self.assertRaises(DomainError):
            cg_growth_bound(-1, 0.2, 0.19)

    def test_stake_regime(self):
        regime = stake_regime({1: 3, 2: 1}, {1: True, 2: False})
        self.assertAlmostEqual(regime.honest_share, 0.75)
        self.assertTrue(regime.honest_majority)
        self.assertTrue(regime.honest_supermajority)
        self.assertFalse(stake_regime({1: 1, 2: 1}, {1: True, 2: False}).honest_majority)
        with self.assertRaises(DomainError):
            stake_regime({1: 0}, {1: True})

    def test_table(self):
        table = bounds_table(slot_probs(Q, HONESTY), 0.1, 0.1, [10, 15, 20], 200)
        self.assertEqual(list(table.columns), [
            "k", "cp_bound", "cq_bound", "cg_min_growth", "cg_failure", "cp_vacuous", "cq_vacuous",
        ])
        self.assertEqual(table["k"].tolist(), [10, 15, 20])
        self.assertTrue(table["cp_bound"].isna().all())
        self.assertTrue(table["cp_vacuous"].all())
        self.assertFalse(table["cq_vacuous"].any())
        self.assertTrue(np.all(np.diff(table["cq_bound"].to_numpy()) <= 0))

    def test_table_rejects_large_k(self):
        with self.assertRaises(DomainError):
            bounds_table(STRONG, 0.1, 0.1, [50], 10)


if __name__ == "__main__":
    unittest.main()

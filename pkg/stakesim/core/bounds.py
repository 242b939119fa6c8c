"""
Probability Bounds

Slot-type probabilities, Chernoff tails, the epsilon condition and the
union bounds for common prefix and chain quality, plus Monte-Carlo
helpers that tie the numbers back to the simulator's lottery.

Slot indicators are treated as independent across slots.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.exceptions import DomainError, VacuousBoundError
from .lottery import HonestyMap, LotteryModel, classify_slot


@dataclass(frozen=True)
class SlotProbs:
    """
    Per-slot probabilities of a lucky, super and adversarial slot.

    Attributes:
        p_ls: Probability that at least one honest party wins
        p_ss: Probability that exactly one honest party wins
        p_as: Probability that at least one corrupted party wins
    """
    p_ls: float
    p_ss: float
    p_as: float

    def as_dict(self) -> Dict[str, float]:
        return {"p_LS": self.p_ls, "p_SS": self.p_ss, "p_AS": self.p_as}


@dataclass(frozen=True)
class EpsilonCheck:
    required: float
    satisfied: bool
    actual: float


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise DomainError(f"{name}={value} must lie in [0, 1]")


def slot_probs(q: Mapping[int, float], honesty: Mapping[int, bool]) -> SlotProbs:
    """
    Slot-type probabilities from per-party win probabilities.

    Args:
        q: Per-party win probability
        honesty: Per-party honesty

    Returns:
        SlotProbs

    Raises:
        DomainError: a probability outside [0, 1]
    """
    for party, value in q.items():
        _check_probability(f"q[{party}]", value)

    honest = np.array([q[p] for p in q if honesty[p]], dtype=float)
    corrupted = np.array([q[p] for p in q if not honesty[p]], dtype=float)

    p_ls = 1.0 - float(np.prod(1.0 - honest)) if honest.size else 0.0
    p_ss = 0.0
    for index in range(honest.size):
        others = np.delete(honest, index)
        p_ss += float(honest[index] * np.prod(1.0 - others))
    p_as = 1.0 - float(np.prod(1.0 - corrupted)) if corrupted.size else 0.0
    return SlotProbs(p_ls=p_ls, p_ss=min(p_ss, p_ls), p_as=p_as)


def _check_tail_args(mu: float, delta: float) -> None:
    if mu < 0 or math.isnan(mu):
        raise DomainError(f"mu={mu} must be >= 0")
    _check_probability("delta", delta)


def chernoff_lower(mu: float, delta: float) -> float:
    """Lower-tail Chernoff bound exp(-delta^2 * mu / 2)."""
    _check_tail_args(mu, delta)
    return math.exp(-delta * delta * mu / 2.0)


def chernoff_upper(mu: float, delta: float) -> float:
    """Upper-tail Chernoff bound exp(-delta^2 * mu / 3)."""
    _check_tail_args(mu, delta)
    return math.exp(-delta * delta * mu / 3.0)


def _check_deltas(delta: float, delta_prime: float) -> None:
    if not 0.0 <= delta < 1.0:
        raise DomainError(f"delta={delta} must lie in [0, 1)")
    _check_probability("delta_prime", delta_prime)


def _epsilon_condition(good: float, p_as: float, factor: int, delta: float, delta_prime: float) -> EpsilonCheck:
    _check_deltas(delta, delta_prime)
    required = ((1.0 + delta_prime) / (1.0 - delta) - 1.0) * factor * p_as
    actual = good - factor * p_as
    return EpsilonCheck(required=required, satisfied=actual > required, actual=actual)


def cp_epsilon_condition(probs: SlotProbs, delta: float, delta_prime: float) -> EpsilonCheck:
    """
    Epsilon condition for the common-prefix bound.

    required = ((1 + delta') / (1 - delta) - 1) * 2 * p_AS and
    actual = p_SS - 2 * p_AS; satisfied iff actual > required.

    Raises:
        DomainError: delta outside [0, 1) or delta' outside [0, 1]
    """
    return _epsilon_condition(probs.p_ss, probs.p_as, 2, delta, delta_prime)


def cq_epsilon_condition(probs: SlotProbs, delta: float, delta_prime: float) -> EpsilonCheck:
    """Epsilon condition for the chain-quality bound (lucky slots, factor 1)."""
    return _epsilon_condition(probs.p_ls, probs.p_as, 1, delta, delta_prime)


def _union_terms(k: int, sl_now: int, good: float, p_as: float, delta: float,
                 delta_prime: float) -> np.ndarray:
    if k < 0 or k > sl_now:
        raise DomainError(f"Need 0 <= k <= sl_now, got k={k}, sl_now={sl_now}")
    _check_deltas(delta, delta_prime)
    _check_probability("p_good", good)
    _check_probability("p_AS", p_as)
    r = np.arange(k, sl_now + 1, dtype=float)
    return np.exp(-delta * delta * r * good / 2.0) + np.exp(-delta_prime * delta_prime * r * p_as / 3.0)


def _union_bound(k: int, sl_now: int, good: float, p_as: float, delta: float, delta_prime: float) -> float:
    return float(min(1.0, _union_terms(k, sl_now, good, p_as, delta, delta_prime).sum()))


def cp_failure_terms(k: int, sl_now: int, probs: SlotProbs, delta: float, delta_prime: float) -> np.ndarray:
    """
    Per-interval-length terms of the common-prefix union bound, r = k..sl_now.

    Raises:
        DomainError: bad k / sl_now, deltas or probabilities
    """
    return _union_terms(k, sl_now, probs.p_ss, probs.p_as, delta, delta_prime)


def cp_failure_bound(k: int, sl_now: int, probs: SlotProbs, delta: float, delta_prime: float) -> float:
    """
    Union bound on the common-prefix failure probability.

    Sums exp(-delta^2 r p_SS / 2) + exp(-delta'^2 r p_AS / 3) over
    interval lengths r in [k, sl_now], clamped to 1.

    Raises:
        VacuousBoundError: the epsilon condition does not hold
        DomainError: bad k / sl_now / deltas
    """
    check = cp_epsilon_condition(probs, delta, delta_prime)
    if not check.satisfied:
        raise VacuousBoundError(
            f"Epsilon condition fails (p_SS - 2 p_AS = {check.actual:.6f} <= {check.required:.6f}); "
            "the common-prefix bound is vacuous for these parameters"
        )
    return float(min(1.0, cp_failure_terms(k, sl_now, probs, delta, delta_prime).sum()))


def cq_failure_bound(k: int, sl_now: int, probs: SlotProbs, delta: float, delta_prime: float) -> float:
    """
    Chain-quality union bound: the common-prefix bound with lucky slots
    in place of super slots and factor 1.

    Raises:
        VacuousBoundError: the chain-quality epsilon condition does not hold
    """
    check = cq_epsilon_condition(probs, delta, delta_prime)
    if not check.satisfied:
        raise VacuousBoundError(
            f"Epsilon condition fails (p_LS - p_AS = {check.actual:.6f} <= {check.required:.6f}); "
            "the chain-quality bound is vacuous for these parameters"
        )
    return _union_bound(k, sl_now, probs.p_ls, probs.p_as, delta, delta_prime)


def cg_growth_bound(r: int, delta: float, p_ls: float) -> Tuple[int, float]:
    """
    Minimum chain growth over r slots and its failure probability.

    Returns:
        (ceil((1 - delta) * r * p_LS), chernoff_lower(r * p_LS, delta))
    """
    if r < 0:
        raise DomainError(f"r={r} must be >= 0")
    _check_probability("p_LS", p_ls)
    mu = r * p_ls
    failure = chernoff_lower(mu, delta)
    # 1e-9 absorbs float noise such as 0.8 * 190 = 152.00000000000003
    min_growth = max(0, math.ceil((1.0 - delta) * mu - 1e-9))
    return min_growth, failure


@dataclass(frozen=True)
class StakeRegime:
    honest_share: float
    honest_majority: bool
    honest_supermajority: bool


def stake_regime(stakes: Mapping[int, float], honesty: Mapping[int, bool]) -> StakeRegime:
    """
    Honest stake share and whether it exceeds 1/2 (growth and quality)
    and 2/3 (common prefix).
    """
    total = float(sum(stakes.values()))
    if total <= 0:
        raise DomainError("Total stake must be positive")
    share = sum(v for p, v in stakes.items() if honesty[p]) / total
    return StakeRegime(share, share > 0.5, share > 2.0 / 3.0)


def bounds_table(probs: SlotProbs, delta: float, delta_prime: float,
                 k_values: Sequence[int], sl_now: int) -> pd.DataFrame:
    """
    Per-k failure bounds as a table.

    Vacuous bounds are reported as NaN with ``vacuous`` set, rather than
    raised, so a whole range can be tabulated.
    """
    cp_check = cp_epsilon_condition(probs, delta, delta_prime)
    cq_check = cq_epsilon_condition(probs, delta, delta_prime)
    rows: List[Dict[str, object]] = []
    for k in k_values:
        row: Dict[str, object] = {"k": k}
        if k > sl_now:
            raise DomainError(f"k={k} exceeds sl_now={sl_now}")
        row["cp_bound"] = (
            _union_bound(k, sl_now, probs.p_ss, probs.p_as, delta, delta_prime)
            if cp_check.satisfied else float("nan")
        )
        row["cq_bound"] = (
            _union_bound(k, sl_now, probs.p_ls, probs.p_as, delta, delta_prime)
            if cq_check.satisfied else float("nan")
        )
        min_growth, failure = cg_growth_bound(k, delta, probs.p_ls)
        row["cg_min_growth"] = min_growth
        row["cg_failure"] = failure
        row["cp_vacuous"] = not cp_check.satisfied
        row["cq_vacuous"] = not cq_check.satisfied
        rows.append(row)
    return pd.DataFrame(rows, columns=[
        "k", "cp_bound", "cq_bound", "cg_min_growth", "cg_failure", "cp_vacuous", "cq_vacuous",
    ])


def monte_carlo_slot_probs(q: Mapping[int, float], honesty: Mapping[int, bool],
                           samples: int, seed: int) -> SlotProbs:
    """Estimate SlotProbs by sampling independent Bernoulli wins per slot."""
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    parties = list(q)
    probs = np.array([q[p] for p in parties], dtype=float)
    honest_mask = np.array([honesty[p] for p in parties], dtype=bool)
    wins = rng.random((samples, len(parties))) < probs
    honest_wins = wins[:, honest_mask].sum(axis=1)
    corrupted_wins = wins[:, ~honest_mask].sum(axis=1)
    return SlotProbs(
        p_ls=float(np.mean(honest_wins >= 1)),
        p_ss=float(np.mean(honest_wins == 1)),
        p_as=float(np.mean(corrupted_wins >= 1)),
    )


def empirical_tail(p: float, n: int, threshold: float, trials: int, seed: int,
                   side: str = "lower") -> float:
    """
    Fraction of trials whose Binomial(n, p) sum falls at or below
    (side="lower") or at or above (side="upper") the threshold.
    """
    if side not in ("lower", "upper"):
        raise DomainError("side must be 'lower' or 'upper'")
    rng = np.random.default_rng(seed)
    sums = rng.binomial(n, p, size=trials)
    if side == "lower":
        return float(np.mean(sums <= threshold))
    return float(np.mean(sums >= threshold))


def sample_from_lottery(lottery: LotteryModel, honesty: HonestyMap, slots: int,
                        start: int = 1) -> SlotProbs:
    """Frequencies of lucky / super / adversarial slots of an actual lottery."""
    if slots < 1:
        raise DomainError("slots must be >= 1")
    counts = np.zeros(3, dtype=np.int64)
    for sl in range(start, start + slots):
        cls = classify_slot(sl, lottery, honesty)
        counts += (cls.lucky, cls.super, cls.adversarial)
    return SlotProbs(*(counts / slots).tolist())

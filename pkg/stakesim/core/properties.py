"""
Property Checkers

Runtime checkers over a Trace: the three precondition monitors
(collision-free, forging-free, knowledge propagation), super block
positions, chain growth, chain quality and common prefix.

Every checker returns a Verdict. A property is only claimed under its
preconditions, so a checker whose preconditions fail returns
PRECONDITION_FAILED instead of HOLDS.

Slack constants (CheckConstants) default to values that never report a
violation on a trace satisfying the preconditions; ``literal()`` gives the
tight constants without slack.
"""

import bisect
from dataclasses import dataclass, field
from functools import lru_cache
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..utils.config_manager import CheckConfig, ScenarioConfig
from ..utils.exceptions import CheckerInputError
from ..utils.formatters import format_hash
from .model import GENESIS, Block, BlockPool, Chain, ChainLink, hash_block, pool_collisions
from .world import CHAIN_CACHE_SIZE, COLLISION, FORGING, KNOWLEDGE, Trace, run

CHECKERS = (
    "collision",
    "forging",
    "knowledge",
    "super-positions",
    "growth",
    "quality",
    "common-prefix",
)

QUALITY_WINDOW_SIZES = (4, 8, 16)


class VerdictKind(Enum):
    HOLDS = "holds"
    PRECONDITION_FAILED = "precondition_failed"
    VIOLATED = "violated"


_SEVERITY = {VerdictKind.HOLDS: 0, VerdictKind.PRECONDITION_FAILED: 1, VerdictKind.VIOLATED: 2}


@dataclass
class Verdict:
    """
    Result of one checker evaluation.

    A violated verdict carries a witness with the parameters needed to
    replay it (see replay_verdict).
    """
    kind: VerdictKind
    checker: str
    params: Dict[str, Any] = field(default_factory=dict)
    reason: Optional[str] = None
    witness: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def holds(cls, checker: str, params: Optional[Dict[str, Any]] = None, **details: Any) -> "Verdict":
        return cls(VerdictKind.HOLDS, checker, dict(params or {}), details=details)

    @classmethod
    def precondition_failed(cls, checker: str, params: Optional[Dict[str, Any]], reason: str) -> "Verdict":
        return cls(VerdictKind.PRECONDITION_FAILED, checker, dict(params or {}), reason=reason)

    @classmethod
    def violated(cls, checker: str, params: Optional[Dict[str, Any]], witness: Dict[str, Any]) -> "Verdict":
        return cls(VerdictKind.VIOLATED, checker, dict(params or {}), witness=witness)

    @property
    def ok(self) -> bool:
        return self.kind is not VerdictKind.VIOLATED

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "checker": self.checker,
            "params": self.params,
            "verdict": self.kind.value,
        }
        if self.reason is not None:
            data["reason"] = self.reason
        if self.witness is not None:
            data["witness"] = self.witness
        if self.details:
            data["details"] = self.details
        return data


def worst(verdicts: Iterable[Verdict]) -> VerdictKind:
    """Most severe verdict kind (HOLDS for an empty sequence)."""
    kind = VerdictKind.HOLDS
    for verdict in verdicts:
        if _SEVERITY[verdict.kind] > _SEVERITY[kind]:
            kind = verdict.kind
    return kind


@dataclass(frozen=True)
class CheckConstants:
    """
    Slack constants of the growth, quality and common-prefix checkers.

    Growth counts lucky slots in [sl1 + growth_lo_offset, sl2 - growth_hi_offset].
    Quality lowers the required honest block count by quality_slack.
    The common-prefix bad event looks for sl' <= k + cp_start_offset and
    sl'' in [sl1, sl2] with super(sl', sl'' - cp_super_tail) compared to
    2 * adversarial(sl', sl'' - cp_adv_tail), using <= when cp_inclusive.
    """
    growth_lo_offset: int = 1
    growth_hi_offset: int = 2
    quality_slack: int = 2
    cp_start_offset: int = 1
    cp_super_tail: int = 2
    cp_adv_tail: int = 1
    cp_inclusive: bool = True

    @classmethod
    def literal(cls) -> "CheckConstants":
        return cls(growth_lo_offset=1, growth_hi_offset=1, quality_slack=0,
                   cp_start_offset=0, cp_super_tail=0, cp_adv_tail=0, cp_inclusive=False)

    @classmethod
    def from_config(cls, checks: CheckConfig) -> "CheckConstants":
        return cls(
            growth_lo_offset=checks.growth_lo_offset,
            growth_hi_offset=checks.growth_hi_offset,
            quality_slack=checks.quality_slack,
            cp_start_offset=checks.cp_start_offset,
            cp_super_tail=checks.cp_super_tail,
            cp_adv_tail=checks.cp_adv_tail,
            cp_inclusive=checks.cp_inclusive,
        )


DEFAULT_CONSTANTS = CheckConstants()


class _ChainIndex:
    """Per-trace bounded cache of snapshot tuples and their negated slot lists."""

    def __init__(self, trace: Trace):
        self.trace = trace
        self._entry = lru_cache(maxsize=CHAIN_CACHE_SIZE)(self._build)

    @staticmethod
    def _build(link: ChainLink) -> Tuple[Chain, List[int]]:
        chain = link.to_chain()
        return chain, [-b.slot for b in chain]

    def get(self, party: int, sl: int) -> Tuple[Chain, List[int]]:
        return self._entry(self.trace.snapshot_link(party, sl))

    def cache_info(self) -> Any:
        return self._entry.cache_info()


def _index(trace: Trace) -> _ChainIndex:
    index = getattr(trace, "_chain_index", None)
    if index is None:
        index = _ChainIndex(trace)
        trace._chain_index = index  # type: ignore[attr-defined]
    return index


def _require(trace: Trace, party: int, sl: int) -> None:
    if party not in trace.snapshots:
        raise CheckerInputError(f"Party {party} is not an honest party of this trace")
    if not 0 <= sl <= trace.horizon:
        raise CheckerInputError(f"Slot {sl} outside 0..{trace.horizon}")


def _hex(block: Block, width: int) -> str:
    return format_hash(hash_block(block, width), width)


# Precondition monitors

def check_collision_free(trace: Trace) -> Verdict:
    """No two distinct blocks in the history (genesis included) share a hash."""
    pairs = pool_collisions([GENESIS] + trace.history_blocks, trace.width)
    if not pairs:
        return Verdict.holds("collision")
    first, second = pairs[0]
    return Verdict.violated("collision", {}, {
        "first_slot": trace.first_violation(COLLISION),
        "hash": _hex(first, trace.width),
        "blocks": [
            {"slot": b.slot, "bid": b.bid, "pred": format_hash(b.pred, trace.width)}
            for b in (first, second)
        ],
    })


def check_forging_free(trace: Trace) -> Verdict:
    """Every adversarial emission with an honest bid was already in the history."""
    events = [e for e in trace.monitor_events if e.monitor == FORGING]
    if not events:
        return Verdict.holds("forging")
    return Verdict.violated("forging", {}, {"first_slot": events[0].slot, **events[0].detail})


def check_knowledge_propagation(trace: Trace) -> Verdict:
    """Honest trees at Ready are contained in every honest tree after the next Receive."""
    if not trace.knowledge_monitored:
        return Verdict.precondition_failed("knowledge", {}, "knowledge monitor was disabled for this run")
    events = [e for e in trace.monitor_events if e.monitor == KNOWLEDGE]
    if not events:
        return Verdict.holds("knowledge")
    return Verdict.violated("knowledge", {}, {"first_slot": events[0].slot, **events[0].detail})


def _base_preconditions(trace: Trace, checker: str, params: Dict[str, Any],
                        knowledge: bool = False) -> Optional[Verdict]:
    if trace.first_violation(COLLISION) is not None or not check_collision_free(trace).ok:
        return Verdict.precondition_failed(checker, params, "trace is not collision-free")
    if trace.first_violation(FORGING) is not None:
        return Verdict.precondition_failed(checker, params, "trace is not forging-free")
    if knowledge and trace.first_violation(KNOWLEDGE) is not None:
        return Verdict.precondition_failed(checker, params, "knowledge propagation failed")
    return None


def block_positions(pool: Sequence[Block], width: int) -> Dict[Block, int]:
    """Position of every pool block (0 when its pointer walk does not reach genesis)."""
    index = BlockPool(pool, width)
    positions: Dict[Block, int] = {GENESIS: 1}
    for block in index.blocks:
        if block in positions:
            continue
        path: List[Block] = []
        on_path = set()
        current: Optional[Block] = block
        while current is not None and current not in positions and current not in on_path:
            path.append(current)
            on_path.add(current)
            current = index.by_hash.get(current.pred)
        base = positions.get(current, 0) if current is not None and current not in on_path else 0
        for b in reversed(path):
            base = base + 1 if base > 0 else 0
            positions[b] = base
    return positions


def check_super_positions(trace: Trace) -> Verdict:
    """Every honest block baked in a super slot has a position no other honest block has."""
    params: Dict[str, Any] = {}
    failed = _base_preconditions(trace, "super-positions", params)
    if failed is not None:
        return failed

    pool = [GENESIS] + trace.history_blocks
    positions = block_positions(pool, trace.width)
    honest_blocks = [GENESIS] + [e.block for e in trace.history_log if not e.by_adversary]
    by_position: Dict[int, List[Block]] = {}
    for block in dict.fromkeys(honest_blocks):
        by_position.setdefault(positions.get(block, 0), []).append(block)

    super_blocks = [
        e.block for e in trace.history_log
        if not e.by_adversary and e.block.slot <= trace.ledger.last and trace.ledger[e.block.slot].super
    ]
    for sb in super_blocks:
        others = [b for b in by_position.get(positions.get(sb, 0), []) if b != sb]
        if others:
            return Verdict.violated("super-positions", params, {
                "position": positions.get(sb, 0),
                "super_block": {"slot": sb.slot, "bid": sb.bid, "hash": _hex(sb, trace.width)},
                "other": {"slot": others[0].slot, "bid": others[0].bid,
                          "hash": _hex(others[0], trace.width)},
            })
    return Verdict.holds("super-positions", params, super_blocks=len(super_blocks))


# Chain growth

def check_chain_growth(trace: Trace, sl1: int, p1: int, sl2: int, p2: int,
                       constants: CheckConstants = DEFAULT_CONSTANTS) -> Verdict:
    """
    Chain growth between two honest snapshots.

    With w lucky slots in [sl1 + lo, sl2 - hi]: holds iff
    |snapshot(p1, sl1)| + w <= |snapshot(p2, sl2)|. Two different parties
    at the same slot are not comparable (a block needs one slot to
    propagate), which is reported as a failed precondition.

    Raises:
        CheckerInputError: unknown party, slot out of range or sl1 > sl2
    """
    params = {"sl1": sl1, "p1": p1, "sl2": sl2, "p2": p2}
    _require(trace, p1, sl1)
    _require(trace, p2, sl2)
    if sl1 > sl2:
        raise CheckerInputError(f"sl1={sl1} must not exceed sl2={sl2}")
    if sl1 == sl2 and p1 != p2:
        return Verdict.precondition_failed("growth", params, "different parties at the same slot")
    failed = _base_preconditions(trace, "growth", params, knowledge=True)
    if failed is not None:
        return failed
    return _growth(trace, sl1, p1, sl2, p2, constants)


def _growth(trace: Trace, sl1: int, p1: int, sl2: int, p2: int, constants: CheckConstants) -> Verdict:
    params = {"sl1": sl1, "p1": p1, "sl2": sl2, "p2": p2}
    w = trace.ledger.lucky_count(sl1 + constants.growth_lo_offset, sl2 - constants.growth_hi_offset)
    len1 = trace.snapshot_length(p1, sl1)
    len2 = trace.snapshot_length(p2, sl2)
    if len1 + w <= len2:
        return Verdict.holds("growth", params, lucky=w)
    return Verdict.violated("growth", params, {
        "lucky": w, "length1": len1, "length2": len2,
        "head1": _hex(trace.snapshot_link(p1, sl1).block, trace.width),
        "head2": _hex(trace.snapshot_link(p2, sl2).block, trace.width),
    })


def sweep_slots(trace: Trace, stride: int = 1) -> List[int]:
    """Slots 1..horizon visited by the pairwise sweeps."""
    if stride < 1:
        raise CheckerInputError("stride must be >= 1")
    return list(range(1, trace.horizon + 1, stride))


def check_chain_growth_all(trace: Trace, stride: int = 1,
                           constants: CheckConstants = DEFAULT_CONSTANTS) -> Verdict:
    """Growth for every honest pair and every sl1 <= sl2 of the sweep."""
    params = {"stride": stride}
    failed = _base_preconditions(trace, "growth", params, knowledge=True)
    if failed is not None:
        return failed
    slots = sweep_slots(trace, stride)
    checks = 0
    for p1 in trace.honest:
        for p2 in trace.honest:
            for a, sl1 in enumerate(slots):
                for sl2 in slots[a:]:
                    if sl1 == sl2 and p1 != p2:
                        continue
                    checks += 1
                    verdict = _growth(trace, sl1, p1, sl2, p2, constants)
                    if verdict.kind is VerdictKind.VIOLATED:
                        verdict.params = dict(params, **verdict.params)
                        return verdict
    return Verdict.holds("growth", params, checks=checks)


# Chain quality

class _AdvantageIndex:
    """Minimum honest advantage over long intervals, with a cache per (sl, span)."""

    def __init__(self, trace: Trace):
        steps = trace.ledger.advantage_steps()
        self.prefix = np.concatenate(([0], np.cumsum(steps)))
        self._cache: Dict[Tuple[int, int], Optional[int]] = {}
        self._suffixes: Dict[int, np.ndarray] = {}

    def min_advantage(self, sl: int, span: int) -> Optional[int]:
        """
        Minimum advantage over [a, b] inside [0, sl - 1] with b - a > span,
        or None when no such interval exists.
        """
        key = (sl, span)
        if key in self._cache:
            return self._cache[key]
        d = span + 1
        last = sl - 1
        result: Optional[int] = None
        if last - d >= 0:
            # advantage(a, b) = prefix[b + 1] - prefix[a] with b >= a + d, b <= last
            tail = self.prefix[: last + 2]
            suffix_min = self._suffix_min(sl, tail)
            starts = np.arange(0, last - d + 1)
            result = int(np.min(suffix_min[starts + d + 1] - tail[starts]))
        self._cache[key] = result
        return result

    def _suffix_min(self, sl: int, tail: np.ndarray) -> np.ndarray:
        cached = self._suffixes.get(sl)
        if cached is None:
            cached = np.minimum.accumulate(tail[::-1])[::-1]
            self._suffixes[sl] = cached
        return cached


def _advantage_index(trace: Trace) -> _AdvantageIndex:
    index = getattr(trace, "_advantage_index", None)
    if index is None:
        index = _AdvantageIndex(trace)
        trace._advantage_index = index  # type: ignore[attr-defined]
    return index


def _quality(trace: Trace, sl: int, p: int, i: int, j: int, constants: CheckConstants) -> Verdict:
    params = {"sl": sl, "p": p, "i": i, "j": j}
    chain, _ = _index(trace).get(p, sl)
    window = chain[i: j + 1]
    span = chain[i].slot - chain[j].slot
    lowest = _advantage_index(trace).min_advantage(sl, span)
    required = max(0, (lowest if lowest is not None else 0) - constants.quality_slack)
    honest = sum(1 for b in window if trace.honesty.is_honest(b.bid))
    if honest >= required:
        return Verdict.holds("quality", params, honest=honest, required=required)
    return Verdict.violated("quality", params, {
        "honest_blocks": honest, "required": required, "span": span,
        "window_slots": [chain[j].slot, chain[i].slot],
    })


def check_chain_quality(trace: Trace, sl: int, p: int, i: int, j: int,
                        constants: CheckConstants = DEFAULT_CONSTANTS) -> Verdict:
    """
    Chain quality of the window chain[i..j] (head first, i <= j) of
    snapshot(p, sl).

    The required honest block count is the minimum honest advantage over
    all intervals inside [0, sl - 1] longer than the window's slot span,
    floored at 0, minus the quality slack.

    Raises:
        CheckerInputError: unknown party, slot or window indices out of range
    """
    _require(trace, p, sl)
    chain, _ = _index(trace).get(p, sl)
    if not 0 <= i <= j < len(chain):
        raise CheckerInputError(f"Window [{i}, {j}] outside chain of length {len(chain)}")
    failed = _base_preconditions(trace, "quality", {"sl": sl, "p": p, "i": i, "j": j}, knowledge=True)
    if failed is not None:
        return failed
    return _quality(trace, sl, p, i, j, constants)


def quality_windows(length: int, sizes: Sequence[int] = QUALITY_WINDOW_SIZES) -> List[Tuple[int, int]]:
    """Whole-chain window plus tiled windows of each size."""
    windows = [(0, length - 1)]
    for size in sizes:
        if size >= length:
            continue
        windows.extend((start, start + size - 1) for start in range(0, length - size + 1, size))
    return windows


def check_chain_quality_all(trace: Trace, stride: int = 1,
                            constants: CheckConstants = DEFAULT_CONSTANTS,
                            sizes: Sequence[int] = QUALITY_WINDOW_SIZES) -> Verdict:
    """Quality over a window family of every honest snapshot of the sweep."""
    params = {"stride": stride}
    failed = _base_preconditions(trace, "quality", params, knowledge=True)
    if failed is not None:
        return failed
    checks = 0
    for p in trace.honest:
        for sl in sweep_slots(trace, stride):
            chain, _ = _index(trace).get(p, sl)
            for i, j in quality_windows(len(chain), sizes):
                checks += 1
                verdict = _quality(trace, sl, p, i, j, constants)
                if verdict.kind is VerdictKind.VIOLATED:
                    verdict.params = dict(params, **verdict.params)
                    return verdict
    return Verdict.holds("quality", params, checks=checks)


# Common prefix

def _pruned_is_prefix(trace: Trace, sl1: int, p1: int, sl2: int, p2: int, k: int) -> bool:
    """
    is_prefix(prune(k, snapshot(p1, sl1)), snapshot(p2, sl2)).

    On a collision-free trace two valid chains holding the same block at
    the same height share everything below it, so one comparison decides.
    """
    index = _index(trace)
    c1, neg1 = index.get(p1, sl1)
    c2, _ = index.get(p2, sl2)
    start = bisect.bisect_left(neg1, -k)
    kept = len(c1) - start
    if kept == 0:
        return True
    if kept > len(c2):
        return False
    return c2[len(c2) - kept] == c1[start]


def _bad_event(trace: Trace, sl1: int, sl2: int, k: int,
               constants: CheckConstants) -> Optional[Tuple[int, int]]:
    """
    Find (sl', sl'') with sl' <= k + start offset and sl'' in [sl1, sl2]
    where super slots fail to outnumber twice the adversarial slots.
    """
    ledger = trace.ledger
    top = min(k + constants.cp_start_offset, ledger.last)
    if top < 0:
        return None
    starts = np.arange(0, top + 1)
    super_prefix = np.concatenate(([0], np.cumsum(ledger.super)))
    adv_prefix = np.concatenate(([0], np.cumsum(ledger.adversarial)))

    def count(prefix: np.ndarray, hi: int) -> np.ndarray:
        if hi < 0:
            return np.zeros_like(starts)
        hi = min(hi, ledger.last)
        return np.where(starts <= hi, prefix[hi + 1] - prefix[np.minimum(starts, hi + 1)], 0)

    for sl_end in range(sl1, sl2 + 1):
        supers = count(super_prefix, sl_end - constants.cp_super_tail)
        advs = count(adv_prefix, sl_end - constants.cp_adv_tail)
        hits = supers <= 2 * advs if constants.cp_inclusive else supers < 2 * advs
        found = np.nonzero(hits)[0]
        if found.size:
            return int(starts[found[-1]]), sl_end
    return None


def _common_prefix(trace: Trace, sl1: int, p1: int, sl2: int, p2: int, k: int,
                   constants: CheckConstants) -> Verdict:
    params = {"sl1": sl1, "p1": p1, "sl2": sl2, "p2": p2, "k": k}
    if _pruned_is_prefix(trace, sl1, p1, sl2, p2, k):
        return Verdict.holds("common-prefix", params, disjunct="prefix")
    event = _bad_event(trace, sl1, sl2, k, constants)
    if event is not None:
        return Verdict.holds("common-prefix", params, disjunct="bad-event",
                             sl_start=event[0], sl_end=event[1])
    c1 = trace.snapshot(p1, sl1)
    c2 = trace.snapshot(p2, sl2)
    return Verdict.violated("common-prefix", params, {
        "length1": len(c1), "length2": len(c2),
        "head1": _hex(c1[0], trace.width), "head2": _hex(c2[0], trace.width),
        "divergence_slot": _divergence_slot(c1, c2),
    })


def check_common_prefix(trace: Trace, sl1: int, p1: int, sl2: int, p2: int, k: int,
                        constants: CheckConstants = DEFAULT_CONSTANTS) -> Verdict:
    """
    Timed common prefix for one pair of honest snapshots.

    Holds when prune(k, snapshot(p1, sl1)) is a prefix of snapshot(p2, sl2),
    or when the super/adversarial bad event occurred. The verdict details
    name the disjunct that held; the bad event is only searched when the
    prefix test fails.

    Raises:
        CheckerInputError: unknown party, slot out of range or sl1 > sl2
    """
    _require(trace, p1, sl1)
    _require(trace, p2, sl2)
    if sl1 > sl2:
        raise CheckerInputError(f"sl1={sl1} must not exceed sl2={sl2}")
    params = {"sl1": sl1, "p1": p1, "sl2": sl2, "p2": p2, "k": k}
    failed = _base_preconditions(trace, "common-prefix", params)
    if failed is not None:
        return failed
    return _common_prefix(trace, sl1, p1, sl2, p2, k, constants)


def check_common_prefix_all(trace: Trace, k: int, stride: int = 1,
                            constants: CheckConstants = DEFAULT_CONSTANTS) -> Verdict:
    """
    Common prefix for all honest pairs (p1 = p2 included) and all
    sl1 <= sl2 of the sweep. Details count which disjunct held.
    """
    params = {"k": k, "stride": stride}
    failed = _base_preconditions(trace, "common-prefix", params)
    if failed is not None:
        return failed
    slots = sweep_slots(trace, stride)
    counts = {"prefix": 0, "bad-event": 0}
    for p1 in trace.honest:
        for p2 in trace.honest:
            for a, sl1 in enumerate(slots):
                for sl2 in slots[a:]:
                    verdict = _common_prefix(trace, sl1, p1, sl2, p2, k, constants)
                    if verdict.kind is VerdictKind.VIOLATED:
                        verdict.params = dict(params, **verdict.params)
                        return verdict
                    counts[verdict.details["disjunct"]] += 1
    return Verdict.holds("common-prefix", params, checks=sum(counts.values()),
                         prefix=counts["prefix"], bad_event=counts["bad-event"])


def _common_height(c1: Chain, c2: Chain) -> int:
    """Number of trailing blocks the two chains share (binary search on height)."""
    lo, hi = 0, min(len(c1), len(c2))
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if c1[len(c1) - mid] == c2[len(c2) - mid]:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _divergence_slot(c1: Chain, c2: Chain) -> Optional[int]:
    common = _common_height(c1, c2)
    if common >= len(c1):
        return None
    return c1[len(c1) - common - 1].slot


def _lowest_divergence(link: ChainLink, through: Dict[Tuple[int, Block], int],
                       heads: int) -> Optional[int]:
    """
    Slot of the lowest block of ``link`` that some recorded head lacks.

    Counts only grow towards genesis, so the walk stops at the first
    block every recorded head passes through.
    """
    divergence = None
    node: Optional[ChainLink] = link
    while node is not None and through.get((node.length, node.block), 0) < heads:
        divergence = node.block.slot
        node = node.rest
    return divergence


def rollback_requested(checks: Optional[Sequence[str]]) -> bool:
    """Rollback depth is reported alongside common prefix only."""
    return checks is None or "common-prefix" in checks


def rollback_depth(trace: Trace, stride: int = 1) -> int:
    """
    Smallest d such that prune(sl1 - d, snapshot(p1, sl1)) is a prefix of
    snapshot(p2, sl2) for every honest pair and sl1 <= sl2 of the sweep.

    Slots are visited from the last one down, so every snapshot seen so
    far is a valid sl2 for the current sl1.
    """
    depth = 0
    through: Dict[Tuple[int, Block], int] = {}
    recorded: Set[int] = set()
    heads = 0
    for sl in reversed(sweep_slots(trace, stride)):
        links = [trace.snapshot_link(p, sl) for p in trace.honest]
        for link in links:
            if id(link) in recorded:
                continue
            recorded.add(id(link))
            heads += 1
            node: Optional[ChainLink] = link
            while node is not None:
                key = (node.length, node.block)
                through[key] = through.get(key, 0) + 1
                node = node.rest
        for link in links:
            divergence = _lowest_divergence(link, through, heads)
            if divergence is not None:
                depth = max(depth, sl - divergence + 1)
    return depth


# Drivers

def run_checks(trace: Trace, checks: Optional[Sequence[str]] = None,
               k_values: Optional[Sequence[int]] = None, stride: int = 1,
               constants: CheckConstants = DEFAULT_CONSTANTS) -> List[Verdict]:
    """
    Evaluate a list of checkers over a trace.

    Args:
        trace: Run trace
        checks: Checker names (all when None)
        k_values: k values for the common-prefix sweep
        stride: Sweep stride
        constants: Slack constants

    Returns:
        One verdict per checker (one per k for common-prefix)
    """
    names = list(checks) if checks is not None else list(CHECKERS)
    unknown = [name for name in names if name not in CHECKERS]
    if unknown:
        raise CheckerInputError(f"Unknown checker(s): {', '.join(unknown)}")

    verdicts: List[Verdict] = []
    for name in names:
        if name == "collision":
            verdicts.append(check_collision_free(trace))
        elif name == "forging":
            verdicts.append(check_forging_free(trace))
        elif name == "knowledge":
            verdicts.append(check_knowledge_propagation(trace))
        elif name == "super-positions":
            verdicts.append(check_super_positions(trace))
        elif name == "growth":
            verdicts.append(check_chain_growth_all(trace, stride, constants))
        elif name == "quality":
            verdicts.append(check_chain_quality_all(trace, stride, constants))
        elif name == "common-prefix":
            for k in (k_values if k_values is not None else [10, 20, 40]):
                verdicts.append(check_common_prefix_all(trace, k, stride, constants))
    return verdicts


_SINGLE_CHECKERS = {
    "collision": lambda trace, params, constants: check_collision_free(trace),
    "forging": lambda trace, params, constants: check_forging_free(trace),
    "knowledge": lambda trace, params, constants: check_knowledge_propagation(trace),
    "super-positions": lambda trace, params, constants: check_super_positions(trace),
    "growth": lambda trace, params, constants: (
        check_chain_growth(trace, params["sl1"], params["p1"], params["sl2"], params["p2"], constants)
        if "sl1" in params else check_chain_growth_all(trace, params.get("stride", 1), constants)
    ),
    "quality": lambda trace, params, constants: (
        check_chain_quality(trace, params["sl"], params["p"], params["i"], params["j"], constants)
        if "sl" in params else check_chain_quality_all(trace, params.get("stride", 1), constants)
    ),
    "common-prefix": lambda trace, params, constants: (
        check_common_prefix(trace, params["sl1"], params["p1"], params["sl2"], params["p2"],
                            params["k"], constants)
        if "sl1" in params else check_common_prefix_all(trace, params["k"], params.get("stride", 1), constants)
    ),
}


def replay_verdict(cfg: ScenarioConfig, checker: str, params: Dict[str, Any],
                   constants: Optional[CheckConstants] = None) -> Verdict:
    """
    Re-run a scenario and re-evaluate one checker.

    Params of a single pair-state (sl1/p1/sl2/p2 and so on) evaluate that
    state only; sweep params (stride, k) rerun the sweep.
    """
    if checker not in _SINGLE_CHECKERS:
        raise CheckerInputError(f"Unknown checker: {checker}")
    constants = constants or CheckConstants.from_config(cfg.checks)
    trace = run(cfg)
    return _SINGLE_CHECKERS[checker](trace, params, constants)

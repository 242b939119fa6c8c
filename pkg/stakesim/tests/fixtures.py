"""
Scenario builders shared by the test suites.
"""

import copy
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..utils.config_manager import ScenarioConfig, parse_config_dict


def scenario_dict(parties: Sequence[Dict[str, Any]], horizon: int = 20, **extra: Any) -> Dict[str, Any]:
    """Raw scenario document with the given parties."""
    data: Dict[str, Any] = {
        "version": 1,
        "name": extra.pop("name", "test"),
        "horizon": horizon,
        "parties": [dict(p) for p in parties],
    }
    data.update(copy.deepcopy(extra))
    return data


def bernoulli(qs: Sequence[float], corrupted: Sequence[int] = (), horizon: int = 20,
              **extra: Any) -> ScenarioConfig:
    """Parties 1..n with the given win probabilities; ids in ``corrupted`` are not honest."""
    parties = [
        {"id": i, "q": q, "honest": i not in corrupted}
        for i, q in enumerate(qs, start=1)
    ]
    return parse_config_dict(scenario_dict(parties, horizon, **extra))


def scripted(n_parties: int, wins: List[Tuple[int, int]], corrupted: Sequence[int] = (),
             horizon: int = 10, **extra: Any) -> ScenarioConfig:
    """Parties 1..n winning exactly the (party, slot) pairs in ``wins``."""
    parties = [{"id": i, "honest": i not in corrupted} for i in range(1, n_parties + 1)]
    lottery: Dict[str, Any] = {"type": "scripted", "wins": [list(w) for w in wins]}
    return parse_config_dict(scenario_dict(parties, horizon, lottery=lottery, **extra))


def always_wins(n_parties: int = 1, horizon: int = 5, master: Optional[int] = None) -> ScenarioConfig:
    """Every party wins every slot >= 1."""
    extra: Dict[str, Any] = {}
    if master is not None:
        extra["seeds"] = {"master": master}
    return bernoulli([1.0] * n_parties, horizon=horizon, **extra)

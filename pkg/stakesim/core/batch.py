"""
Batch Runner

Runs one scenario over many derived master seeds, sequentially or in a
process pool, and aggregates violation counts per checker.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from ..utils.config_manager import ScenarioConfig, derive_seed
from ..utils.exceptions import ConfigError
from ..utils.logger import get_logger
from .properties import (
    CHECKERS,
    CheckConstants,
    VerdictKind,
    rollback_depth,
    rollback_requested,
    run_checks,
    worst,
)
from .storage_manager import StorageManager, trace_digest
from .world import run

logger = get_logger()

BATCH_MODES = ("sequential", "concurrent")


@dataclass
class BatchResult:
    """Per-seed rows plus the per-checker aggregate."""
    rows: List[Dict[str, Any]]
    violations: Dict[str, int]
    precondition_failures: Dict[str, int]
    mode: str
    output_dir: Optional[str] = None
    files: List[str] = field(default_factory=list)

    @property
    def runs(self) -> int:
        return len(self.rows)

    @property
    def violated_runs(self) -> int:
        return sum(1 for row in self.rows if row["violated"])

    def aggregate(self) -> Dict[str, Any]:
        return {
            "runs": self.runs,
            "violated_runs": self.violated_runs,
            "mode": self.mode,
            "violations": dict(self.violations),
            "precondition_failures": dict(self.precondition_failures),
        }


def batch_seeds(master: int, n_seeds: int) -> List[int]:
    """Master seeds of the batch members, derived from the scenario's master seed."""
    return [derive_seed(master, f"batch-{index}") for index in range(n_seeds)]


def _run_one(cfg: ScenarioConfig, index: int, seed: int, checks: Optional[Sequence[str]],
             k_values: Optional[Sequence[int]], stride: int,
             out_dir: Optional[str], write_dot: bool) -> Dict[str, Any]:
    """Run and check one member; top-level so the process pool can pickle it."""
    member = cfg.with_master_seed(seed, reset_streams=True)
    member.name = f"{cfg.name}-{index:04d}"
    trace = run(member)
    verdicts = run_checks(trace, checks, k_values, stride, CheckConstants.from_config(member.checks))
    extra: Dict[str, Any] = {}
    if rollback_requested(checks):
        extra["rollback_depth"] = rollback_depth(trace, stride)

    if out_dir is not None:
        storage = StorageManager(out_dir).subdirectory(f"seed-{index:04d}")
        storage.save_run(trace, verdicts, write_dot=write_dot, extra=extra)

    per_checker: Dict[str, str] = {}
    for name in sorted({v.checker for v in verdicts}):
        per_checker[name] = worst(v for v in verdicts if v.checker == name).value

    return dict({
        "index": index,
        "seed": seed,
        "trace_digest": trace_digest(trace),
        "blocks": len(trace.history_log),
        "min_final_length": min(link.length for link in trace.final.values()),
        "violated": any(v.kind is VerdictKind.VIOLATED for v in verdicts),
        "verdicts": per_checker,
    }, **extra)


def run_batch(cfg: ScenarioConfig, n_seeds: int, mode: str = "sequential", workers: int = 4,
              checks: Optional[Sequence[str]] = None, k_values: Optional[Sequence[int]] = None,
              stride: int = 1, out_dir: Optional[str] = None, write_dot: bool = False) -> BatchResult:
    """
    Run a scenario over ``n_seeds`` derived master seeds.

    Args:
        cfg: Scenario
        n_seeds: Number of members
        mode: ``sequential`` or ``concurrent`` (process pool)
        workers: Pool size for concurrent mode
        checks: Checker names (all when None)
        k_values: Common-prefix k values
        stride: Sweep stride
        out_dir: Directory for one report per seed plus the aggregate
        write_dot: Also write a DOT file per seed

    Returns:
        BatchResult, identical across modes

    Raises:
        ConfigError: bad mode, seed count or worker count
    """
    issues = []
    if mode not in BATCH_MODES:
        issues.append(f"Unknown batch mode '{mode}' (expected one of {', '.join(BATCH_MODES)})")
    if n_seeds < 1:
        issues.append("Batch needs at least one seed")
    if workers < 1:
        issues.append("Batch needs at least one worker")
    if issues:
        raise ConfigError(issues)

    start = time.perf_counter()
    seeds = batch_seeds(cfg.seeds.master, n_seeds)
    jobs = [(cfg, index, seed, checks, k_values, stride, out_dir, write_dot)
            for index, seed in enumerate(seeds)]

    if mode == "concurrent":
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, *job) for job in jobs]
            rows = [future.result() for future in futures]
    else:
        rows = [_run_one(*job) for job in jobs]

    names = list(checks) if checks is not None else list(CHECKERS)
    violations = {name: 0 for name in names}
    precondition_failures = {name: 0 for name in names}
    for row in rows:
        for name, kind in row["verdicts"].items():
            if kind == VerdictKind.VIOLATED.value:
                violations[name] = violations.get(name, 0) + 1
            elif kind == VerdictKind.PRECONDITION_FAILED.value:
                precondition_failures[name] = precondition_failures.get(name, 0) + 1

    result = BatchResult(rows, violations, precondition_failures, mode, out_dir)
    if out_dir is not None:
        storage = StorageManager(out_dir)
        flat = [
            dict({k: v for k, v in row.items() if k != "verdicts"},
                 **{f"verdict:{name}": kind for name, kind in row["verdicts"].items()})
            for row in rows
        ]
        result.files.append(storage.save_aggregate(flat))
        result.files.append(storage.save_json(result.aggregate(), "aggregate.json"))

    logger.log_batch_summary(result.runs, result.violated_runs, mode)
    logger.log_performance_metric("batch", time.perf_counter() - start, n_seeds)
    return result

"""
CLI Commands Module

This module contains the implementation of all CLI commands
for the stakesim tool with input validation and error handling.
"""

import datetime
import os
import sys
import time
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.syntax import Syntax
from rich.table import Table

from ..core.batch import BATCH_MODES, BatchResult, run_batch
from ..core.blocktree import TEST_IMPLEMENTATIONS, TREE_IMPLEMENTATIONS, conformance_check
from ..core.bounds import (
    bounds_table,
    cp_epsilon_condition,
    cq_epsilon_condition,
    monte_carlo_slot_probs,
    sample_from_lottery,
    slot_probs,
    stake_regime,
)
from ..core.lottery import win_probabilities
from ..core.model import hash_block
from ..core.properties import (
    CHECKERS,
    CheckConstants,
    VerdictKind,
    rollback_depth,
    rollback_requested,
    run_checks,
)
from ..core.storage_manager import StorageManager
from ..core.world import run
from ..utils.config_manager import ScenarioConfig, get_config, parse_config
from ..utils.exceptions import ConfigError, StakeSimError
from ..utils.formatters import format_chain, format_party_list, format_probability, format_verdict
from ..utils.logger import get_logger
from ..utils.validators import parse_int_list, parse_q_spec, parse_slot_range, validate_probability

logger = get_logger()


def _console(ctx) -> Console:
    no_color = not get_config().get("ui.color_output", True)
    if ctx.obj.get("quiet", False):
        return Console(quiet=True, no_color=no_color)
    return Console(no_color=no_color)


def _report_errors(console: Console, errors: List[str], title: str = "Validation errors") -> None:
    """Print every error as a bullet and exit 1."""
    console.print(f"[red]{title}:[/red]")
    for error in errors:
        console.print(f"  • {error}")
    sys.exit(1)


def _fail(console: Console, message: str, verbose: bool) -> None:
    console.print(f"[red]❌ {message}[/red]")
    if verbose:
        console.print("[red]Traceback:[/red]")
        console.print(Syntax(traceback.format_exc(), "python", theme="monokai"))
    sys.exit(1)


def load_scenario(console: Console, config_file: str) -> ScenarioConfig:
    """Parse a scenario file, reporting every violation on failure."""
    try:
        return parse_config(config_file)
    except ConfigError as e:
        _report_errors(console, e.issues, f"Invalid scenario {config_file}")
        raise


def parse_check_list(checks: Optional[str]) -> Optional[List[str]]:
    if not checks:
        return None
    return [name.strip() for name in checks.split(",") if name.strip()]


def validate_check_inputs(checks: Optional[List[str]], k: Optional[str], stride: Optional[int],
                          seeds: int, mode: str) -> Optional[List[int]]:
    """Validate check options; returns the parsed k list."""
    errors = []
    k_values = None

    if checks is not None:
        unknown = [name for name in checks if name not in CHECKERS]
        if unknown:
            errors.append(f"Unknown checker(s): {', '.join(unknown)} (known: {', '.join(CHECKERS)})")
    if k is not None:
        k_values = parse_int_list(k)
        if k_values is None:
            errors.append("--k must be a comma separated list of non-negative integers")
    if stride is not None and stride < 1:
        errors.append("Stride must be at least 1")
    if seeds < 1:
        errors.append("Seed count must be at least 1")
    if mode not in BATCH_MODES:
        errors.append(f"Mode must be one of: {', '.join(BATCH_MODES)}")

    if errors:
        console = Console()
        _report_errors(console, errors)
    return k_values


def _default_out(cfg: ScenarioConfig) -> str:
    base = get_config().get("defaults.output_directory", "runs")
    timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
    return str(Path(base) / f"{cfg.name}_{timestamp}")


def _print_batch(console: Console, result: BatchResult) -> None:
    table = Table(show_header=True, header_style="bold magenta", title="Batch aggregate")
    table.add_column("Checker", style="cyan")
    table.add_column("Violated", style="red")
    table.add_column("Precondition failed", style="yellow")
    for name in result.violations:
        table.add_row(name, str(result.violations[name]), str(result.precondition_failures.get(name, 0)))
    console.print(table)
    console.print(f"[blue]{result.runs} run(s), {result.violated_runs} with violations[/blue]")


def _print_regime(console: Console, cfg: ScenarioConfig) -> None:
    if cfg.lottery.type != "bernoulli":
        return
    honesty = cfg.honest_map
    if all(p.stake is not None for p in cfg.parties):
        weights = {p.id: float(p.stake) for p in cfg.parties}
        basis = "stake"
    else:
        weights = win_probabilities(cfg)
        basis = "win probability"
    if sum(weights.values()) <= 0:
        return
    regime = stake_regime(weights, honesty)
    probs = slot_probs(win_probabilities(cfg), honesty)
    console.print(
        f"[blue]Honest share by {basis}: {regime.honest_share:.3f} "
        f"(majority: {'yes' if regime.honest_majority else 'no'}, "
        f"super-majority: {'yes' if regime.honest_supermajority else 'no'})[/blue]"
    )
    console.print(
        f"[blue]Slot probabilities: p_LS={format_probability(probs.p_ls)} "
        f"p_SS={format_probability(probs.p_ss)} p_AS={format_probability(probs.p_as)}[/blue]"
    )


def run_command(ctx, config_file, out, dot, seeds, mode, verbose):
    """Run a scenario and write its trace, block store, report and DOT file."""
    console = _console(ctx)
    validate_check_inputs(None, None, 1, seeds, mode)
    cfg = load_scenario(console, config_file)
    out = out or _default_out(cfg)
    settings = get_config()
    if dot is None:
        dot = bool(settings.get("defaults.write_dot", True))

    if verbose:
        console.print("[blue]Scenario:[/blue]")
        console.print(f"  • Name: {cfg.name}")
        console.print(f"  • Horizon: {cfg.horizon}")
        console.print(f"  • Parties: {format_party_list(cfg.party_ids)}")
        console.print(f"  • Corrupted: {format_party_list(cfg.corrupted) or 'none'}")
        console.print(f"  • Adversary: {cfg.adversary.strategy}")
        console.print(f"  • Master seed: {cfg.seeds.master}")
        console.print()

    try:
        if seeds > 1:
            workers = int(settings.get("batch.workers", 4))
            with console.status(f"Running {seeds} seeds ({mode})..."):
                result = run_batch(cfg, seeds, mode=mode, workers=workers, checks=[],
                                   out_dir=out, write_dot=dot)
            console.print(f"[green]✅ Completed {result.runs} run(s)[/green]")
            console.print(f"[green]📁 Saved to: {out}[/green]")
            return

        start = time.perf_counter()
        with console.status(f"Simulating {cfg.horizon + 1} slots..."):
            trace = run(cfg)
        logger.log_performance_metric("run", time.perf_counter() - start, cfg.horizon + 1)

        storage = StorageManager(out)
        report = storage.save_run(trace, [], write_dot=dot)

        table = Table(show_header=True, header_style="bold magenta", title="Final chains")
        table.add_column("Party", style="cyan")
        table.add_column("Length", style="green")
        table.add_column("Head", style="yellow")
        for party in trace.honest:
            chain = trace.final_chain(party)
            hashes = [hash_block(block, trace.width) for block in chain]
            max_blocks = int(settings.get("ui.max_chain_display", 6))
            table.add_row(f"p{party}", str(len(chain)), format_chain(hashes, trace.width, max_blocks))
        console.print(table)

        monitors = report["summary"]["monitors"]
        for name, event in monitors.items():
            console.print(f"[yellow]⚠️  Monitor '{name}' fired at slot {event['slot']}[/yellow]")
        console.print(f"[green]✅ Simulated {cfg.horizon + 1} slot(s), "
                      f"{report['summary']['blocks_sent']} block(s) sent[/green]")
        console.print(f"[green]📁 Saved to: {out}[/green]")
    except (StakeSimError, OSError) as e:
        _fail(console, f"Error running scenario: {e}", verbose)
    except Exception as e:
        _fail(console, f"Unexpected error running scenario: {e}", verbose)


def check_command(ctx, config_file, checks, k, stride, out, seeds, mode, literal, verbose):
    """Run a scenario and evaluate the requested checkers. Exit 1 on any violation."""
    console = _console(ctx)
    check_list = parse_check_list(checks)
    k_values = validate_check_inputs(check_list, k, stride, seeds, mode)
    cfg = load_scenario(console, config_file)
    k_values = k_values if k_values is not None else list(cfg.checks.k)
    stride = stride if stride is not None else cfg.checks.stride
    constants = CheckConstants.literal() if literal else CheckConstants.from_config(cfg.checks)

    _print_regime(console, cfg)

    try:
        if seeds > 1:
            workers = int(get_config().get("batch.workers", 4))
            if literal:
                console.print("[yellow]⚠️  --literal applies to single runs only; batch uses scenario constants[/yellow]")
            with console.status(f"Checking {seeds} seeds ({mode})..."):
                result = run_batch(cfg, seeds, mode=mode, workers=workers, checks=check_list,
                                   k_values=k_values, stride=stride, out_dir=out)
            _print_batch(console, result)
            if result.violated_runs:
                sys.exit(1)
            return

        with console.status(f"Simulating {cfg.horizon + 1} slots..."):
            trace = run(cfg)
        with console.status("Evaluating checkers..."):
            verdicts = run_checks(trace, check_list, k_values, stride, constants)
            extra: Dict[str, Any] = {}
            if rollback_requested(check_list):
                extra["rollback_depth"] = rollback_depth(trace, stride)

        table = Table(show_header=True, header_style="bold magenta", title=f"Checks: {cfg.name}")
        table.add_column("Checker", style="cyan")
        table.add_column("Params", style="blue")
        table.add_column("Verdict")
        table.add_column("Details", style="yellow")
        for verdict in verdicts:
            logger.log_verdict(verdict.checker, verdict.kind.value, verdict.witness)
            details = verdict.reason or ""
            if verdict.witness:
                details = ", ".join(f"{key}={value}" for key, value in sorted(verdict.witness.items())
                                    if not isinstance(value, (list, dict)))
            elif verdict.details:
                details = ", ".join(f"{key}={value}" for key, value in sorted(verdict.details.items()))
            params = ", ".join(f"{key}={value}" for key, value in sorted(verdict.params.items()))
            table.add_row(verdict.checker, params, format_verdict(verdict.kind.value), details)
        console.print(table)
        if "rollback_depth" in extra:
            console.print(f"[blue]Rollback depth: {extra['rollback_depth']}[/blue]")
        if cfg.lottery.type == "bernoulli" and trace.horizon >= 1:
            observed = sample_from_lottery(trace.lottery, trace.honesty, trace.horizon)
            console.print(
                f"[blue]Observed slot frequencies: p_LS={format_probability(observed.p_ls)} "
                f"p_SS={format_probability(observed.p_ss)} p_AS={format_probability(observed.p_as)}[/blue]"
            )

        if out:
            StorageManager(out).save_run(trace, verdicts, write_dot=False, extra=extra)
            console.print(f"[green]📁 Report saved to: {out}[/green]")

        violated = [v for v in verdicts if v.kind is VerdictKind.VIOLATED]
        if violated:
            console.print(f"[red]❌ {len(violated)} checker(s) violated[/red]")
            if verbose:
                for verdict in violated:
                    console.print(f"[red]{verdict.checker} witness:[/red] {verdict.witness}")
            sys.exit(1)
        console.print("[green]✅ No violations[/green]")
    except (StakeSimError, OSError) as e:
        _fail(console, f"Error checking scenario: {e}", verbose)
    except Exception as e:
        _fail(console, f"Unexpected error checking scenario: {e}", verbose)


def bounds_command(ctx, q, delta, delta_prime, k_range, sl_now, monte_carlo, seed, verbose):
    """Print slot probabilities and the failure-bound table."""
    console = _console(ctx)
    settings = get_config().get_bounds()
    delta = settings.get("delta", 0.1) if delta is None else delta
    delta_prime = settings.get("delta_prime", 0.1) if delta_prime is None else delta_prime
    k_range = k_range or settings.get("k_range", "10:50")
    sl_now = settings.get("sl_now", 1000) if sl_now is None else sl_now

    q_map, honesty, errors = parse_q_spec(q)
    if not validate_probability(delta) or delta >= 1.0:
        errors.append("delta must lie in [0, 1)")
    if not validate_probability(delta_prime):
        errors.append("delta' must lie in [0, 1]")
    span = parse_slot_range(k_range)
    if span is None:
        errors.append("--k-range must look like A:B with A <= B")
    elif span[1] > sl_now:
        errors.append(f"--k-range upper end {span[1]} exceeds --sl-now {sl_now}")
    if monte_carlo is None:
        monte_carlo = settings.get("monte_carlo_samples", 0)
    if monte_carlo < 0:
        errors.append("--monte-carlo must be a non-negative sample count")
    if errors:
        _report_errors(console, errors)

    try:
        probs = slot_probs(q_map, honesty)
        regime = stake_regime(q_map, honesty) if sum(q_map.values()) > 0 else None

        console.print("[blue]Slot probabilities:[/blue]")
        console.print(f"  • p_LS (lucky): {format_probability(probs.p_ls)}")
        console.print(f"  • p_SS (super): {format_probability(probs.p_ss)}")
        console.print(f"  • p_AS (adversarial): {format_probability(probs.p_as)}")
        if regime is not None:
            console.print(f"  • Honest share by win probability: {regime.honest_share:.3f}")

        if monte_carlo:
            estimate = monte_carlo_slot_probs(q_map, honesty, monte_carlo, seed)
            console.print(f"[blue]Monte-Carlo ({monte_carlo} samples):[/blue] "
                          f"p_LS={format_probability(estimate.p_ls)} "
                          f"p_SS={format_probability(estimate.p_ss)} "
                          f"p_AS={format_probability(estimate.p_as)}")

        for label, check in (("common prefix", cp_epsilon_condition(probs, delta, delta_prime)),
                             ("chain quality", cq_epsilon_condition(probs, delta, delta_prime))):
            if not check.satisfied:
                console.print(f"[yellow]⚠️  Epsilon condition for {label} fails "
                              f"({check.actual:.6f} <= {check.required:.6f}); bound is vacuous[/yellow]")

        frame = bounds_table(probs, delta, delta_prime, range(span[0], span[1] + 1), sl_now)
        table = Table(show_header=True, header_style="bold magenta",
                      title=f"Failure bounds (delta={delta}, delta'={delta_prime}, sl_now={sl_now})")
        table.add_column("k", style="cyan")
        table.add_column("Common prefix", style="green")
        table.add_column("Chain quality", style="green")
        table.add_column("Min growth", style="blue")
        table.add_column("Growth failure", style="yellow")
        for row in frame.itertuples(index=False):
            table.add_row(
                str(row.k),
                "vacuous" if row.cp_vacuous else format_probability(row.cp_bound),
                "vacuous" if row.cq_vacuous else format_probability(row.cq_bound),
                str(row.cg_min_growth),
                format_probability(row.cg_failure),
            )
        console.print(table)
    except StakeSimError as e:
        _fail(console, f"Error computing bounds: {e}", verbose)
    except Exception as e:
        _fail(console, f"Unexpected error computing bounds: {e}", verbose)


def conformance_command(ctx, impl, n, seed, seeds, width, oracle_limit, out, verbose):
    """Run the block-tree conformance harness. Exit 1 on the first counterexample."""
    console = _console(ctx)
    settings = get_config()
    n = n if n is not None else int(settings.get("conformance.n_blocks", 200))
    oracle_limit = oracle_limit if oracle_limit is not None else int(settings.get("conformance.oracle_limit", 25))

    errors = []
    known = list(TREE_IMPLEMENTATIONS) + list(TEST_IMPLEMENTATIONS)
    impls = list(TREE_IMPLEMENTATIONS) if impl == "all" else [impl]
    if impl != "all" and impl not in known:
        errors.append(f"Implementation must be one of: all, {', '.join(known)}")
    if n < 1:
        errors.append("Stream length must be at least 1")
    if seeds < 1:
        errors.append("Seed count must be at least 1")
    if errors:
        _report_errors(console, errors)

    reports = []
    show_progress = bool(settings.get("ui.show_progress", True))
    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            console=console,
            disable=not show_progress,
        ) as progress:
            task = progress.add_task("Checking conformance...", total=len(impls) * seeds)
            for name in impls:
                for offset in range(seeds):
                    report = conformance_check(name, seed + offset, n, width=width, oracle_limit=oracle_limit)
                    reports.append(report)
                    progress.update(task, advance=1)
                    if not report.passed:
                        break
    except StakeSimError as e:
        _fail(console, f"Error running conformance: {e}", verbose)

    table = Table(show_header=True, header_style="bold magenta", title="Block-tree conformance")
    table.add_column("Impl", style="cyan")
    table.add_column("Seed", style="blue")
    table.add_column("Queries", style="green")
    table.add_column("Oracle", style="green")
    table.add_column("Result")
    for report in reports:
        table.add_row(report.impl, str(report.seed), str(report.queries), str(report.oracle_queries),
                      "[green]PASS[/green]" if report.passed else "[red]FAIL[/red]")
    console.print(table)

    if out:
        storage = StorageManager(out)
        path = storage.save_json({"reports": [r.to_dict() for r in reports]}, "conformance.json")
        console.print(f"[green]📁 Saved to: {path}[/green]")

    failed = [r for r in reports if not r.passed]
    if failed:
        for report in failed:
            failure = report.failure
            console.print(f"[red]❌ {report.impl} (seed {report.seed}) fails '{failure.condition}' "
                          f"at step {failure.step}, slot {failure.slot}: {failure.detail}[/red]")
        sys.exit(1)
    console.print(f"[green]✅ {len(reports)} stream(s) conform[/green]")


def list_command(ctx, directory, verbose):
    """List output files with record counts."""
    console = _console(ctx)

    if not directory:
        directory = get_config().get("defaults.output_directory", "runs")

    if not os.path.exists(directory):
        console.print(f"[red]❌ Directory not found: {directory}[/red]")
        sys.exit(1)

    files = StorageManager(directory).list_output_files()
    if not files:
        console.print(f"[yellow]⚠️  No output files found in {directory}[/yellow]")
        return

    console.print(f"[blue]📁 Output files in {directory}:[/blue]")
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("File", style="cyan")
    table.add_column("Size", style="green")
    table.add_column("Modified", style="yellow")
    table.add_column("Records", style="blue")
    for info in files:
        records = info.get("records", info.get("checks", ""))
        table.add_row(
            str(info["filename"]),
            f"{int(info['size_bytes']) / 1024:.1f} KB",
            str(info["modified"])[:16].replace("T", " "),
            str(records),
        )
    console.print(table)
    console.print(f"[green]✅ Found {len(files)} file(s)[/green]")


def info_command(ctx):
    """Display versions of dependencies and the effective settings."""
    console = Console()
    console.print("[blue]stakesim System Information[/blue]")
    console.print("=" * 50)
    console.print(f"Python Version: {sys.version}")

    from .. import __version__
    console.print(f"stakesim Version: {__version__}")

    console.print("\n[blue]Dependencies:[/blue]")
    dependencies = [
        ("numpy", "Vectorized slot statistics"),
        ("pandas", "Bound tables and batch aggregates"),
        ("graphviz", "DOT export of block trees"),
        ("yaml", "Scenario and settings files"),
        ("rich", "Enhanced CLI interface"),
        ("click", "CLI framework"),
    ]
    for dep, description in dependencies:
        try:
            module = __import__(dep)
            version = getattr(module, "__version__", "Unknown")
            console.print(f"  ✅ {dep}: {version} - {description}")
        except ImportError:
            console.print(f"  ❌ {dep}: Not installed - {description}")

    settings = get_config()
    console.print("\n[blue]Configuration:[/blue]")
    if settings.config_file.exists():
        console.print(f"  ✅ Config file: {settings.config_file}")
    else:
        console.print(f"  ⚠️  Config file: {settings.config_file} (not found, using defaults)")
    for section in ("defaults", "checks", "bounds", "batch", "logging"):
        console.print(f"  {section}: {settings.get(section)}")
    issues = settings.validate_config()
    for issue in issues:
        console.print(f"  [yellow]⚠️  {issue}[/yellow]")

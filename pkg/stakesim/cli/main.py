"""
Main CLI Entry Point

This module provides the main entry point for the stakesim CLI tool
using the Click framework.
"""

import click
from rich.console import Console
from rich.panel import Panel
from rich.text import Text

from .. import __version__
from ..utils.logger import setup_logging
from .commands import (
    bounds_command,
    check_command,
    conformance_command,
    info_command,
    list_command,
    run_command,
)

console = Console()


@click.group()
@click.version_option(version=__version__, prog_name="stakesim")
@click.option(
    "--verbose", "-v",
    is_flag=True,
    help="Enable verbose output with debug logging and tracebacks"
)
@click.option(
    "--quiet", "-q",
    is_flag=True,
    help="Suppress output except errors"
)
@click.option(
    "--log-file",
    type=click.Path(dir_okay=False),
    help="Also write log records to this file"
)
@click.pass_context
def main(ctx, verbose, quiet, log_file):
    """
    stakesim - simulate proof-of-stake longest-chain protocols and check
    chain growth, chain quality and common prefix on the resulting traces.

    This tool supports:
    - Seeded, replayable simulations with pluggable adversaries
    - Property checkers with concrete counterexamples
    - Probability bounds for the same properties
    - Conformance testing of block-tree implementations
    """
    ctx.ensure_object(dict)

    ctx.obj["verbose"] = verbose
    ctx.obj["quiet"] = quiet

    if verbose:
        setup_logging("DEBUG", log_file)
    elif quiet:
        setup_logging("WARNING", log_file)
    elif log_file:
        setup_logging("INFO", log_file)

    if not quiet:
        welcome_text = Text("stakesim", style="bold blue")
        welcome_text.append("\nProof-of-stake longest-chain simulator", style="green")
        welcome_text.append("\nChain growth, chain quality and common prefix, checked per trace", style="yellow")
        console.print(Panel(welcome_text, border_style="blue"))


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--out", "-o",
    help="Output directory (default: runs/<name>_<timestamp>)"
)
@click.option(
    "--dot/--no-dot",
    default=None,
    help="Write the block tree as a DOT file (default: from settings)"
)
@click.option(
    "--seeds", "-n",
    default=1,
    type=int,
    help="Number of derived master seeds to run (default: 1)"
)
@click.option(
    "--mode", "-m",
    type=click.Choice(["sequential", "concurrent"]),
    default="sequential",
    help="Batch mode when running several seeds (default: sequential)"
)
@click.pass_context
def run(ctx, config_file, out, dot, seeds, mode):
    """
    Run a scenario and write trace, block store, report and DOT file.

    Exits 0 on completion regardless of property outcomes.

    Examples:
        # Run a scenario
        stakesim run scenarios/honest.yaml

        # Run 20 seeds in a process pool
        stakesim run scenarios/withhold.yaml --seeds 20 --mode concurrent
    """
    run_command(ctx, config_file, out, dot, seeds, mode, ctx.obj.get("verbose", False))


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--checks", "-c",
    help="Comma separated checkers (default: all)"
)
@click.option(
    "--k",
    help="Comma separated common-prefix depths (default: from scenario)"
)
@click.option(
    "--stride", "-s",
    type=int,
    help="Slot stride of the pair sweeps (default: from scenario)"
)
@click.option(
    "--out", "-o",
    help="Directory for the report"
)
@click.option(
    "--seeds", "-n",
    default=1,
    type=int,
    help="Number of derived master seeds to check (default: 1)"
)
@click.option(
    "--mode", "-m",
    type=click.Choice(["sequential", "concurrent"]),
    default="sequential",
    help="Batch mode when checking several seeds (default: sequential)"
)
@click.option(
    "--literal",
    is_flag=True,
    help="Use the tight slack constants instead of the scenario's"
)
@click.pass_context
def check(ctx, config_file, checks, k, stride, out, seeds, mode, literal):
    """
    Run a scenario and evaluate property checkers.

    Exits 1 if any checker is violated.

    Examples:
        # All checkers
        stakesim check scenarios/honest.yaml

        # Common prefix only, two depths, every tenth slot
        stakesim check scenarios/withhold.yaml -c common-prefix --k 10,20 -s 10
    """
    check_command(ctx, config_file, checks, k, stride, out, seeds, mode, literal,
                  ctx.obj.get("verbose", False))


@main.command()
@click.option(
    "--q",
    default="0.1,0.1,0.1:a",
    help="Win probabilities, e.g. 0.1,0.1,0.1:a (':a' marks a corrupted party)"
)
@click.option("--delta", type=float, help="Lower-tail deviation (default: from settings)")
@click.option("--delta-prime", type=float, help="Upper-tail deviation (default: from settings)")
@click.option("--k-range", help="Range of k values, A:B (default: from settings)")
@click.option("--sl-now", type=int, help="Current slot for the union bound (default: from settings)")
@click.option(
    "--monte-carlo",
    type=int,
    help="Also estimate slot probabilities from this many sampled slots (default: from settings, 0 = off)"
)
@click.option("--seed", default=0, type=int, help="Seed for the Monte-Carlo estimate")
@click.pass_context
def bounds(ctx, q, delta, delta_prime, k_range, sl_now, monte_carlo, seed):
    """
    Print slot probabilities and failure bounds per k.

    Examples:
        stakesim bounds --q 0.1,0.1,0.1:a --delta 0.1 --delta-prime 0.1 --k-range 10:20
    """
    bounds_command(ctx, q, delta, delta_prime, k_range, sl_now, monte_carlo, seed,
                   ctx.obj.get("verbose", False))


@main.command()
@click.option(
    "--impl", "-i",
    default="all",
    help="Implementation: all, reference, indexed or broken (default: all)"
)
@click.option("--n", "n", type=int, help="Blocks per stream (default: from settings)")
@click.option("--seed", default=0, type=int, help="First stream seed (default: 0)")
@click.option("--seeds", default=1, type=int, help="Number of consecutive seeds (default: 1)")
@click.option("--width", default=64, type=click.IntRange(1, 64), help="Hash width in bits (default: 64)")
@click.option("--oracle-limit", type=int, help="Largest pool checked by brute force (default: from settings)")
@click.option("--out", "-o", help="Directory for conformance.json")
@click.pass_context
def conformance(ctx, impl, n, seed, seeds, width, oracle_limit, out):
    """
    Check block-tree implementations against randomized block streams.

    Exits 1 with a counterexample when an implementation fails.

    Examples:
        stakesim conformance --impl indexed --n 200 --seeds 50
    """
    conformance_command(ctx, impl, n, seed, seeds, width, oracle_limit, out,
                        ctx.obj.get("verbose", False))


@main.command(name="list")
@click.option(
    "--directory", "-d",
    type=click.Path(),
    help="Directory to list (default: output directory setting)"
)
@click.pass_context
def list_outputs(ctx, directory):
    """
    List output files with sizes and record counts.

    Examples:
        stakesim list --directory runs/honest_20250101_120000
    """
    list_command(ctx, directory, ctx.obj.get("verbose", False))


@main.command()
@click.pass_context
def info(ctx):
    """Display dependency versions and the effective settings."""
    info_command(ctx)


if __name__ == "__main__":
    main()

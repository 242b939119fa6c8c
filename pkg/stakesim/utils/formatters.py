"""
Formatting Utilities

This module contains display helpers for hashes, chains, slot
classifications, probabilities and verdicts.
"""

from typing import Iterable, Optional, Sequence


def format_hash(value: int, width: int = 64, short: Optional[int] = None) -> str:
    """
    Format a hash as fixed-width lowercase hex.

    Args:
        value: Hash value
        width: Hash width in bits
        short: Optional number of leading hex digits to keep

    Returns:
        Hex string (zero padded to the width)
    """
    digits = max(1, (width + 3) // 4)
    text = f"{value:0{digits}x}"
    if short is not None and short < len(text):
        return text[:short]
    return text


def format_chain(hashes: Sequence[int], width: int = 64, max_blocks: int = 6) -> str:
    """
    Format a head-first chain of hashes for display.

    Args:
        hashes: Head-first block hashes
        width: Hash width in bits
        max_blocks: Number of head blocks to show before eliding

    Returns:
        Readable chain string ending in the genesis marker
    """
    if not hashes:
        return "<empty>"
    shown = [format_hash(h, width, short=8) for h in hashes[:max_blocks]]
    if len(hashes) > max_blocks:
        shown.append(f"... ({len(hashes) - max_blocks} more)")
    return " -> ".join(shown)


def format_probability(p: float, digits: int = 6) -> str:
    """Format a probability, switching to scientific notation for tiny values."""
    if p != 0.0 and abs(p) < 10 ** (-digits):
        return f"{p:.3e}"
    return f"{p:.{digits}f}"


def format_slot_class(lucky: bool, super_slot: bool, adversarial: bool) -> str:
    """Format a slot classification as a compact flag string (``L S A``)."""
    return "".join(
        flag if on else "-"
        for flag, on in (("L", lucky), ("S", super_slot), ("A", adversarial))
    )


def format_verdict(kind: str) -> str:
    """
    Wrap a verdict kind in rich markup.

    Args:
        kind: One of holds / precondition_failed / violated

    Returns:
        Markup string for console output
    """
    styles = {
        "holds": "[green]HOLDS[/green]",
        "precondition_failed": "[yellow]PRECONDITION FAILED[/yellow]",
        "violated": "[red]VIOLATED[/red]",
    }
    return styles.get(kind, kind)


def format_party_list(parties: Iterable[int]) -> str:
    """Format party ids as ``p1, p2, ...``."""
    return ", ".join(f"p{p}" for p in parties)

"""
Validation Utilities

This module contains validation functions for scenario inputs:
party ids, probabilities, seeds, hash widths and CLI range arguments.
"""

import re
from typing import Dict, List, Optional, Tuple

MAX_SEED = 2 ** 64 - 1
MIN_HASH_WIDTH = 1
MAX_HASH_WIDTH = 64


def validate_party_id(party_id) -> bool:
    """
    Validate a party id.

    Id 0 is reserved for the genesis baker, so configured parties
    start at 1.

    Args:
        party_id: Candidate party id

    Returns:
        True if valid, False otherwise
    """
    return isinstance(party_id, int) and not isinstance(party_id, bool) and party_id >= 1


def validate_probability(value) -> bool:
    """
    Validate a probability in the closed interval [0, 1].

    Args:
        value: Candidate probability

    Returns:
        True if valid, False otherwise
    """
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False
    return 0.0 <= float(value) <= 1.0


def validate_seed(seed) -> bool:
    """
    Validate a seed (unsigned 64-bit integer).

    Args:
        seed: Candidate seed

    Returns:
        True if valid, False otherwise
    """
    return isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed <= MAX_SEED


def validate_hash_width(width) -> bool:
    """Validate a hash width in bits."""
    return (
        isinstance(width, int)
        and not isinstance(width, bool)
        and MIN_HASH_WIDTH <= width <= MAX_HASH_WIDTH
    )


def validate_non_negative_int(value) -> bool:
    """Validate a non-negative integer (bools rejected)."""
    return isinstance(value, int) and not isinstance(value, bool) and value >= 0


def find_duplicates(values: List[int]) -> List[int]:
    """
    Return the values that occur more than once, in first-seen order.

    Args:
        values: Sequence to scan

    Returns:
        Duplicated values
    """
    seen = set()
    duplicates: List[int] = []
    for value in values:
        if value in seen and value not in duplicates:
            duplicates.append(value)
        seen.add(value)
    return duplicates


def parse_slot_range(text: str) -> Optional[Tuple[int, int]]:
    """
    Parse an inclusive slot range written as ``A:B``.

    Args:
        text: Range text

    Returns:
        (A, B) with 0 <= A <= B, or None if the text is malformed
    """
    match = re.match(r"^\s*(\d+)\s*:\s*(\d+)\s*$", text or "")
    if not match:
        return None
    lo, hi = int(match.group(1)), int(match.group(2))
    if lo > hi:
        return None
    return lo, hi


def parse_int_list(text: str) -> Optional[List[int]]:
    """Parse a comma separated list of non-negative integers (``10,20,40``)."""
    if not text or not text.strip():
        return None
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item.isdigit():
            return None
        values.append(int(item))
    return values


def parse_q_spec(text: str) -> Tuple[Dict[int, float], Dict[int, bool], List[str]]:
    """
    Parse a win-probability list for the bounds calculator.

    The format is a comma separated list of ``q`` or ``q:h`` / ``q:a``
    entries (honest by default), e.g. ``0.1,0.1,0.1:a``. Parties are
    numbered from 1 in the order given.

    Args:
        text: Comma separated probabilities with optional :h or :a suffixes

    Returns:
        (q map, honesty map, list of errors)
    """
    q: Dict[int, float] = {}
    honesty: Dict[int, bool] = {}
    errors: List[str] = []

    if not text or not text.strip():
        return q, honesty, ["Probability list is empty"]

    for index, item in enumerate(text.split(","), start=1):
        parts = item.strip().split(":")
        try:
            value = float(parts[0])
        except ValueError:
            errors.append(f"Entry {index}: '{item.strip()}' is not a number")
            continue
        if not validate_probability(value):
            errors.append(f"Entry {index}: probability {value} out of range [0, 1]")
            continue
        flag = parts[1].lower() if len(parts) > 1 else "h"
        if flag not in ("h", "a") or len(parts) > 2:
            errors.append(f"Entry {index}: honesty flag must be 'h' or 'a'")
            continue
        q[index] = value
        honesty[index] = flag == "h"

    return q, honesty, errors

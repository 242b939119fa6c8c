"""
stakesim - a deterministic simulator and property checker for
proof-of-stake longest-chain protocols.

This package provides functionality for:
- Slot-by-slot simulation of honest and corrupted parties
- Pluggable block-tree implementations with a conformance harness
- Chain growth, chain quality and common-prefix checkers over traces
- Probability bounds for the same properties
"""

__version__ = "1.0.0"
__author__ = "JustineDevs"

from .core.world import World, run
from .core.properties import run_checks
from .core.storage_manager import StorageManager
from .utils.config_manager import ScenarioConfig, parse_config

__all__ = [
    "World",
    "run",
    "run_checks",
    "StorageManager",
    "ScenarioConfig",
    "parse_config",
]

"""
Core functionality for stakesim.

This module contains the simulator itself:
- Blocks, chains and block trees
- The lottery, honest parties and adversary strategies
- The world driver, property checkers and probability bounds
- Output storage and batch runs
"""

from .model import GENESIS, Block, hash_block
from .blocktree import IndexedTree, ReferenceTree, conformance_check, tree_init
from .world import Trace, World, run, world_init
from .properties import Verdict, VerdictKind, run_checks
from .storage_manager import StorageManager
from .batch import run_batch

__all__ = [
    "GENESIS",
    "Block",
    "hash_block",
    "ReferenceTree",
    "IndexedTree",
    "tree_init",
    "conformance_check",
    "World",
    "Trace",
    "world_init",
    "run",
    "Verdict",
    "VerdictKind",
    "run_checks",
    "StorageManager",
    "run_batch",
]

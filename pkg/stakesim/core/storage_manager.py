"""
Storage Manager Module

This module writes run artifacts: the line-delimited trace, the block
store, the run report (JSON and YAML), the DOT rendering of the block
tree and batch aggregates.
"""

import datetime
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

import graphviz
import pandas as pd
import yaml

from ..utils.formatters import format_hash, format_slot_class
from ..utils.logger import get_logger
from .model import GENESIS, hash_block
from .properties import Verdict
from .world import Trace

logger = get_logger()

TRACE_FILE = "trace.jsonl"
BLOCKS_FILE = "blocks.jsonl"
REPORT_JSON = "report.json"
REPORT_YAML = "report.yaml"
DOT_FILE = "trace.dot"
AGGREGATE_FILE = "aggregate.csv"

HONEST_COLOR = "lightblue"
ADVERSARY_COLOR = "salmon"
GENESIS_COLOR = "gold"


def _plain(data: Any) -> Any:
    """Reduce tuples, numpy scalars and the like to JSON/YAML friendly values."""
    return json.loads(json.dumps(data, sort_keys=True, default=str))


def txs_digest(txs: bytes) -> str:
    return hashlib.blake2b(txs, digest_size=8).hexdigest()


def trace_lines(trace: Trace) -> Iterator[str]:
    """
    Serialized trace records, one per (slot, honest party).

    Each record holds the party's best chain (head first, hex hashes),
    the slot class and the monitors that fired so far.
    """
    classes = trace.slot_classes
    for sl in range(trace.horizon + 1):
        cls = classes[sl]
        slot_class = format_slot_class(cls.lucky, cls.super, cls.adversarial)
        flags = trace.monitor_flags(sl)
        for party in trace.honest:
            record = {
                "slot": sl,
                "party": party,
                "best_chain_hashes": [
                    format_hash(hash_block(block, trace.width), trace.width)
                    for block in trace.snapshot(party, sl)
                ],
                "slot_class": slot_class,
                "monitor_flags": flags,
            }
            yield json.dumps(record, sort_keys=True)


def trace_digest(trace: Trace) -> str:
    """Digest of the serialized trace, equal for byte-identical trace files."""
    digest = hashlib.sha256()
    for line in trace_lines(trace):
        digest.update(line.encode("utf-8") + b"\n")
    return digest.hexdigest()


def build_report(trace: Trace, verdicts: Sequence[Verdict] = (),
                 extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Assemble the run report.

    Args:
        trace: Run trace
        verdicts: Checker verdicts to include
        extra: Additional summary fields (e.g. rollback depth)

    Returns:
        Report dictionary
    """
    summary: Dict[str, Any] = {
        "name": trace.name,
        "horizon": trace.horizon,
        "hash_width": trace.width,
        "parties": trace.parties,
        "honest": trace.honest,
        "seeds": trace.seeds,
        "blocks_sent": len(trace.history_log),
        "adversarial_blocks": sum(1 for entry in trace.history_log if entry.by_adversary),
        "final_lengths": {str(p): trace.final[p].length for p in trace.honest},
        "chain_lengths": {
            str(p): [trace.snapshot_length(p, sl) for sl in range(trace.horizon + 1)]
            for p in trace.honest
        },
        "monitors": {
            event.monitor: {"slot": event.slot, "detail": event.detail}
            for event in reversed(trace.monitor_events)
        },
    }
    if extra:
        summary.update(extra)
    return _plain({
        "summary": summary,
        "checks": [verdict.to_dict() for verdict in verdicts],
    })


class StorageManager:
    """
    Manages the output directory of a run or a batch.
    """

    def __init__(self, output_dir: str = "runs"):
        """
        Initialize the storage manager.

        Args:
            output_dir: Directory for run artifacts
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, filename: str) -> Path:
        return self.output_dir / filename

    def save_trace(self, trace: Trace, filename: str = TRACE_FILE) -> str:
        """
        Write one record per (slot, honest party), see trace_lines.

        Returns:
            Path to saved file
        """
        filepath = self._path(filename)
        with open(filepath, "w", encoding="utf-8", newline="\n") as f:
            for line in trace_lines(trace):
                f.write(line + "\n")
        logger.log_file_operation("save_trace", str(filepath), True)
        return str(filepath)

    def save_blocks(self, trace: Trace, filename: str = BLOCKS_FILE) -> str:
        """Write the block store, genesis first, then in sending order."""
        filepath = self._path(filename)
        blocks = [GENESIS] + [b for b in trace.history_blocks if b != GENESIS]
        seen = set()
        with open(filepath, "w", encoding="utf-8", newline="\n") as f:
            for block in blocks:
                if block in seen:
                    continue
                seen.add(block)
                record = {
                    "hash": format_hash(hash_block(block, trace.width), trace.width),
                    "pred": format_hash(block.pred, trace.width),
                    "slot": block.slot,
                    "bid": block.bid,
                    "txs_digest": txs_digest(block.txs),
                }
                f.write(json.dumps(record, sort_keys=True) + "\n")
        logger.log_file_operation("save_blocks", str(filepath), True)
        return str(filepath)

    def save_report(self, report: Dict[str, Any]) -> List[str]:
        """
        Write the report as JSON and YAML.

        Returns:
            Paths to saved files
        """
        json_path = self._path(REPORT_JSON)
        yaml_path = self._path(REPORT_YAML)
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
        with open(yaml_path, "w", encoding="utf-8") as f:
            yaml.safe_dump(report, f, default_flow_style=False, sort_keys=True)
        logger.log_file_operation("save_report", str(json_path), True)
        return [str(json_path), str(yaml_path)]

    def build_dot(self, trace: Trace) -> graphviz.Digraph:
        """Block tree as a graphviz Digraph rooted at genesis."""
        width = trace.width
        dot = graphviz.Digraph(name=trace.name, comment=f"{trace.name} block tree")
        dot.attr(rankdir="LR")
        dot.attr("node", shape="box", style="filled")

        genesis_id = format_hash(hash_block(GENESIS, width), width)
        dot.node(genesis_id, "genesis", fillcolor=GENESIS_COLOR)
        drawn = {GENESIS}
        for entry in trace.history_log:
            block = entry.block
            if block in drawn:
                continue
            drawn.add(block)
            node_id = format_hash(hash_block(block, width), width)
            label = f"{format_hash(hash_block(block, width), width, short=8)}\\nslot {block.slot} bid {block.bid}"
            color = ADVERSARY_COLOR if entry.by_adversary else HONEST_COLOR
            dot.node(node_id, label, fillcolor=color)
            dot.edge(format_hash(block.pred, width), node_id)
        return dot

    def save_dot(self, trace: Trace, filename: str = DOT_FILE) -> str:
        """Write the DOT source of the block tree."""
        dot = self.build_dot(trace)
        filepath = self._path(filename)
        dot.save(filename=filename, directory=str(self.output_dir))
        logger.log_file_operation("save_dot", str(filepath), True)
        return str(filepath)

    def save_run(self, trace: Trace, verdicts: Sequence[Verdict] = (),
                 write_dot: bool = True, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        Write every artifact of one run.

        Returns:
            The report that was written
        """
        report = build_report(trace, verdicts, extra)
        self.save_trace(trace)
        self.save_blocks(trace)
        self.save_report(report)
        if write_dot:
            self.save_dot(trace)
        return report

    def save_aggregate(self, rows: List[Dict[str, Any]], filename: str = AGGREGATE_FILE) -> str:
        """Write batch rows as CSV through pandas."""
        filepath = self._path(filename)
        pd.DataFrame(rows).to_csv(filepath, index=False)
        logger.log_file_operation("save_aggregate", str(filepath), True)
        return str(filepath)

    def save_json(self, data: Dict[str, Any], filename: str) -> str:
        filepath = self._path(filename)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(_plain(data), f, indent=2, sort_keys=True)
            f.write("\n")
        return str(filepath)

    def load_report(self, filename: str = REPORT_JSON) -> Dict[str, Any]:
        filepath = self._path(filename)
        if not filepath.exists():
            raise FileNotFoundError(f"File not found: {filepath}")
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)

    def get_file_info(self, filename: str) -> Dict[str, Union[str, int]]:
        """
        Get information about an output file.

        Args:
            filename: Path relative to the output directory

        Returns:
            Dictionary with file information
        """
        filepath = self._path(filename)

        if not filepath.exists():
            raise FileNotFoundError(f"File not found: {filepath}")

        stat = filepath.stat()

        info: Dict[str, Union[str, int]] = {
            "filename": filename,
            "size_bytes": stat.st_size,
            "modified": datetime.datetime.fromtimestamp(stat.st_mtime).isoformat(),
            "path": str(filepath),
        }

        if filepath.suffix == ".jsonl":
            with open(filepath, "r", encoding="utf-8") as f:
                info["records"] = sum(1 for line in f if line.strip())
        elif filepath.name == REPORT_JSON:
            try:
                data = self.load_report(filename)
                info["checks"] = len(data.get("checks", []))
            except (json.JSONDecodeError, AttributeError):
                info["checks"] = "Unknown"

        return info

    def list_output_files(self) -> List[Dict[str, Union[str, int]]]:
        """
        List every file under the output directory, recursively.

        Returns:
            List of file information dictionaries
        """
        files = []
        for filepath in sorted(self.output_dir.rglob("*")):
            if filepath.is_file():
                try:
                    files.append(self.get_file_info(str(filepath.relative_to(self.output_dir))))
                except OSError:
                    continue
        return files

    def subdirectory(self, name: str) -> "StorageManager":
        return StorageManager(str(self.output_dir / name))

"""
Tests for run artifacts and the batch runner.
"""

import json
import tempfile
import unittest
from pathlib import Path

import pandas as pd
import yaml

from ..core.batch import batch_seeds, run_batch
from ..core.properties import run_checks
from ..core.storage_manager import (
    AGGREGATE_FILE,
    BLOCKS_FILE,
    DOT_FILE,
    REPORT_JSON,
    REPORT_YAML,
    TRACE_FILE,
    StorageManager,
    build_report,
    trace_digest,
)
from ..core.world import run
from ..utils.exceptions import ConfigError
from .fixtures import always_wins, bernoulli


class TestStorageManager(unittest.TestCase):
    """Files written for one run."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name) / "run"
        self.trace = run(always_wins(2, horizon=6))

    def tearDown(self):
        self.tmp.cleanup()

    def test_save_run(self):
        storage = StorageManager(str(self.out))
        report = storage.save_run(self.trace, run_checks(self.trace, k_values=[2]),
                                  extra={"rollback_depth": 1})
        for name in (TRACE_FILE, BLOCKS_FILE, REPORT_JSON, REPORT_YAML, DOT_FILE):
            self.assertTrue((self.out / name).exists(), name)

        trace_lines = (self.out / TRACE_FILE).read_text().splitlines()
        self.assertEqual(len(trace_lines), 7 * 2)
        first = json.loads(trace_lines[0])
        self.assertEqual(set(first), {"slot", "party", "best_chain_hashes", "slot_class", "monitor_flags"})
        self.assertEqual(len(first["best_chain_hashes"][0]), 16)

        blocks = [json.loads(line) for line in (self.out / BLOCKS_FILE).read_text().splitlines()]
        self.assertEqual(len(blocks), 1 + 12)
        self.assertEqual(blocks[0]["slot"], 0)

        self.assertEqual(storage.load_report(), report)
        self.assertEqual(yaml.safe_load((self.out / REPORT_YAML).read_text()), report)
        self.assertEqual(report["summary"]["rollback_depth"], 1)
        self.assertEqual(report["summary"]["final_lengths"], {"1": 7, "2": 7})
        self.assertEqual(len(report["checks"]), 7)

    def test_outputs_are_byte_identical(self):
        first = StorageManager(str(self.out / "a"))
        second = StorageManager(str(self.out / "b"))
        first.save_run(run(always_wins(2, horizon=6)))
        second.save_run(run(always_wins(2, horizon=6)))
        for name in (TRACE_FILE, BLOCKS_FILE, REPORT_JSON):
            self.assertEqual((self.out / "a" / name).read_bytes(), (self.out / "b" / name).read_bytes())

    def test_dot(self):
        cfg = bernoulli([0.5, 0.5], corrupted=[2], horizon=5, adversary={"strategy": "forge"})
        storage = StorageManager(str(self.out))
        path = storage.save_dot(run(cfg))
        source = Path(path).read_text()
        self.assertIn("digraph", source)
        self.assertIn("gold", source)
        self.assertIn("salmon", source)

    def test_report_monitors(self):
        cfg = bernoulli([0.5, 0.5], corrupted=[2], horizon=5, adversary={"strategy": "forge"})
        report = build_report(run(cfg))
        self.assertEqual(report["summary"]["monitors"]["forging"]["slot"], 1)
        self.assertEqual(report["summary"]["adversarial_blocks"], 1)

    def test_listing(self):
        storage = StorageManager(str(self.out))
        storage.save_run(self.trace, write_dot=False)
        storage.subdirectory("nested").save_json({"runs": 1}, "aggregate.json")
        files = {info["filename"]: info for info in storage.list_output_files()}
        self.assertEqual(files[TRACE_FILE]["records"], 14)
        self.assertEqual(files[REPORT_JSON]["checks"], 0)
        self.assertIn(str(Path("nested") / "aggregate.json"), files)
        with self.assertRaises(FileNotFoundError):
            storage.get_file_info("missing.json")


class TestBatch(unittest.TestCase):
    """Many seeds, sequential and concurrent."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.cfg = bernoulli([0.3, 0.3, 0.2], corrupted=[3], horizon=25,
                             adversary={"strategy": "equivocate"}, seeds={"master": 8})

    def tearDown(self):
        self.tmp.cleanup()

    def test_seeds_are_derived(self):
        seeds = batch_seeds(8, 4)
        self.assertEqual(len(set(seeds)), 4)
        self.assertEqual(seeds, batch_seeds(8, 4))

    def test_modes_agree(self):
        checks = ["collision", "forging", "growth"]
        sequential = run_batch(self.cfg, 3, "sequential", checks=checks)
        concurrent = run_batch(self.cfg, 3, "concurrent", workers=2, checks=checks)
        self.assertEqual([r["trace_digest"] for r in sequential.rows],
                         [r["trace_digest"] for r in concurrent.rows])
        self.assertEqual(sequential.violations, concurrent.violations)
        self.assertEqual(sequential.runs, 3)
        self.assertEqual(sequential.aggregate()["mode"], "sequential")

    def test_rows_match_single_runs(self):
        result = run_batch(self.cfg, 2, checks=["collision"])
        for row in result.rows:
            member = self.cfg.with_master_seed(row["seed"], reset_streams=True)
            member.name = f"{self.cfg.name}-{row['index']:04d}"
            self.assertEqual(row["trace_digest"], trace_digest(run(member)))

    def test_output_layout(self):
        out = Path(self.tmp.name) / "batch"
        result = run_batch(self.cfg, 2, checks=["forging"], out_dir=str(out))
        self.assertTrue((out / "seed-0000" / REPORT_JSON).exists())
        self.assertTrue((out / "seed-0001" / TRACE_FILE).exists())
        self.assertFalse((out / "seed-0000" / DOT_FILE).exists())
        frame = pd.read_csv(out / AGGREGATE_FILE)
        self.assertEqual(len(frame), 2)
        self.assertIn("verdict:forging", frame.columns)
        self.assertEqual(json.loads((out / "aggregate.json").read_text())["runs"], 2)
        self.assertEqual(len(result.files), 2)

    def test_rollback_depth_follows_common_prefix(self):
        without = run_batch(self.cfg, 2, checks=["forging"])
        self.assertTrue(all("rollback_depth" not in row for row in without.rows))
        out = Path(self.tmp.name) / "cp"
        with_cp = run_batch(self.cfg, 2, checks=["common-prefix"], k_values=[5], stride=5, out_dir=str(out))
        for row in with_cp.rows:
            self.assertGreaterEqual(row["rollback_depth"], 0)
            report = StorageManager(str(out / f"seed-{row['index']:04d}")).load_report()
            self.assertEqual(report["summary"]["rollback_depth"], row["rollback_depth"])
        self.assertIn("rollback_depth", pd.read_csv(out / AGGREGATE_FILE).columns)

    def test_bad_arguments(self):
        with self.assertRaises(ConfigError) as ctx:
            run_batch(self.cfg, 0, "parallel", workers=0)
        self.assertEqual(len(ctx.exception.issues), 3)


if __name__ == "__main__":
    unittest.main()

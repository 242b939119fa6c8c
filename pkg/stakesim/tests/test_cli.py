"""
Tests for the command-line interface.
"""

import json
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import yaml
from click.testing import CliRunner

from ..cli import commands
from ..cli.main import main
from ..utils import config_manager as config_module
from ..utils.config_manager import ConfigManager
from .fixtures import scenario_dict


def write_scenario(directory, name, data):
    path = Path(directory) / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


class TestCLI(unittest.TestCase):
    """Command behavior and exit codes."""

    def setUp(self):
        self.runner = CliRunner()
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.honest = write_scenario(self.dir, "honest.yaml", scenario_dict(
            [{"id": 1, "q": 0.3}, {"id": 2, "q": 0.3}, {"id": 3, "q": 0.1, "honest": False}],
            horizon=30, name="honest",
        ))
        self.fork = write_scenario(self.dir, "fork.yaml", scenario_dict(
            [{"id": 1}, {"id": 2}], horizon=3, name="fork",
            lottery={"type": "scripted", "wins": [[1, 1], [2, 1]]},
        ))

    def tearDown(self):
        self.tmp.cleanup()

    def test_help(self):
        result = self.runner.invoke(main, ["--help"])
        self.assertEqual(result.exit_code, 0)
        for command in ("run", "check", "bounds", "conformance", "list", "info"):
            self.assertIn(command, result.output)

    def test_run_writes_artifacts(self):
        out = self.dir / "out"
        result = self.runner.invoke(main, ["run", self.honest, "--out", str(out), "--dot"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("Saved to", result.output)
        for name in ("trace.jsonl", "blocks.jsonl", "report.json", "report.yaml", "trace.dot"):
            self.assertTrue((out / name).exists(), name)
        self.assertEqual(len((out / "trace.jsonl").read_text().splitlines()), 31 * 2)

    def test_run_several_seeds(self):
        out = self.dir / "batch"
        result = self.runner.invoke(main, ["run", self.honest, "--out", str(out), "--no-dot", "--seeds", "2"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertTrue((out / "aggregate.csv").exists())
        self.assertTrue((out / "seed-0001" / "trace.jsonl").exists())

    def test_invalid_scenario(self):
        bad = write_scenario(self.dir, "bad.yaml", scenario_dict(
            [{"id": 1, "q": 0.1}, {"id": 1, "q": 0.2}], horizon=5,
        ))
        result = self.runner.invoke(main, ["run", bad])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("Duplicate party id: 1", result.output)

    def test_check_passes_with_default_constants(self):
        out = self.dir / "report"
        result = self.runner.invoke(main, ["check", self.fork, "--k", "1", "--out", str(out)])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("No violations", result.output)
        report = json.loads((out / "report.json").read_text())
        self.assertEqual(report["summary"]["rollback_depth"], 2)

    def test_check_literal_violation(self):
        result = self.runner.invoke(main, ["check", self.fork, "-c", "common-prefix", "--k", "1", "--literal"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("violated", result.output)

    def test_check_rejects_unknown_checker(self):
        result = self.runner.invoke(main, ["check", self.fork, "-c", "liveness"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("Unknown checker(s): liveness", result.output)

    def test_check_skips_rollback_without_common_prefix(self):
        out = self.dir / "forging"
        result = self.runner.invoke(main, ["check", self.fork, "-c", "forging", "--out", str(out)])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertNotIn("Rollback depth", result.output)
        report = json.loads((out / "report.json").read_text())
        self.assertNotIn("rollback_depth", report["summary"])

    def test_check_reports_observed_frequencies(self):
        result = self.runner.invoke(main, ["check", self.honest, "-c", "forging"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("Observed slot frequencies", result.output)

    def test_unexpected_errors_are_reported(self):
        with mock.patch.object(commands, "run", side_effect=RuntimeError("boom")):
            ran = self.runner.invoke(main, ["run", self.honest, "--out", str(self.dir / "x")])
            checked = self.runner.invoke(main, ["check", self.honest])
        self.assertEqual(ran.exit_code, 1)
        self.assertIn("Unexpected error running scenario: boom", ran.output)
        self.assertEqual(checked.exit_code, 1)
        self.assertIn("Unexpected error checking scenario: boom", checked.output)

    def test_bounds_monte_carlo_from_settings(self):
        manager = ConfigManager(str(self.dir / "stakesim.yaml"))
        args = ["bounds", "--q", "0.1,0.1,0.1:a", "--k-range", "10:12", "--sl-now", "100"]
        self.assertNotIn("Monte-Carlo", self.runner.invoke(main, args).output)
        manager.set("bounds.monte_carlo_samples", 1000)
        with mock.patch.object(config_module, "config_manager", manager):
            result = self.runner.invoke(main, args)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("Monte-Carlo (1000 samples)", result.output)
        rejected = self.runner.invoke(main, args + ["--monte-carlo=-5"])
        self.assertEqual(rejected.exit_code, 1)

    def test_color_setting(self):
        manager = ConfigManager(str(self.dir / "stakesim.yaml"))
        ctx = mock.Mock(obj={})
        manager.set("ui.color_output", False)
        with mock.patch.object(config_module, "config_manager", manager):
            self.assertTrue(commands._console(ctx).no_color)
        manager.set("ui.color_output", True)
        with mock.patch.object(config_module, "config_manager", manager):
            self.assertFalse(commands._console(ctx).no_color)

    def test_bounds(self):
        result = self.runner.invoke(main, ["bounds", "--q", "0.1,0.1,0.1:a", "--delta", "0.1",
                                           "--delta-prime", "0.1", "--k-range", "10:12", "--sl-now", "100"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("p_LS (lucky): 0.190000", result.output)
        self.assertIn("p_SS (super): 0.180000", result.output)
        self.assertIn("vacuous", result.output)

    def test_bounds_rejects_bad_delta(self):
        result = self.runner.invoke(main, ["bounds", "--delta", "1.5"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("delta must lie in [0, 1)", result.output)

    def test_conformance(self):
        out = self.dir / "conf"
        result = self.runner.invoke(main, ["conformance", "--impl", "indexed", "--n", "40",
                                           "--seeds", "2", "--out", str(out)])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("conform", result.output)
        data = json.loads((out / "conformance.json").read_text())
        self.assertEqual(len(data["reports"]), 2)

    def test_conformance_catches_broken_tree(self):
        result = self.runner.invoke(main, ["conformance", "--impl", "broken", "--n", "200", "--seeds", "5"])
        self.assertEqual(result.exit_code, 1)
        self.assertIn("self-contained", result.output)

    def test_list(self):
        out = self.dir / "listed"
        self.runner.invoke(main, ["run", self.honest, "--out", str(out), "--no-dot"])
        result = self.runner.invoke(main, ["list", "--directory", str(out)])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("trace.jsonl", result.output)
        missing = self.runner.invoke(main, ["list", "--directory", str(self.dir / "nowhere")])
        self.assertEqual(missing.exit_code, 1)

    def test_info(self):
        result = self.runner.invoke(main, ["info"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("stakesim Version", result.output)


if __name__ == "__main__":
    unittest.main()

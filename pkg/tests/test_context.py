"""
Unit tests for the context module
"""

import json
import shutil
import tempfile
import unittest
from pathlib import Path

from core.config import run_id_for
from core.config_schema import ExtropyConfig
from core.context import RunContext


class TestRunContext(unittest.TestCase):
    """Unit tests for RunContext class"""

    def setUp(self):
        self.test_log_dir = Path(tempfile.mkdtemp(prefix="extropy_test_"))
        self.config = ExtropyConfig.from_dict({"sampler": {"seed": 99}})

    def tearDown(self):
        shutil.rmtree(self.test_log_dir, ignore_errors=True)

    def test_context_initialization(self):
        context = RunContext(self.config, "entropy")

        self.assertEqual(context.run_id, run_id_for(self.config))
        self.assertEqual(context.config, self.config)
        self.assertEqual(context.subcommand, "entropy")
        self.assertEqual(context.outputs, {})
        self.assertEqual(context.results, {})
        self.assertEqual(context.processing_log, [])
        self.assertEqual(context.current_step, "initialized")

    def test_log_step(self):
        context = RunContext(self.config, "simulate")
        context.log_step("simulate", "started", {"windows": 4})

        self.assertEqual(len(context.processing_log), 1)
        log_entry = context.processing_log[0]
        self.assertEqual(log_entry["tool"], "simulate")
        self.assertEqual(log_entry["status"], "started")
        self.assertEqual(log_entry["details"], {"windows": 4})
        self.assertIn("timestamp", log_entry)
        self.assertEqual(context.current_step, "simulate_started")

    def test_record_output(self):
        context = RunContext(self.config, "entropy")
        context.record_output("entropy", self.test_log_dir / "entropy.csv")
        self.assertEqual(context.outputs["entropy"], str(self.test_log_dir / "entropy.csv"))

    def test_save_checkpoint(self):
        context = RunContext(self.config, "axioms")
        context.log_step("axioms", "completed")
        path = context.save_checkpoint(self.test_log_dir)

        self.assertEqual(path, self.test_log_dir / context.run_id / "axioms_checkpoint.json")
        with open(path, 'r', encoding='utf-8') as f:
            saved = json.load(f)
        self.assertEqual(saved["subcommand"], "axioms")
        self.assertEqual(saved["current_step"], "axioms_completed")
        self.assertEqual(saved["config"]["sampler"]["seed"], 99)

    def test_round_trip_through_dict(self):
        context = RunContext(self.config, "variational")
        context.results = {"gap": -0.2}
        context.record_output("variational", Path("variational.csv"))

        restored = RunContext.from_dict(context.to_dict())
        self.assertEqual(restored.run_id, context.run_id)
        self.assertEqual(restored.subcommand, "variational")
        self.assertEqual(restored.results, {"gap": -0.2})
        self.assertEqual(restored.outputs, context.outputs)

    def test_to_dict_truncates_log(self):
        context = RunContext(self.config)
        for i in range(8):
            context.log_step("step", str(i))
        self.assertEqual(len(context.to_dict()["processing_log"]), 5)
        self.assertEqual(len(context.to_dict(full_log=True)["processing_log"]), 8)

    def test_summary(self):
        context = RunContext(self.config)
        self.assertIsNone(context.summary())
        context.log_step("complexity", "failed")
        self.assertEqual(context.summary(), {"steps": 1, "failed": 1, "current_step": "complexity_failed"})


if __name__ == '__main__':
    unittest.main()

"""
Unit tests for the cli module
"""

import io
import json
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import yaml

from cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_GUARD, EXIT_OK, build_parser, config_overrides, main


class TestCLI(unittest.TestCase):
    """End-to-end runs of the subcommands on small configurations"""

    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp(prefix="extropy_cli_test_"))
        self.config_data = {
            "global": {"log_dir": str(self.test_dir / "logs"), "out_dir": str(self.test_dir / "out")},
            "system": {"kind": "logistic_cml", "halo": "periodic"},
            "sampler": {"seed": 5},
            "grids": {
                "eps_grid": [0.5, 0.25],
                "n_grid": [16, 32, 64, 128],
                "tau_list": [1, 2],
                "windows": [[0, 1], [0, 2]],
                "count_n_grid": [1, 2, 3],
            },
            "ensemble": {"size": 16, "samples": 2},
            "axioms": {"corpus_size": 4, "max_word_len": 32, "h4_max_len": 8},
        }

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def write_config(self, **section_overrides):
        data = json.loads(json.dumps(self.config_data))
        for section, values in section_overrides.items():
            data.setdefault(section, {}).update(values)
        path = self.test_dir / f"config_{len(list(self.test_dir.glob('config_*')))}.yaml"
        path.write_text(yaml.dump(data))
        return str(path)

    def run_cli(self, argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(argv)
        return code, out.getvalue(), err.getvalue()

    def test_parser_options(self):
        args = build_parser().parse_args(["entropy", "--seed", "3", "--workers", "2", "--out", "res"])
        self.assertEqual(args.command, "entropy")
        self.assertEqual(config_overrides(args), {"sampler": {"seed": 3}, "global": {"workers": 2, "out_dir": "res"}})

    def test_validate_seq_writes_manifest(self):
        code, out, _ = self.run_cli(["validate-seq", "--config", self.write_config()])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("validate-seq completed", out)

        manifest = json.loads((self.test_dir / "out" / "run.json").read_text())
        self.assertEqual(manifest["subcommand"], "validate-seq")
        self.assertEqual(manifest["outputs"], ["partition.csv", "validate_seq.csv"])
        self.assertEqual(manifest["seeds"], {"sampler": 5})
        self.assertNotIn("out_dir", manifest["config"]["global"])
        self.assertTrue(manifest["results"]["passed"])

    def test_reruns_are_byte_identical(self):
        config = self.write_config()
        self.assertEqual(self.run_cli(["validate-seq", "--config", config])[0], EXIT_OK)
        first = {p.name: p.read_bytes() for p in (self.test_dir / "out").iterdir()}
        self.assertEqual(self.run_cli(["validate-seq", "--config", config])[0], EXIT_OK)
        second = {p.name: p.read_bytes() for p in (self.test_dir / "out").iterdir()}
        self.assertEqual(first, second)

    def test_entropy_independent_of_workers(self):
        config = self.write_config()
        one = str(self.test_dir / "one")
        two = str(self.test_dir / "two")
        self.assertEqual(self.run_cli(["entropy", "--config", config, "--workers", "1", "--out", one])[0], EXIT_OK)
        self.assertEqual(self.run_cli(["entropy", "--config", config, "--workers", "2", "--out", two])[0], EXIT_OK)
        for name in ("entropy.csv", "entropy_counts.csv", "run.json"):
            self.assertEqual((Path(one) / name).read_bytes(), (Path(two) / name).read_bytes(), name)

    def test_axioms_runs(self):
        code, _, _ = self.run_cli(["axioms", "--config", self.write_config()])
        self.assertEqual(code, EXIT_OK)
        header = (self.test_dir / "out" / "axioms.csv").read_text().splitlines()[0]
        self.assertTrue(header.startswith("hypothesis,backend,corpus,passed"))

    def test_enumeration_guard_exit_code(self):
        code, _, err = self.run_cli(["axioms", "--config", self.write_config(axioms={"h4_max_len": 30})])
        self.assertEqual(code, EXIT_GUARD)
        self.assertIn("enumeration refused", err)
        self.assertFalse((self.test_dir / "out" / "run.json").exists())

    def test_missing_seed_is_a_config_error(self):
        config = self.write_config()
        data = yaml.safe_load(Path(config).read_text())
        del data["sampler"]["seed"]
        Path(config).write_text(yaml.dump(data))
        code, _, err = self.run_cli(["simulate", "--config", config])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("sampler.seed", err)

    def test_seed_flag_overrides_config(self):
        code, _, _ = self.run_cli(["validate-seq", "--config", self.write_config(), "--seed", "11"])
        self.assertEqual(code, EXIT_OK)
        manifest = json.loads((self.test_dir / "out" / "run.json").read_text())
        self.assertEqual(manifest["seeds"], {"sampler": 11})

    def test_unknown_key_is_a_config_error(self):
        code, _, _ = self.run_cli(["entropy", "--config", self.write_config(grids={"n_steps": 4})])
        self.assertEqual(code, EXIT_CONFIG)

    def test_inadmissible_sequence_exit_code(self):
        explicit = [[k * k, k * k + k] for k in range(1, 17)]
        config = self.write_config(admissible={"kind": "explicit", "explicit": explicit})
        code, _, err = self.run_cli(["complexity", "--config", config])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("Inadmissible window sequence", err)
        self.assertFalse((self.test_dir / "out" / "run.json").exists())

    def test_no_command(self):
        code, out, _ = self.run_cli(["--config", self.write_config()])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("usage", out)

    def test_list_runs_and_status(self):
        config = self.write_config()
        code, out, _ = self.run_cli(["--config", config, "--list-runs"])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("No recorded runs", out)

        self.run_cli(["validate-seq", "--config", config])
        run_id = json.loads((self.test_dir / "out" / "run.json").read_text())["run_id"]
        code, out, _ = self.run_cli(["--config", config, "--list-runs"])
        self.assertEqual(code, EXIT_OK)
        self.assertIn(run_id, out)

        code, out, _ = self.run_cli(["--config", config, "--run-status", run_id])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("validate-seq", out)
        self.assertEqual(self.run_cli(["--config", config, "--run-status", "0" * 16])[0], EXIT_FAILURE)


if __name__ == '__main__':
    unittest.main()

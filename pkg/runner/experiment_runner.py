import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from core.async_utils import run_async_safe
from core.config import ConfigManager, manifest_config
from core.context import RunContext
from core.exceptions import ExtropyError, ExtropyFileError, ExtropyToolError
from core.utils import write_text_atomic
from runner.task_registry import register_task_functions

logger = logging.getLogger(__name__)

MANIFEST_NAME = "run.json"


class ExperimentRunner:
    """
    Runs one subcommand against a validated configuration and writes the
    run manifest once its outputs are in place
    """

    def __init__(self, config_path: str = None, config_overrides: Dict[str, Any] = None, verbose: bool = False):
        self.config_manager = ConfigManager(config_path)
        self.config = self.config_manager.load_config(config_overrides)
        self.task_functions = register_task_functions()
        self.verbose = verbose

        log_dir = Path(self.config.global_config.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)

    def run(self, subcommand: str) -> Dict[str, Any]:
        """
        Execute a subcommand

        Args:
            subcommand: one of the registered task names

        Returns:
            The manifest written to run.json
        """
        if subcommand not in self.task_functions:
            raise ExtropyError(f"Unknown subcommand: {subcommand}")

        context = RunContext(self.config, subcommand)
        log_dir = Path(self.config.global_config.log_dir)
        logger.info("Running %s (run %s)", subcommand, context.run_id)

        result = self.task_functions[subcommand](context)
        context = RunContext.from_dict(result["context"])
        if not result["success"]:
            context.save_checkpoint(log_dir)
            error = result.get("exception")
            if isinstance(error, ExtropyError):
                raise error
            message = f"Task {subcommand} failed: {result.get('errors', [])}"
            raise ExtropyToolError(message, result.get("suggestions", [])) from error

        manifest = self._manifest(context)
        path = Path(self.config.global_config.out_dir) / MANIFEST_NAME
        try:
            run_async_safe(write_text_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n"))
        except OSError as e:
            raise ExtropyFileError(f"Could not write manifest {path}: {e}")

        context.log_step("runner", "completed", {"manifest": str(path)})
        context.save_checkpoint(log_dir)
        if self.verbose:
            print(f"[Runner] {subcommand} completed, outputs: {sorted(context.outputs)}")
        return manifest

    def _manifest(self, context: RunContext) -> Dict[str, Any]:
        """Everything needed to rerun bit for bit; no timestamps or paths"""
        config = manifest_config(self.config)
        return {
            "run_id": context.run_id,
            "subcommand": context.subcommand,
            "code_version": self.config.global_config.code_version,
            "seeds": {"sampler": self.config.sampler.seed},
            "config": config,
            "outputs": sorted(Path(p).name for p in context.outputs.values()),
            "results": context.results,
        }

    def get_run_status(self, run_id: str) -> Dict[str, Any]:
        """Get the recorded status of a run"""
        run_dir = Path(self.config.global_config.log_dir) / run_id
        checkpoints = sorted(run_dir.glob("*_checkpoint.json")) if run_dir.is_dir() else []
        if not checkpoints:
            return {"status": "not_found"}

        try:
            runs = []
            for checkpoint_file in checkpoints:
                with open(checkpoint_file, 'r', encoding='utf-8') as f:
                    checkpoint = json.load(f)
                runs.append({
                    "subcommand": checkpoint.get("subcommand", "unknown"),
                    "current_step": checkpoint.get("current_step", "unknown"),
                    "processing_log": checkpoint.get("processing_log", []),
                })
            return {"status": "found", "run_id": run_id, "runs": runs}
        except (OSError, json.JSONDecodeError) as e:
            return {"status": "error", "error": str(e)}

    def list_runs(self) -> List[Dict[str, Any]]:
        """List runs with checkpoints in the log directory, newest first"""
        log_dir = Path(self.config.global_config.log_dir)
        runs = []
        if not log_dir.exists():
            return runs

        for run_dir in log_dir.iterdir():
            if not run_dir.is_dir():
                continue
            for checkpoint_file in run_dir.glob("*_checkpoint.json"):
                try:
                    with open(checkpoint_file, 'r', encoding='utf-8') as f:
                        checkpoint = json.load(f)
                except (OSError, json.JSONDecodeError):
                    continue
                runs.append({
                    "run_id": run_dir.name,
                    "subcommand": checkpoint.get("subcommand", "unknown"),
                    "current_step": checkpoint.get("current_step", "unknown"),
                    "last_update": checkpoint_file.stat().st_mtime,
                })
        return sorted(runs, key=lambda x: x["last_update"], reverse=True)

import json
from pathlib import Path
from typing import List, Dict, Any, Optional
from dataclasses import dataclass
from datetime import datetime
from core.config import run_id_for
from core.config_schema import ExtropyConfig


@dataclass
class RunContext:
    """Context object that carries state through an experiment run"""

    run_id: str
    config: ExtropyConfig
    subcommand: str
    outputs: Dict[str, str]
    results: Dict[str, Any]
    processing_log: List[Dict[str, Any]]
    current_step: str

    def __init__(self, config: ExtropyConfig, subcommand: str = ""):
        self.run_id = run_id_for(config)
        self.config = config
        self.subcommand = subcommand
        self.outputs = {}
        self.results = {}
        self.processing_log = []
        self.current_step = "initialized"

    def log_step(self, tool_name: str, status: str, details: Dict[str, Any] = None):
        """Add processing step to log"""
        step = {
            "tool": tool_name,
            "status": status,
            "timestamp": datetime.now().isoformat(),
            "details": details or {}
        }
        self.processing_log.append(step)
        self.current_step = f"{tool_name}_{status}"

    def record_output(self, name: str, path: Path):
        self.outputs[name] = str(path)

    def save_checkpoint(self, log_dir: Path) -> Path:
        """Save the step log for diagnostics; never written next to run outputs"""
        run_dir = Path(log_dir) / self.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = run_dir / f"{self.subcommand or 'run'}_checkpoint.json"
        with open(checkpoint_path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(full_log=True), f, indent=2, default=str)
        return checkpoint_path

    def to_dict(self, full_log: bool = False) -> Dict[str, Any]:
        """Serialize context (last 5 steps unless full_log)"""
        return {
            "run_id": self.run_id,
            "config": self.config.to_dict(),
            "subcommand": self.subcommand,
            "outputs": self.outputs,
            "results": self.results,
            "processing_log": self.processing_log if full_log else self.processing_log[-5:],
            "current_step": self.current_step
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunContext':
        """Create context from dictionary"""
        config_data = data.get('config', {})
        if isinstance(config_data, dict):
            config = ExtropyConfig.from_dict(config_data)
        else:
            config = config_data

        context = cls(config, data.get('subcommand', ""))
        context.outputs = data.get('outputs', {})
        context.results = data.get('results', {})
        context.processing_log = data.get('processing_log', [])
        context.current_step = data.get('current_step', "initialized")
        return context

    def summary(self) -> Optional[Dict[str, Any]]:
        if not self.processing_log:
            return None
        failed = [s for s in self.processing_log if s["status"] == "failed"]
        return {"steps": len(self.processing_log), "failed": len(failed), "current_step": self.current_step}

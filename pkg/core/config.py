import json
import hashlib
import logging
from typing import Dict, Any, Optional
import yaml
from pathlib import Path
from core.config_schema import ExtropyConfig, merge_configs
from core.exceptions import ExtropyConfigError

logger = logging.getLogger(__name__)


class ConfigManager:
    def __init__(self, config_path: str = None):
        self.config_path = config_path or Path(__file__).parent.parent / "config.yaml"

    def load_raw(self) -> Dict[str, Any]:
        """Read the configuration tree; YAML or JSON files are both accepted"""
        path = Path(self.config_path)
        if not path.exists():
            raise ExtropyConfigError(f"configuration file not found: {path}", "config")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ExtropyConfigError(f"unparseable configuration: {e}", "config")
        if not isinstance(data, dict):
            raise ExtropyConfigError("top level must be a mapping", "config")
        return data

    def load_config(self, user_overrides: Optional[Dict[str, Any]] = None) -> ExtropyConfig:
        """Load configuration with user overrides and validation"""
        base_config = self.load_raw()

        # Apply user overrides
        if user_overrides:
            base_config = merge_configs(base_config, user_overrides)

        try:
            config = ExtropyConfig.from_dict(base_config)
        except ExtropyConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ExtropyConfigError(f"Configuration validation failed: {e}", "config")

        logger.debug("Loaded configuration from %s", self.config_path)
        return config


# Settings that change where and how fast a run executes, not what it computes.
EXECUTION_KEYS = ("workers", "log_dir", "out_dir")


def manifest_config(config: ExtropyConfig) -> Dict[str, Any]:
    """Configuration tree without the execution-only keys"""
    data = config.to_dict()
    for key in EXECUTION_KEYS:
        data["global"].pop(key, None)
    return data


def canonical_config(config: ExtropyConfig) -> str:
    """Canonical JSON text of a configuration (sorted keys, no whitespace)"""
    return json.dumps(manifest_config(config), sort_keys=True, separators=(",", ":"))


def run_id_for(config: ExtropyConfig) -> str:
    """Run identifier: a content hash of the canonical configuration"""
    return hashlib.sha256(canonical_config(config).encode("utf-8")).hexdigest()[:16]

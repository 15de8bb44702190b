"""
Unit tests for configuration schema validation
"""

import tempfile
from pathlib import Path

import pytest
import yaml

from core.config import ConfigManager, canonical_config, manifest_config, run_id_for
from core.config_schema import ExtropyConfig, merge_configs
from core.exceptions import ExtropyConfigError

DEFAULT_CONFIG = Path(__file__).parent.parent / "config.yaml"


def write_config(config_data):
    with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
        yaml.dump(config_data, f)
        return f.name


def load(config_data, overrides=None):
    config_path = write_config(config_data)
    try:
        return ConfigManager(config_path).load_config(overrides)
    finally:
        Path(config_path).unlink()


def expect_error(config_data, field_path):
    with pytest.raises(ExtropyConfigError) as ctx:
        load(config_data)
    assert ctx.value.field_path == field_path, str(ctx.value)
    return ctx.value


def test_shipped_configuration_loads():
    """The default config.yaml validates as shipped"""
    config = ConfigManager(str(DEFAULT_CONFIG)).load_config()
    assert isinstance(config, ExtropyConfig)
    assert config.system.kind == "bit_tape_shift"
    assert config.backend.kind == "lz78_code_length"
    assert config.sampler.seed is not None
    print("✅ Shipped configuration test passed")


def test_minimal_configuration_uses_defaults():
    config = load({"sampler": {"seed": 7}})
    assert config.global_config.workers == 1
    assert config.grids.n_grid == [128, 256, 512, 1024]
    assert config.admissible.k_max == 32
    assert config.ensemble.max_level == 1
    assert config.ensemble.limit_fraction == 0.5


def test_missing_seed():
    """The sampler seed is mandatory"""
    error = expect_error({"system": {"kind": "identity"}}, "sampler.seed")
    assert "mandatory" in str(error)


def test_empty_window_list():
    expect_error({"sampler": {"seed": 1}, "grids": {"windows": []}}, "grids.windows")


def test_non_monotone_grids():
    expect_error({"sampler": {"seed": 1}, "grids": {"n_grid": [128, 64, 256, 512]}}, "grids.n_grid")
    expect_error({"sampler": {"seed": 1}, "grids": {"eps_grid": [0.1, 0.2]}}, "grids.eps_grid")
    expect_error({"sampler": {"seed": 1}, "grids": {"windows": [[0, 4], [0, 2]]}}, "grids.windows")


def test_short_n_grid():
    expect_error({"sampler": {"seed": 1}, "grids": {"n_grid": [64, 128, 256]}}, "grids.n_grid")


def test_bad_window():
    expect_error({"sampler": {"seed": 1}, "grids": {"windows": [[0, 4], [8, 8]]}}, "grids.windows[1]")


def test_invalid_system_kind():
    expect_error({"sampler": {"seed": 1}, "system": {"kind": "baker_map"}}, "system.kind")


def test_external_backend_needs_adapter():
    expect_error({"sampler": {"seed": 1}, "backend": {"kind": "external_compressor"}}, "backend.adapter")


def test_short_generator_prefix():
    expect_error({"sampler": {"seed": 1}, "admissible": {"kind": "growing", "k_max": 8}}, "admissible.k_max")


def test_unknown_section_and_key():
    expect_error({"sampler": {"seed": 1}, "plotting": {}}, "plotting")
    expect_error({"sampler": {"seed": 1, "sead": 2}}, "sampler.sead")


def test_limit_fraction_range():
    expect_error({"sampler": {"seed": 1}, "ensemble": {"limit_fraction": 0}}, "ensemble.limit_fraction")
    expect_error({"sampler": {"seed": 1}, "ensemble": {"limit_fraction": 1.5}}, "ensemble.limit_fraction")
    assert load({"sampler": {"seed": 1}, "ensemble": {"limit_fraction": 1}}).ensemble.limit_fraction == 1


def test_workers_range():
    expect_error({"sampler": {"seed": 1}, "global": {"workers": 0}}, "global.workers")


def test_user_overrides():
    """Overrides merge into nested sections without dropping siblings"""
    config = load({"sampler": {"seed": 1, "tape_depth": 96}}, {"sampler": {"seed": 5}, "global": {"workers": 3}})
    assert config.sampler.seed == 5
    assert config.sampler.tape_depth == 96
    assert config.global_config.workers == 3


def test_merge_configs_does_not_mutate_base():
    base = {"grids": {"tau_list": [1, 2]}}
    merged = merge_configs(base, {"grids": {"tau_list": [1, 3]}})
    assert merged["grids"]["tau_list"] == [1, 3]
    assert base["grids"]["tau_list"] == [1, 2]


def test_missing_file():
    with pytest.raises(ExtropyConfigError):
        ConfigManager("/nonexistent/extropy.yaml").load_config()


def test_run_id_ignores_execution_keys():
    """Worker count and output locations do not change the run id"""
    one = load({"sampler": {"seed": 1}, "global": {"workers": 1, "out_dir": "./a"}})
    many = load({"sampler": {"seed": 1}, "global": {"workers": 8, "out_dir": "./b"}})
    other = load({"sampler": {"seed": 2}})
    assert run_id_for(one) == run_id_for(many)
    assert run_id_for(one) != run_id_for(other)
    assert len(run_id_for(one)) == 16
    assert "workers" not in manifest_config(one)["global"]
    assert canonical_config(one) == canonical_config(many)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

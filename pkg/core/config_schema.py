"""
Configuration schema validation for extropy experiments
Provides type-safe configuration validation with sensible defaults
"""

from typing import Dict, Any, List, Optional, Sequence
from dataclasses import dataclass, field, fields
from core.exceptions import ExtropyConfigError


SYSTEM_KINDS = ["identity", "bit_tape_shift", "tent_lattice", "logistic_cml", "elementary_ca"]
HALO_POLICIES = ["periodic", "iid_refresh", "fixed_halo"]
DISTRIBUTIONS = ["product_uniform", "bernoulli"]
SEQUENCE_KINDS = ["growing", "symmetric", "drifting", "explicit"]
BACKEND_KINDS = ["lz78_code_length", "lz76_phrase_encoding", "external_compressor"]


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_monotone(values: Sequence, path: str, increasing: bool = True) -> None:
    if not isinstance(values, (list, tuple)) or not values:
        raise ExtropyConfigError("grid must be a non-empty list", path)
    if not all(_is_number(v) for v in values):
        raise ExtropyConfigError("grid entries must be numbers", path)
    pairs = zip(values, values[1:])
    ok = all(b > a for a, b in pairs) if increasing else all(b < a for a, b in pairs)
    if not ok:
        direction = "increasing" if increasing else "decreasing"
        raise ExtropyConfigError(f"grid must be strictly {direction}", path)


@dataclass
class GlobalConfig:
    """Global configuration settings"""
    log_dir: str = "./logs"
    out_dir: str = "./results"
    workers: int = 1
    code_version: str = "extropy-1.0.0"

    def validate(self) -> None:
        """Validate global configuration"""
        if not isinstance(self.log_dir, str) or not self.log_dir.strip():
            raise ExtropyConfigError("must be a non-empty string", "global.log_dir")
        if not isinstance(self.out_dir, str) or not self.out_dir.strip():
            raise ExtropyConfigError("must be a non-empty string", "global.out_dir")
        if not _is_int(self.workers) or not 1 <= self.workers <= 256:
            raise ExtropyConfigError("must be an integer between 1 and 256", "global.workers")
        if not isinstance(self.code_version, str) or not self.code_version:
            raise ExtropyConfigError("must be a non-empty string", "global.code_version")


@dataclass
class SystemConfig:
    """Lattice system definition"""
    kind: str = "bit_tape_shift"
    tau: int = 1
    slope: float = 2.0
    r: float = 4.0
    coupling: float = 0.0
    rule: int = 30
    precision_cap: Optional[int] = None
    halo: str = "fixed_halo"

    def validate(self) -> None:
        """Validate the system section"""
        if self.kind not in SYSTEM_KINDS:
            raise ExtropyConfigError(f"must be one of {SYSTEM_KINDS}", "system.kind")
        if not _is_int(self.tau) or self.tau < 1:
            raise ExtropyConfigError("must be a positive integer", "system.tau")
        if not _is_number(self.slope) or not 0 < self.slope <= 2:
            raise ExtropyConfigError("must be in (0, 2]", "system.slope")
        if not _is_number(self.r) or not 0 < self.r <= 4:
            raise ExtropyConfigError("must be in (0, 4]", "system.r")
        if not _is_number(self.coupling) or not 0 <= self.coupling <= 1:
            raise ExtropyConfigError("must be in [0, 1]", "system.coupling")
        if not _is_int(self.rule) or not 0 <= self.rule <= 255:
            raise ExtropyConfigError("must be an integer in 0..255", "system.rule")
        if self.precision_cap is not None and (not _is_int(self.precision_cap) or self.precision_cap < 1):
            raise ExtropyConfigError("must be a positive integer or null", "system.precision_cap")
        if self.halo not in HALO_POLICIES:
            raise ExtropyConfigError(f"must be one of {HALO_POLICIES}", "system.halo")


@dataclass
class SamplerConfig:
    """Invariant-measure sampler; the seed is mandatory"""
    seed: Optional[int] = None
    distribution: str = "product_uniform"
    p: float = 0.5
    tape_depth: int = 64

    def validate(self) -> None:
        """Validate the sampler section"""
        if self.seed is None:
            raise ExtropyConfigError("seed is mandatory", "sampler.seed")
        if not _is_int(self.seed) or not 0 <= self.seed < 2 ** 64:
            raise ExtropyConfigError("must be an unsigned 64-bit integer", "sampler.seed")
        if self.distribution not in DISTRIBUTIONS:
            raise ExtropyConfigError(f"must be one of {DISTRIBUTIONS}", "sampler.distribution")
        if not _is_number(self.p) or not 0 <= self.p <= 1:
            raise ExtropyConfigError("must be in [0, 1]", "sampler.p")
        if not _is_int(self.tape_depth) or self.tape_depth < 1:
            raise ExtropyConfigError("must be a positive integer", "sampler.tape_depth")


@dataclass
class GridsConfig:
    """Estimation grids"""
    eps_grid: List[float] = field(default_factory=lambda: [0.25, 0.125, 0.0625])
    n_grid: List[int] = field(default_factory=lambda: [128, 256, 512, 1024])
    tau_list: List[int] = field(default_factory=lambda: [1, 2, 4])
    windows: List[List[int]] = field(default_factory=lambda: [[0, 2], [0, 4], [0, 8], [0, 12]])
    count_n_grid: List[int] = field(default_factory=lambda: [1, 2, 3, 4])

    def validate(self) -> None:
        """Validate grids: non-empty and strictly monotone"""
        _check_monotone(self.eps_grid, "grids.eps_grid", increasing=False)
        if any(e <= 0 for e in self.eps_grid):
            raise ExtropyConfigError("entries must be positive", "grids.eps_grid")
        _check_monotone(self.n_grid, "grids.n_grid")
        if len(self.n_grid) < 4 or not all(_is_int(n) and n > 0 for n in self.n_grid):
            raise ExtropyConfigError("needs at least 4 positive integers", "grids.n_grid")
        _check_monotone(self.tau_list, "grids.tau_list")
        if not all(_is_int(t) and t > 0 for t in self.tau_list):
            raise ExtropyConfigError("entries must be positive integers", "grids.tau_list")
        _check_monotone(self.count_n_grid, "grids.count_n_grid")
        if not isinstance(self.windows, list) or not self.windows:
            raise ExtropyConfigError("window list must be non-empty", "grids.windows")
        for i, window in enumerate(self.windows):
            if (not isinstance(window, (list, tuple)) or len(window) != 2
                    or not all(_is_int(v) for v in window) or window[0] >= window[1]):
                raise ExtropyConfigError("each window must be [lo, hi] with lo < hi", f"grids.windows[{i}]")
        sizes = [hi - lo for lo, hi in self.windows]
        _check_monotone(sizes, "grids.windows")


@dataclass
class AdmissibleConfig:
    """Admissible interval sequence"""
    kind: str = "explicit"
    alpha: float = 0.5
    scale: int = 1
    explicit: List[List[int]] = field(default_factory=list)
    k_max: int = 32
    l_min: float = 0.1

    def validate(self) -> None:
        """Validate the admissible-sequence section"""
        if self.kind not in SEQUENCE_KINDS:
            raise ExtropyConfigError(f"must be one of {SEQUENCE_KINDS}", "admissible.kind")
        if not _is_number(self.alpha) or self.alpha < 0:
            raise ExtropyConfigError("must be non-negative", "admissible.alpha")
        if not _is_int(self.scale) or self.scale < 1:
            raise ExtropyConfigError("must be a positive integer", "admissible.scale")
        if not _is_int(self.k_max) or self.k_max < 16:
            raise ExtropyConfigError("must be an integer >= 16", "admissible.k_max")
        if not _is_number(self.l_min) or self.l_min <= 0:
            raise ExtropyConfigError("must be positive", "admissible.l_min")
        for i, window in enumerate(self.explicit):
            if not isinstance(window, (list, tuple)) or len(window) != 2 or window[0] >= window[1]:
                raise ExtropyConfigError("each window must be [a, b] with a < b", f"admissible.explicit[{i}]")


@dataclass
class BackendConfig:
    """Complexity backend"""
    kind: str = "lz78_code_length"
    adapter: Optional[str] = None

    def validate(self) -> None:
        """Validate the backend section"""
        if self.kind not in BACKEND_KINDS:
            raise ExtropyConfigError(f"must be one of {BACKEND_KINDS}", "backend.kind")
        if self.kind == "external_compressor" and not self.adapter:
            raise ExtropyConfigError("external_compressor needs an adapter id", "backend.adapter")


@dataclass
class EnsembleConfig:
    """Sampling sizes"""
    size: int = 256
    samples: int = 8
    max_level: int = 1
    limit_fraction: float = 0.5

    def validate(self) -> None:
        """Validate the ensemble section"""
        if not _is_int(self.size) or self.size < 2:
            raise ExtropyConfigError("must be an integer >= 2", "ensemble.size")
        if not _is_int(self.samples) or self.samples < 1:
            raise ExtropyConfigError("must be a positive integer", "ensemble.samples")
        if not _is_int(self.max_level) or self.max_level < 0:
            raise ExtropyConfigError("must be a non-negative integer", "ensemble.max_level")
        if not _is_number(self.limit_fraction) or not 0 < self.limit_fraction <= 1:
            raise ExtropyConfigError("must lie in (0, 1]", "ensemble.limit_fraction")


@dataclass
class TolerancesConfig:
    """Slack constants and convergence thresholds"""
    h_alpha: float = 8.0
    h_beta: float = 64.0
    c0: int = 16
    h1a_const: float = 16.0
    h2_const: float = 64.0
    q: int = 1
    convergence: float = 0.1
    eps_noise: float = 0.05
    tau_tolerance: float = 0.15
    level_tolerance: float = 1.1
    variational_slack: float = 0.1
    boundary_threshold: float = 0.05
    eta: float = 1.0
    saturation: float = 0.25

    def validate(self) -> None:
        """Validate tolerances: all non-negative, q a positive integer"""
        for f in fields(self):
            value = getattr(self, f.name)
            if not _is_number(value) or value < 0:
                raise ExtropyConfigError("must be a non-negative number", f"tolerances.{f.name}")
        if not _is_int(self.q) or self.q < 1:
            raise ExtropyConfigError("must be a positive integer", "tolerances.q")
        if self.level_tolerance < 1:
            raise ExtropyConfigError("must be >= 1", "tolerances.level_tolerance")
        if not 0 < self.saturation <= 1:
            raise ExtropyConfigError("must lie in (0, 1]", "tolerances.saturation")


@dataclass
class AxiomsConfig:
    """Corpus sizes for the (H1)-(H4) harness"""
    corpus_size: int = 1000
    max_word_len: int = 2048
    h4_alphabet: int = 2
    h4_max_len: int = 12
    h4_c: float = 8.0

    def validate(self) -> None:
        """Validate the axioms section"""
        if not _is_int(self.corpus_size) or self.corpus_size < 1:
            raise ExtropyConfigError("must be a positive integer", "axioms.corpus_size")
        if not _is_int(self.max_word_len) or self.max_word_len < 2:
            raise ExtropyConfigError("must be an integer >= 2", "axioms.max_word_len")
        if not _is_int(self.h4_alphabet) or self.h4_alphabet < 1:
            raise ExtropyConfigError("must be a positive integer", "axioms.h4_alphabet")
        if not _is_int(self.h4_max_len) or self.h4_max_len < 1:
            raise ExtropyConfigError("must be a positive integer", "axioms.h4_max_len")
        if not _is_number(self.h4_c):
            raise ExtropyConfigError("must be a number", "axioms.h4_c")


_SECTIONS = {
    "global": ("global_config", GlobalConfig),
    "system": ("system", SystemConfig),
    "sampler": ("sampler", SamplerConfig),
    "grids": ("grids", GridsConfig),
    "admissible": ("admissible", AdmissibleConfig),
    "backend": ("backend", BackendConfig),
    "ensemble": ("ensemble", EnsembleConfig),
    "tolerances": ("tolerances", TolerancesConfig),
    "axioms": ("axioms", AxiomsConfig),
}


@dataclass
class ExtropyConfig:
    """Complete experiment configuration with validation"""
    global_config: GlobalConfig = field(default_factory=GlobalConfig)
    system: SystemConfig = field(default_factory=SystemConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    grids: GridsConfig = field(default_factory=GridsConfig)
    admissible: AdmissibleConfig = field(default_factory=AdmissibleConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    tolerances: TolerancesConfig = field(default_factory=TolerancesConfig)
    axioms: AxiomsConfig = field(default_factory=AxiomsConfig)

    def validate(self) -> None:
        """Validate entire configuration"""
        for attr, _ in _SECTIONS.values():
            getattr(self, attr).validate()

    def to_dict(self) -> Dict[str, Any]:
        """Plain nested dictionary keyed by file section names"""
        from dataclasses import asdict
        return {name: asdict(getattr(self, attr)) for name, (attr, _) in _SECTIONS.items()}

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> 'ExtropyConfig':
        """Create validated configuration from dictionary"""
        unknown = set(config_dict) - set(_SECTIONS)
        if unknown:
            raise ExtropyConfigError(f"unknown section(s) {sorted(unknown)}", sorted(unknown)[0])

        sections = {}
        for name, (attr, section_cls) in _SECTIONS.items():
            values = config_dict.get(name) or {}
            if not isinstance(values, dict):
                raise ExtropyConfigError("section must be a mapping", name)
            known = {f.name for f in fields(section_cls)}
            extra = set(values) - known
            if extra:
                key = sorted(extra)[0]
                raise ExtropyConfigError("unknown key", f"{name}.{key}")
            sections[attr] = section_cls(**values)

        config = cls(**sections)
        config.validate()
        return config


def merge_configs(base_config: Dict[str, Any], user_overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Merge base configuration with user overrides"""
    import copy
    merged = copy.deepcopy(base_config)

    def deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> None:
        for key, value in overrides.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                deep_merge(base[key], value)
            else:
                base[key] = value

    deep_merge(merged, user_overrides)
    return merged

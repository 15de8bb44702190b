"""
Admissible window sequences and windowed spatial averages.

Windows are half-open [a_k, b_k) so |window| = b_k - a_k. The liminf
conditions on a sequence cannot be decided from finite data; ``validate``
evaluates prefix proxies over k <= K_max instead:

* cond-succ-1: widths diverge (every tail-half width exceeds every
  head-half width)
* cond-succ-2: (b_k - a_k) / max(a_k, 0) >= l_min over the tail half
* cond-succ-3: (b_k - a_k) / -min(b_k, 0) >= l_min over the tail half

A zero or negative denominator makes the ratio +inf.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DomainError, InadmissibleSequenceError
from tools.complexity import LZ78, ComplexityBackend, complexity
from tools.covering import SymbolWord, bin_indices, build_covering
from tools.lattice_systems import (
    LatticeConfiguration,
    MeasureSampler,
    restrict,
    sample_initial,
    site_values,
    translate,
)
from tools.scaling import ScalingEstimate, fit_scaling

logger = logging.getLogger(__name__)

ADMISSIBLE_KINDS = ("growing", "symmetric", "drifting", "explicit")
MIN_PREFIX = 16


@dataclass(frozen=True)
class AdmissibleSequence:
    """Interval sequence k -> [a_k, b_k), k = 1, 2, ...

    ``scale`` multiplies generator windows so large widths need only a short
    index prefix: growing is [0, s k), symmetric [-s k, s k), drifting
    [s floor(alpha k), s floor(alpha k) + s k).
    """
    kind: str
    k_max: int = 32
    alpha: float = 0.5
    scale: int = 1
    explicit: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ADMISSIBLE_KINDS:
            raise DomainError(f"unknown admissible sequence kind {self.kind!r}")
        if self.scale < 1:
            raise DomainError("scale must be a positive integer")
        if self.kind == "explicit":
            windows = tuple((int(a), int(b)) for a, b in self.explicit)
            if not windows:
                raise DomainError("explicit admissible sequence needs at least one window")
            for a, b in windows:
                if b <= a:
                    raise DomainError(f"window [{a}, {b}) has non-positive width")
            object.__setattr__(self, "explicit", windows)

    @classmethod
    def from_config(cls, section, fallback_windows: Sequence[Sequence[int]] = ()) -> "AdmissibleSequence":
        explicit = section.explicit or fallback_windows
        return cls(kind=section.kind, k_max=section.k_max, alpha=section.alpha, scale=section.scale,
                   explicit=tuple(tuple(w) for w in explicit) if section.kind == "explicit" else ())

    @property
    def length(self) -> Optional[int]:
        return len(self.explicit) if self.kind == "explicit" else None

    def bounds(self, k: int) -> Tuple[int, int]:
        if k < 1:
            raise DomainError("sequence indices start at 1")
        s = self.scale
        if self.kind == "growing":
            return (0, s * k)
        if self.kind == "symmetric":
            return (-s * k, s * k)
        if self.kind == "drifting":
            a = s * math.floor(self.alpha * k)
            return (a, a + s * k)
        if k > len(self.explicit):
            raise DomainError(f"explicit sequence has only {len(self.explicit)} windows")
        return self.explicit[k - 1]

    def default_indices(self) -> List[int]:
        if self.kind == "explicit":
            return list(range(1, len(self.explicit) + 1))
        indices = []
        k = 1
        while k <= self.k_max:
            indices.append(k)
            k *= 2
        return indices

    def windows(self, k_values: Optional[Sequence[int]] = None) -> List[Tuple[int, int]]:
        return [self.bounds(int(k)) for k in (k_values or self.default_indices())]


@dataclass
class AdmissibleReport:
    passed: bool
    prefix_length: int
    proxies: Dict[str, float]
    condition: Optional[str] = None
    witness_k: Optional[int] = None
    flags: List[str] = field(default_factory=list)

    def to_row(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "prefix_length": self.prefix_length,
            "cond_succ_1_margin": self.proxies["cond-succ-1"],
            "l_a_proxy": self.proxies["cond-succ-2"],
            "l_b_proxy": self.proxies["cond-succ-3"],
            "violated": self.condition or "",
            "witness_k": self.witness_k,
            "flags": self.flags,
        }


def _ratio(width: int, denominator: int) -> float:
    return math.inf if denominator <= 0 else width / denominator


def validate(seq: AdmissibleSequence, l_min: float, k_max: Optional[int] = None) -> AdmissibleReport:
    """Finite-prefix check of the three admissibility conditions"""
    if not l_min > 0:
        raise DomainError("l_min must be positive")
    limit = int(k_max or seq.k_max)
    flags = []
    if seq.kind == "explicit":
        if len(seq.explicit) < MIN_PREFIX:
            flags.append("short_prefix")
        limit = len(seq.explicit) if len(seq.explicit) < MIN_PREFIX else min(limit, len(seq.explicit))
    elif limit < MIN_PREFIX:
        raise DomainError(f"K_max must be at least {MIN_PREFIX}, got {limit}")

    ks = list(range(1, limit + 1))
    bounds = [seq.bounds(k) for k in ks]
    widths = [b - a for a, b in bounds]
    head = max(1, len(ks) // 2)
    tail = list(range(head, len(ks))) or [len(ks) - 1]

    head_max = max(widths[:head])
    margin = min(widths[i] for i in tail) - head_max
    ratios_a = {ks[i]: _ratio(widths[i], max(bounds[i][0], 0)) for i in tail}
    ratios_b = {ks[i]: _ratio(widths[i], -min(bounds[i][1], 0)) for i in tail}
    proxies = {
        "cond-succ-1": float(margin),
        "cond-succ-2": min(ratios_a.values()),
        "cond-succ-3": min(ratios_b.values()),
    }

    condition = witness = None
    if len(ks) > 1 and margin <= 0:
        condition = "cond-succ-1"
        witness = next(ks[i] for i in tail if widths[i] <= head_max)
    elif proxies["cond-succ-2"] < l_min:
        condition = "cond-succ-2"
        witness = min(ratios_a, key=lambda k: (ratios_a[k], k))
    elif proxies["cond-succ-3"] < l_min:
        condition = "cond-succ-3"
        witness = min(ratios_b, key=lambda k: (ratios_b[k], k))

    return AdmissibleReport(condition is None, len(ks), proxies, condition, witness, flags)


def require_admissible(seq: AdmissibleSequence, l_min: float, k_max: Optional[int] = None) -> AdmissibleReport:
    """validate, raising InadmissibleSequenceError on failure"""
    report = validate(seq, l_min, k_max)
    if not report.passed:
        raise InadmissibleSequenceError(report.condition, report.witness_k,
                                        f"proxy {report.proxies[report.condition]:.4g} on {report.prefix_length} terms")
    if report.flags:
        logger.info("admissible sequence checked on a short prefix of %d windows", report.prefix_length)
    return report


@dataclass(frozen=True)
class Observable:
    """theta acting on (zeta_j f) restricted to [0, support)"""
    fn: Callable[[LatticeConfiguration], float]
    support: int = 1
    bound: float = math.inf
    name: str = "theta"

    def __post_init__(self):
        if self.support < 1:
            raise DomainError("observable support must be at least one site")

    def __call__(self, config: LatticeConfiguration) -> float:
        value = float(self.fn(config))
        if abs(value) > self.bound:
            raise DomainError(f"{self.name} = {value} exceeds its declared bound {self.bound}")
        return value


def _first_site_value(config: LatticeConfiguration) -> float:
    return float(site_values(config, (config.lo, config.lo + 1))[0])


def site_value_observable() -> Observable:
    """Real value of the leftmost site; tapes are read to full precision"""
    return Observable(_first_site_value, 1, 1.0, "site_value")


@dataclass(frozen=True)
class _Constant:
    value: float

    def __call__(self, config: LatticeConfiguration) -> float:
        return self.value


def constant_observable(value: float) -> Observable:
    return Observable(_Constant(float(value)), 1, abs(float(value)), "constant")


@dataclass(frozen=True)
class _WindowComplexity:
    eps: float
    support: int
    backend: ComplexityBackend

    def __call__(self, config: LatticeConfiguration) -> float:
        covering = build_covering((0, self.support), self.eps)
        bins = bin_indices(config, covering)
        return complexity(SymbolWord(tuple(int(b) for b in bins), covering.bins_per_site), self.backend)


def window_complexity_observable(eps: float, support: int = 4, backend: ComplexityBackend = LZ78) -> Observable:
    """K of the per-site bin word of [0, support); bounded by a function of support alone"""
    bins = build_covering((0, support), eps).bins_per_site
    bound = float(support * (math.ceil(math.log2(max(bins, 2))) + math.ceil(math.log2(support + 1)) + 1))
    return Observable(_WindowComplexity(eps, support, backend), support, bound, "window_complexity")


@dataclass
class OrbitSource:
    """One sampled configuration seen through its space translates zeta_j f"""
    config: LatticeConfiguration

    @classmethod
    def sample(cls, sampler: MeasureSampler, lo: int, hi: int) -> "OrbitSource":
        return cls(sample_initial(sampler, (lo, hi)))

    @classmethod
    def for_sequence(cls, sampler: MeasureSampler, seq: AdmissibleSequence, k_grid: Sequence[int],
                     support: int = 1) -> "OrbitSource":
        windows = seq.windows(k_grid)
        lo = min(a for a, _ in windows)
        hi = max(b for _, b in windows) + support
        return cls.sample(sampler, lo, hi)

    def positions(self, support: int) -> range:
        return range(self.config.lo, self.config.hi - support + 1)

    def shifted(self, j: int, support: int) -> LatticeConfiguration:
        """(zeta_j f) restricted to [0, support)"""
        if j < self.config.lo or j + support > self.config.hi:
            raise DomainError(f"translate by {j} leaves the sampled range {self.config.window}")
        return translate(restrict(self.config, (j, j + support)), j)

    def evaluate(self, observable: Observable, lo: int, hi: int) -> np.ndarray:
        return np.array([observable(self.shifted(j, observable.support)) for j in range(lo, hi)])

    def space_average(self, observable: Observable) -> float:
        span = self.positions(observable.support)
        return float(np.mean(self.evaluate(observable, span.start, span.stop)))


def _checked_windows(seq: AdmissibleSequence, k_grid: Sequence[int]) -> List[Tuple[int, int, int]]:
    ks = sorted(int(k) for k in k_grid)
    windows = [(k, *seq.bounds(k)) for k in ks]
    widths = [b - a for _, a, b in windows]
    if any(w2 <= w1 for w1, w2 in zip(widths, widths[1:])):
        raise DomainError("k_grid must select windows of strictly increasing width")
    return windows


def windowed_average(observable: Observable, source: OrbitSource, seq: AdmissibleSequence,
                     k_grid: Sequence[int], l_min: float = 0.1,
                     reference: Optional[float] = None) -> ScalingEstimate:
    """Means of theta(zeta_j f) over j in [a_k, b_k), fitted as a level over the tail half.

    The deviation diagnostic compares the largest window with ``reference``
    (the source's space average when not given). Integrability of theta
    under the sampler is assumed, not verified.
    """
    require_admissible(seq, l_min)
    windows = _checked_windows(seq, k_grid)
    lo = min(a for _, a, _ in windows)
    hi = max(b for _, _, b in windows)
    values = source.evaluate(observable, lo, hi)
    prefix = np.concatenate([[0.0], np.cumsum(values)])

    samples = []
    for _, a, b in windows:
        samples.append((b - a, float((prefix[b - lo] - prefix[a - lo]) / (b - a))))
    if reference is None:
        reference = source.space_average(observable)
    estimate = fit_scaling(samples, "level", diagnostics={
        "windows": [(a, b) for _, a, b in windows],
        "space_average": reference,
        "deviation": abs(samples[-1][1] - reference),
    })
    estimate.flags.append("integrability-assumed")
    return estimate


@dataclass
class BoundaryReport:
    ratios: List[Tuple[int, float]]
    max_tail_ratio: float
    threshold: float
    passed: bool
    exceedances: int
    exceedance_range: int

    def to_row(self) -> Dict[str, Any]:
        return {
            "max_tail_ratio": self.max_tail_ratio,
            "threshold": self.threshold,
            "passed": self.passed,
            "exceedances": self.exceedances,
            "exceedance_range": self.exceedance_range,
        }


def boundary_term_check(xi: Observable, source: OrbitSource, seq: AdmissibleSequence, k_grid: Sequence[int],
                        threshold: float = 0.05, eta: float = 1.0) -> BoundaryReport:
    """xi(zeta_{b_k} f) / (b_k - a_k) over the tail half of k_grid, plus the count of
    positions j >= 1 with xi(zeta_j f) / j > eta"""
    windows = _checked_windows(seq, k_grid)
    ratios = []
    for k, a, b in windows:
        value = xi(source.shifted(b, xi.support))
        if value < 0:
            raise DomainError(f"{xi.name} must be non-negative, got {value}")
        ratios.append((k, value / (b - a)))
    tail = ratios[len(ratios) // 2:]
    worst = max(r for _, r in tail)

    top = min(max(b for _, _, b in windows), source.config.hi - xi.support)
    start = max(1, source.config.lo)
    exceedances = 0
    if top >= start:
        values = source.evaluate(xi, start, top + 1)
        positions = np.arange(start, top + 1)
        exceedances = int(np.sum(values / positions > eta))
    return BoundaryReport(ratios, worst, threshold, worst < threshold, exceedances, max(0, top - start + 1))


@dataclass(frozen=True)
class PartitionLabel:
    k: int
    a: int
    b: int
    group: str
    signs: str

    @property
    def label(self) -> str:
        return f"{self.group}({self.signs})"


def index_partition(seq: AdmissibleSequence, k_grid: Sequence[int]) -> List[PartitionLabel]:
    """Label each k by |a_k|, |b_k| against sqrt(b_k - a_k) and by the sign pattern"""
    labels = []
    for k in k_grid:
        a, b = seq.bounds(int(k))
        root = math.sqrt(b - a)
        big_a, big_b = abs(a) >= root, abs(b) >= root
        if big_a and big_b:
            group = "I1"
        elif big_a:
            group = "I2"
        elif big_b:
            group = "I3"
        else:
            group = "I4"
        if a >= 0:
            signs = "++"
        elif b > 0:
            signs = "-+"
        else:
            signs = "--"
        labels.append(PartitionLabel(int(k), a, b, group, signs))
    return labels

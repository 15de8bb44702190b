"""
Rates of orbit complexity and of distinguishable-orbit counts.

Every limit of the construction becomes a regression over a finite grid:
complexity per step is the slope of K(n) against n, complexity per site is
the slope of the per-window rate against |window|, entropies are slopes of
log2 counts. Grids, seeds and reduction order are fixed so results are
bit-stable for any worker count.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from core.async_utils import ParallelExecutor
from core.exceptions import DomainError, EnumerationGuardError
from core.utils import ceil_log2, derive_seed, relative_spread
from tools.complexity import (
    LZ78,
    TWO_PART_C0,
    ComplexityBackend,
    complexity,
    h_function,
    lz78_parse,
    two_part_code_complexity,
)
from tools.covering import (
    PRODUCT_MULTIPLICITY,
    QuantizerCovering,
    SymbolWord,
    build_covering,
    encode_orbit,
    project_word,
    tape_orbit_values,
)
from tools.ergodic import AdmissibleSequence, require_admissible
from tools.lattice_systems import (
    HaloPolicy,
    LatticeConfiguration,
    MeasureSampler,
    SystemDefinition,
    evolve,
    sample_for_orbit,
    site_values,
    trajectory,
    translate,
    window_bounds,
)
from tools.scaling import ABS_TOLERANCE, ScalingEstimate, fit_scaling, is_monotone

logger = logging.getLogger(__name__)

MEASURE_NORMALIZATION = 2.0 ** -40
TAPE_ENUMERATION_GUARD = 2 ** 20
# Names which of the backend, stored and seed codes follows.
SELECTOR_BITS = 2
# Counts reaching this fraction of the ensemble size mark the entropy as ensemble-limited.
DEFAULT_LIMIT_FRACTION = 0.5

_INLINE = ParallelExecutor(1)


def _executor(executor: Optional[ParallelExecutor]) -> ParallelExecutor:
    return executor or _INLINE


def check_grid(values: Sequence[int], name: str = "n_grid", min_points: int = 1) -> List[int]:
    grid = [int(v) for v in values]
    if len(grid) < min_points:
        raise DomainError(f"{name} needs at least {min_points} points")
    if any(v < 1 for v in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError(f"{name} must be strictly increasing positive integers")
    return grid


# -- orbit complexity ---------------------------------------------------------

def orbit_word(f: LatticeConfiguration, system: SystemDefinition, covering: QuantizerCovering,
               n: int) -> SymbolWord:
    """Coded orbit of length n; slice it to reuse one evolution for all prefixes"""
    return encode_orbit(f, system, covering, n)


def orbit_complexity(f: LatticeConfiguration, system: SystemDefinition, covering: QuantizerCovering,
                     m: int, n: int, backend: ComplexityBackend = LZ78) -> float:
    """K of the coded segment (phi_{j tau} f) for m <= j < n"""
    if not 0 <= m < n:
        raise DomainError(f"need 0 <= m < n, got m={m}, n={n}")
    return complexity(encode_orbit(f, system, covering, n, start=m), backend)


def stored_code_length(word: SymbolWord) -> int:
    """The symbols written out: ceil(|w| log2 |A|) bits"""
    if word.alphabet_cardinality < 2:
        return 0
    return math.ceil(len(word) * math.log2(word.alphabet_cardinality) - 1e-9)


def orbit_seed_bits(f: LatticeConfiguration, system: SystemDefinition, covering: QuantizerCovering,
                    n: int) -> Optional[int]:
    """Bits of initial data that fix a coded orbit segment of length n, where they are known exactly.

    The identity needs its first symbol and the doubling lattice at a dyadic
    bin width k + (n - 1) tau bits per site. An elementary CA needs the light
    cone of the window, or its whole ring under a periodic halo. Every other
    case returns None.
    """
    if covering.bins_per_site == 1 or system.kind == "identity":
        return ceil_log2(covering.alphabet_cardinality)
    sites = covering.window.size
    bins = covering.bins_per_site
    if system.kind == "bit_tape_shift" and bins & (bins - 1) == 0:
        return sites * (bins.bit_length() - 1 + (n - 1) * system.tau)
    if system.kind == "elementary_ca":
        per_cell = ceil_log2(f.alphabet)
        if f.halo.kind == "fixed_halo":
            return per_cell * (sites + 2 * system.radius * system.tau * (n - 1))
        if f.halo.kind == "periodic":
            return per_cell * f.size
    return None


def _shortest(backend_bits: float, word: SymbolWord, seed_bits: Optional[int]) -> float:
    if not len(word):
        return 0
    lengths = [backend_bits, stored_code_length(word)]
    if seed_bits is not None:
        lengths.append(seed_bits + TWO_PART_C0)
    return min(lengths) + SELECTOR_BITS


def orbit_code_length(word: SymbolWord, backend: ComplexityBackend = LZ78,
                      seed_bits: Optional[int] = None) -> float:
    """Shortest of the backend code, the stored symbols and the seed code, plus selector bits.

    The seed code is ``seed_bits`` of initial data plus the decoder constant
    c0; it is skipped when the seed is unknown.
    """
    return _shortest(complexity(word, backend), word, seed_bits)


def time_rate(f: LatticeConfiguration, system: SystemDefinition, covering: QuantizerCovering,
              backend: ComplexityBackend, n_grid: Sequence[int],
              word: Optional[SymbolWord] = None) -> ScalingEstimate:
    """Bits per step: slope of the orbit code length of the prefix of length n against n.

    The backend's own per-step values are kept in the diagnostics.
    """
    grid = check_grid(n_grid, min_points=2)
    if word is None:
        word = orbit_word(f, system, covering, grid[-1])

    def code(segment: SymbolWord) -> Tuple[float, float]:
        bits = complexity(segment, backend)
        return bits, _shortest(bits, segment, orbit_seed_bits(f, system, covering, len(segment)))

    raw, ks = zip(*(code(word.slice(0, n)) for n in grid))

    excess = []
    for (n0, k0), (n1, k1) in zip(zip(grid, ks), zip(grid[1:], ks[1:])):
        excess.append(k1 - k0 - code(word.slice(n0, n1))[1])
    diagnostics = {
        "per_step": [k / n for n, k in zip(grid, ks)],
        "backend_per_step": [k / n for n, k in zip(grid, raw)],
        "time_subadditivity_excess": max(excess) if excess else 0.0,
    }
    estimate = fit_scaling(list(zip(grid, ks)), "slope", diagnostics=diagnostics)
    if len(grid) >= 4:
        shorter = fit_scaling(list(zip(grid[:-1], ks[:-1])), "slope")
        estimate.diagnostics["rate_shift"] = abs(estimate.fitted_rate - shorter.fitted_rate)
    return estimate


def covering_infimum_rate(f: LatticeConfiguration, system: SystemDefinition, window, eps: float,
                          backend: ComplexityBackend, max_level: int, n_grid: Sequence[int],
                          tolerance: float = 1.1) -> ScalingEstimate:
    """time_rate at refinement levels 0..max_level; the reported rate is the minimum"""
    if max_level < 1:
        raise DomainError("max_level must be at least 1")
    rates = []
    residuals = []
    for level in range(max_level + 1):
        estimate = time_rate(f, system, build_covering(window, eps, level), backend, n_grid)
        rates.append(estimate.fitted_rate)
        residuals.append(estimate.residual)

    monotone = is_monotone(rates, "nonincreasing", tolerance)
    best = int(np.argmin(rates))
    return ScalingEstimate(
        samples=[(float(level), rate) for level, rate in enumerate(rates)],
        fitted_rate=float(rates[best]),
        residual=float(residuals[best]),
        monotone_flag=monotone,
        flags=[] if monotone else ["level-sequence-increasing"],
        diagnostics={"argmin_level": best, "level_rates": rates, "tolerance": tolerance},
    )


def _window_sample_rate(job: Tuple) -> float:
    sampler, system, eps, backend, window, seed, n_grid, max_level = job
    f = sample_for_orbit(replace(sampler, seed=seed), system, window, n_grid[-1])
    if max_level:
        return covering_infimum_rate(f, system, window, eps, backend, max_level, n_grid).fitted_rate
    return time_rate(f, system, build_covering(window, eps), backend, n_grid).fitted_rate


def volume_rate(sampler: MeasureSampler, system: SystemDefinition, eps: float, backend: ComplexityBackend,
                admissible_seq: AdmissibleSequence, samples: int, n_grid: Sequence[int],
                k_values: Optional[Sequence[int]] = None, max_level: int = 1, l_min: float = 0.1,
                executor: Optional[ParallelExecutor] = None) -> ScalingEstimate:
    """Bits per step per site along an admissible window sequence.

    Each window gets the mean covering infimum over levels 0..max_level
    (the plain time rate when max_level is 0) over ``samples`` draws from
    the sampler; the fitted slope of that mean against |window| is the
    rate. A negative slope is reported as 0 and flagged.
    """
    if samples < 1:
        raise DomainError("samples must be positive")
    grid = check_grid(n_grid, min_points=2)
    require_admissible(admissible_seq, l_min)
    windows = admissible_seq.windows(k_values)
    sizes = [hi - lo for lo, hi in windows]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DomainError("volume fits need strictly increasing window sizes")

    jobs = [(sampler, system, eps, backend, window, derive_seed(sampler.seed, window[0], window[1], i),
             tuple(grid), max_level)
            for window in windows for i in range(samples)]
    rates = _executor(executor).map(_window_sample_rate, jobs)

    means, stderrs = [], []
    for w in range(len(windows)):
        chunk = np.asarray(rates[w * samples:(w + 1) * samples], dtype=float)
        means.append(float(np.mean(chunk)))
        stderrs.append(float(np.std(chunk, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0)

    diagnostics = {
        "windows": windows,
        "window_rates": means,
        "per_site": [m / s for m, s in zip(means, sizes)],
        "stderr": stderrs,
    }
    if len(windows) == 1:
        return fit_scaling([(sizes[0], means[0] / sizes[0])], "level", diagnostics=diagnostics)
    estimate = fit_scaling(list(zip(sizes, means)), "slope", diagnostics=diagnostics)
    if estimate.fitted_rate < 0:
        logger.warning("window rates fall with window size (slope %.4g); reporting 0", estimate.fitted_rate)
        estimate.diagnostics["unclamped_rate"] = estimate.fitted_rate
        estimate.fitted_rate = 0.0
        estimate.flags.append("negative-slope-clamped")
    return estimate


@dataclass
class EpsilonScan:
    table: List[Tuple[float, ScalingEstimate]]
    monotone_flag: bool
    k_mu: float
    converged: bool

    @property
    def values(self) -> List[float]:
        return [estimate.fitted_rate for _, estimate in self.table]


def epsilon_scan(sampler: MeasureSampler, system: SystemDefinition, backend: ComplexityBackend,
                 eps_grid: Sequence[float], admissible_seq: AdmissibleSequence, samples: int,
                 n_grid: Sequence[int], k_values: Optional[Sequence[int]] = None, noise: float = 0.05,
                 convergence: float = 0.1, l_min: float = 0.1, max_level: int = 1,
                 executor: Optional[ParallelExecutor] = None) -> EpsilonScan:
    """eps -> volume rate, with a non-decreasing-as-eps-shrinks check"""
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid or any(e <= 0 for e in eps_grid) or any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise DomainError("eps_grid must be strictly decreasing positive values")
    table = [(eps, volume_rate(sampler, system, eps, backend, admissible_seq, samples, n_grid, k_values,
                               max_level=max_level, l_min=l_min, executor=executor))
             for eps in eps_grid]
    values = [estimate.fitted_rate for _, estimate in table]
    last = values[-1]
    if len(values) < 2:
        converged = False
    elif last == 0:
        converged = values[-2] == 0
    else:
        converged = abs(last - values[-2]) / abs(last) < convergence
    return EpsilonScan(table, is_monotone(values, "nondecreasing", noise), last, converged)


@dataclass
class TauReport:
    rates: Dict[int, float]
    ratios: Dict[int, float]
    spread: float
    passed: bool


def _tau_rate(job: Tuple) -> float:
    sampler, system, eps, backend, window, seed, n_grid = job
    return _window_sample_rate((sampler, system, eps, backend, window, seed, n_grid, 0))


def tau_invariance(sampler: MeasureSampler, system: SystemDefinition, eps: float, backend: ComplexityBackend,
                   tau_list: Sequence[int], window, n_grid: Sequence[int], samples: int = 1,
                   tolerance: float = 0.15, executor: Optional[ParallelExecutor] = None) -> TauReport:
    """Rates at several tau divided by tau; pass if they agree pairwise within tolerance"""
    taus = check_grid(tau_list, "tau_list", min_points=2)
    grid = tuple(check_grid(n_grid, min_points=2))
    lo, hi = window_bounds(window)
    jobs = [(sampler, system.with_tau(tau), eps, backend, (lo, hi), derive_seed(sampler.seed, lo, hi, i), grid)
            for tau in taus for i in range(samples)]
    rates = _executor(executor).map(_tau_rate, jobs)
    per_tau = {tau: float(np.mean(rates[j * samples:(j + 1) * samples])) for j, tau in enumerate(taus)}
    ratios = {tau: rate / tau for tau, rate in per_tau.items()}
    spread = relative_spread(ratios.values())
    return TauReport(per_tau, ratios, spread, spread <= tolerance)


# -- distinguishable orbits and entropy ----------------------------------------

class DistinguishableCount(NamedTuple):
    n_lower: int
    sigma_upper: int


def tape_precision(eps: float) -> int:
    """Bits k with 2^-k <= eps < 2^-(k-1)"""
    return max(1, math.ceil(math.log2(1.0 / eps) - 1e-9))


def _is_dyadic(eps: float) -> bool:
    return 0 < eps <= 1 and 2.0 ** -tape_precision(eps) == eps


def _orbit_tensor(ensemble: Sequence[LatticeConfiguration], system: SystemDefinition, window, n: int,
                  precision: int) -> np.ndarray:
    """Site values along each orbit, shape (M, n, sites)"""
    lo, hi = window_bounds(window)
    rows = []
    for config in ensemble:
        if config.kind == "tape" and system.precision_cap is not None:
            config = replace(config, precision_cap=system.precision_cap)
        values = None
        if system.kind == "identity":
            values = np.tile(site_values(config, (lo, hi), precision), (n, 1))
        elif system.kind == "bit_tape_shift":
            offsets = config.offset + system.tau * np.arange(n)
            values = tape_orbit_values(config, (lo, hi), offsets, precision)
        if values is None:
            values = np.stack([site_values(state, (lo, hi), precision)
                               for state in trajectory(config, system, n)])
        rows.append(values)
    return np.stack(rows)


def _grid_step(ensemble: Sequence[LatticeConfiguration], precision: int) -> float:
    """Smallest non-zero per-site distance the representation allows (0 for reals)"""
    kind = ensemble[0].kind
    if kind == "tape":
        return 2.0 ** -precision
    if kind == "cell":
        return 1.0 / max(1, ensemble[0].alphabet - 1)
    return 0.0


def greedy_separated(points: np.ndarray, eps: float, grid_step: float = 0.0) -> List[int]:
    """Indices of a greedy maximal set whose pairwise sup distance is >= eps.

    Scans in input order. When every non-zero distance is at least
    ``grid_step >= eps`` separation means distinctness, so first
    occurrences of distinct rows are returned.
    """
    flat = points.reshape(points.shape[0], -1)
    if flat.shape[0] == 0:
        return []
    if grid_step and grid_step >= eps:
        _, first = np.unique(flat, axis=0, return_index=True)
        return sorted(int(i) for i in first)

    centers = np.empty_like(flat)
    chosen = [0]
    centers[0] = flat[0]
    for i in range(1, flat.shape[0]):
        distances = np.max(np.abs(centers[:len(chosen)] - flat[i]), axis=1)
        if np.all(distances >= eps):
            centers[len(chosen)] = flat[i]
            chosen.append(i)
    return chosen


def _count_from_tensors(tensor: np.ndarray, fine: np.ndarray, eps: float, step: float, fine_step: float,
                        n: int) -> DistinguishableCount:
    n_lower = 1 if eps >= 1.0 else len(greedy_separated(tensor[:, :n], eps, step))
    sigma = 1 if eps / 4 >= 1.0 else len(greedy_separated(fine[:, :n], eps / 4, fine_step))
    return DistinguishableCount(n_lower, sigma)


def count_distinguishable(ensemble: Sequence[LatticeConfiguration], system: SystemDefinition, window, n: int,
                          eps: float) -> DistinguishableCount:
    """Greedy (window, n, eps)-distinguishable count and greedy eps/4 spanning count.

    Two orbits are distinguishable when their windowed distance reaches eps
    at some t < n. eps at or above the state-space diameter (1) gives a
    single class. Tapes are read at ceil(log2 1/eps) bits.
    """
    if len(ensemble) < 2:
        raise DomainError("count_distinguishable needs an ensemble of at least 2 configurations")
    if not eps > 0 or n < 1:
        raise DomainError("eps must be positive and n at least 1")
    precision, fine_precision = tape_precision(min(eps, 1.0)), tape_precision(min(eps / 4, 1.0))
    tensor = _orbit_tensor(ensemble, system, window, n, precision)
    fine = tensor if fine_precision == precision else _orbit_tensor(ensemble, system, window, n, fine_precision)
    return _count_from_tensors(tensor, fine, eps, _grid_step(ensemble, precision),
                               _grid_step(ensemble, fine_precision), n)


def exact_tape_count(sites: int, k: int, n: int, tau: int = 1) -> int:
    """Distinguishable orbits of the doubling lattice at eps = 2^-k: 2^(L (k + (n-1) tau))"""
    if sites < 1 or k < 1 or n < 1 or tau < 1:
        raise DomainError("sites, k, n and tau must be positive")
    return 2 ** (sites * (k + (n - 1) * tau))


def enumerate_tape_prefixes(sites: int, k: int, n: int, tau: int = 1, pad: int = 2,
                            guard: int = TAPE_ENUMERATION_GUARD) -> List[LatticeConfiguration]:
    """Every tape whose first k + (n-1) tau bits per site differ, zero-padded by ``pad`` bits"""
    depth = k + (n - 1) * tau
    total = sites * depth
    if 2 ** total > guard:
        raise EnumerationGuardError(2 ** total, guard)
    patterns = np.arange(2 ** total, dtype=np.int64)
    shifts = np.arange(total - 1, -1, -1, dtype=np.int64)
    bits = ((patterns[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1, sites, depth)
    bits = np.concatenate([bits, np.zeros((bits.shape[0], sites, pad), dtype=np.uint8)], axis=2)
    return [LatticeConfiguration(0, sites, "tape", tape, HaloPolicy("periodic")) for tape in bits]


@dataclass
class CountRecord:
    eps: float
    window: Tuple[int, int]
    n: int
    n_lower: int
    sigma_upper: int
    saturated: bool

    @property
    def log2_n_lower(self) -> float:
        return math.log2(self.n_lower)


@dataclass
class EntropyEstimate:
    counts: List[CountRecord]
    h_lambda: List[Tuple[float, int, float]]
    per_volume: Dict[float, ScalingEstimate]
    htop_trend: List[Tuple[float, float]]
    h_top: float
    monotone_flag: bool
    exact: bool
    flags: List[str] = field(default_factory=list)

    @property
    def lower_bound(self) -> bool:
        return "ensemble-limited" in self.flags

    def h_eps(self, eps: float) -> float:
        for e, h in self.htop_trend:
            if e == eps:
                return h
        raise KeyError(eps)


def sample_ensemble(sampler: MeasureSampler, system: SystemDefinition, window, n: int,
                    size: int) -> List[LatticeConfiguration]:
    """``size`` independent draws observable on ``window`` for n steps"""
    lo, hi = window_bounds(window)
    return [sample_for_orbit(replace(sampler, seed=derive_seed(sampler.seed, lo, hi, i)), system, (lo, hi), n)
            for i in range(size)]


def _sampled_window_counts(job: Tuple) -> List[CountRecord]:
    sampler, system, eps, window, n_grid, size, fraction = job
    ensemble = sample_ensemble(sampler, system, window, n_grid[-1], size)
    precision, fine_precision = tape_precision(min(eps, 1.0)), tape_precision(min(eps / 4, 1.0))
    tensor = _orbit_tensor(ensemble, system, window, n_grid[-1], precision)
    fine = tensor if fine_precision == precision else _orbit_tensor(ensemble, system, window, n_grid[-1],
                                                                    fine_precision)
    step, fine_step = _grid_step(ensemble, precision), _grid_step(ensemble, fine_precision)
    records = []
    for n in n_grid:
        count = _count_from_tensors(tensor, fine, eps, step, fine_step, n)
        limited = max(count.n_lower, count.sigma_upper) >= fraction * size
        records.append(CountRecord(eps, window, n, count.n_lower, count.sigma_upper, limited))
    return records


def _exact_window_counts(system: SystemDefinition, eps: float, window: Tuple[int, int],
                         n_grid: Sequence[int]) -> List[CountRecord]:
    sites = window[1] - window[0]
    k = tape_precision(eps)
    if system.precision_cap is not None:
        k = min(k, system.precision_cap)
    fine_k = k + 2 if system.precision_cap is None else min(k + 2, system.precision_cap)
    return [CountRecord(eps, window, n, exact_tape_count(sites, k, n, system.tau),
                        exact_tape_count(sites, fine_k, n, system.tau), False)
            for n in n_grid]


def entropy_pipeline(sampler: MeasureSampler, system: SystemDefinition, eps: Union[float, Sequence[float]],
                     window_list: Sequence, n_grid: Sequence[int], ensemble_size: int, noise: float = 0.05,
                     exact: Optional[bool] = None, limit_fraction: float = DEFAULT_LIMIT_FRACTION,
                     executor: Optional[ParallelExecutor] = None) -> EntropyEstimate:
    """Entropy per step (slope of log2 N in n) and per site (slope in |window|).

    The doubling lattice at dyadic eps uses the closed-form count unless
    ``exact`` is False; every other case counts greedily on a sampled
    ensemble and flags it ensemble-limited once N or sigma reaches
    ``limit_fraction`` of the ensemble size.
    """
    eps_list = [float(eps)] if isinstance(eps, (int, float)) else [float(e) for e in eps]
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps values must be positive and strictly decreasing")
    grid = check_grid(n_grid, min_points=2)
    windows = [window_bounds(w) for w in window_list]
    sizes = [hi - lo for lo, hi in windows]
    if not windows or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DomainError("window_list must be non-empty with strictly increasing sizes")
    if ensemble_size < 2:
        raise DomainError("ensemble size must be at least 2")
    if not 0 < limit_fraction <= 1:
        raise DomainError(f"limit_fraction must lie in (0, 1], got {limit_fraction}")

    use_exact = system.kind == "bit_tape_shift" and all(_is_dyadic(e) for e in eps_list)
    if exact is not None:
        use_exact = use_exact and exact

    counts: List[CountRecord] = []
    if use_exact:
        for e in eps_list:
            for window in windows:
                counts.extend(_exact_window_counts(system, e, window, grid))
    else:
        jobs = [(sampler, system, e, window, tuple(grid), ensemble_size, limit_fraction)
                for e in eps_list for window in windows]
        for records in _executor(executor).map(_sampled_window_counts, jobs):
            counts.extend(records)

    h_lambda = []
    per_volume = {}
    trend = []
    for e in eps_list:
        rates = []
        for window, size in zip(windows, sizes):
            points = [(c.n, c.log2_n_lower) for c in counts if c.eps == e and c.window == window]
            rate = fit_scaling(points, "slope").fitted_rate
            h_lambda.append((e, size, rate))
            rates.append(rate)
        if len(windows) == 1:
            volume = fit_scaling([(sizes[0], rates[0] / sizes[0])], "level")
        else:
            volume = fit_scaling(list(zip(sizes, rates)), "slope")
        per_volume[e] = volume
        trend.append((e, volume.fitted_rate))

    flags = []
    if any(c.saturated for c in counts):
        flags.append("ensemble-limited")
        logger.info("counts reach %.2f of ensemble size %d; entropy is a lower bound",
                    limit_fraction, ensemble_size)
    values = [h for _, h in trend]
    return EntropyEstimate(counts, h_lambda, per_volume, trend, values[-1],
                           is_monotone(values, "nondecreasing", noise), use_exact, flags)


@dataclass
class VariationalGap:
    mean_k_rate: float
    entropy_rate_quarter_eps: float
    gap: float
    direction_holds: bool
    flags: List[str] = field(default_factory=list)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.mean_k_rate, self.entropy_rate_quarter_eps, self.gap)


def _sample_site_rate(job: Tuple) -> float:
    sampler, system, eps, backend, window, seed, n_grid = job
    lo, hi = window
    return _window_sample_rate((sampler, system, eps, backend, window, seed, n_grid, 0)) / (hi - lo)


def variational_gap(sampler: MeasureSampler, system: SystemDefinition, eps: float, window, n: int,
                    ensemble_size: int, backend: ComplexityBackend = LZ78, samples: int = 4,
                    count_n_grid: Sequence[int] = (1, 2, 3, 4), slack: float = 0.1,
                    limit_fraction: float = DEFAULT_LIMIT_FRACTION,
                    executor: Optional[ParallelExecutor] = None) -> VariationalGap:
    """Mean shortest-code rate per site at eps against the entropy rate at eps/4.

    gap = entropy_rate - mean_k_rate; the direction holds when
    mean_k_rate - entropy_rate <= slack * entropy_rate, up to ABS_TOLERANCE.
    """
    lo, hi = window_bounds(window)
    grid = tuple(sorted({max(1, n // 8), max(1, n // 4), max(1, n // 2), n}))
    if len(grid) < 2:
        raise DomainError("n must be at least 2")
    jobs = [(sampler, system, eps, backend, (lo, hi), derive_seed(sampler.seed, lo, hi, i), grid)
            for i in range(samples)]
    mean_k = float(np.mean(_executor(executor).map(_sample_site_rate, jobs)))

    entropy = entropy_pipeline(sampler, system, eps / 4, [(lo, hi)], count_n_grid, ensemble_size,
                               limit_fraction=limit_fraction, executor=executor)
    rate = entropy.h_top
    gap = rate - mean_k
    holds = mean_k - rate <= slack * rate + ABS_TOLERANCE
    return VariationalGap(mean_k, rate, gap, holds, list(entropy.flags))


# -- empirical measures --------------------------------------------------------

@dataclass
class EmpiricalMeasure:
    atoms: List[LatticeConfiguration]
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.atoms) == 0 or len(self.atoms) != len(weights):
            raise DomainError("a measure needs one weight per atom and at least one atom")
        if np.any(weights < 0):
            raise DomainError("weights must be non-negative")
        if abs(float(np.sum(weights)) - 1.0) > MEASURE_NORMALIZATION:
            raise DomainError(f"weights sum to {float(np.sum(weights))!r}, not 1")
        windows = {atom.window for atom in self.atoms}
        if len(windows) != 1:
            raise DomainError(f"atoms live on different windows: {sorted(windows)}")
        self.weights = weights

    @property
    def window(self) -> Tuple[int, int]:
        return self.atoms[0].window

    def __len__(self) -> int:
        return len(self.atoms)


def build_empirical_measure(system: SystemDefinition, window, n: int, eps: float,
                            ensemble: Sequence[LatticeConfiguration]) -> EmpiricalMeasure:
    """Uniform weights on a greedy maximal (window, n, eps)-separated subset"""
    if len(ensemble) < 1:
        raise DomainError("empty ensemble")
    if eps >= 1.0:
        chosen = [0]
    else:
        precision = tape_precision(eps)
        tensor = _orbit_tensor(ensemble, system, window, n, precision)
        chosen = greedy_separated(tensor, eps, _grid_step(ensemble, precision))
    atoms = [ensemble[i] for i in chosen]
    return EmpiricalMeasure(atoms, np.full(len(atoms), 1.0 / len(atoms)))


def time_space_average(measure: EmpiricalMeasure, system: SystemDefinition, t_range: Sequence[int],
                       x_range: Sequence[int]) -> EmpiricalMeasure:
    """Push atoms forward under phi_i and zeta_y with equal weights over the ranges"""
    t_values, x_values = list(t_range), list(x_range)
    if not t_values or not x_values:
        raise DomainError("time and space ranges must be non-empty")
    if any(atom.halo.kind != "periodic" for atom in measure.atoms):
        raise DomainError("space averaging needs periodic atoms so every image shares the window")
    share = 1.0 / (len(t_values) * len(x_values))
    atoms, weights = [], []
    for atom, weight in zip(measure.atoms, measure.weights):
        for t in t_values:
            moved = evolve(atom, system, t)
            for y in x_values:
                atoms.append(translate(moved, y))
                weights.append(weight * share)
    return EmpiricalMeasure(atoms, np.asarray(weights))


def measure_complexity(measure: EmpiricalMeasure, system: SystemDefinition, covering: QuantizerCovering,
                       backend: ComplexityBackend, n: int) -> float:
    """Weighted mean of K(n)/n over the atoms, per site"""
    if n < 1:
        raise DomainError("n must be positive")
    total = 0.0
    for atom, weight in zip(measure.atoms, measure.weights):
        total += weight * complexity(encode_orbit(atom, system, covering, n), backend) / n
    return total / covering.window.size


# -- supplementary bounds and trials ----------------------------------------

def resample_word(word: SymbolWord, tau: int, tau_prime: int) -> SymbolWord:
    """Word for sampling interval tau' rebuilt from a tau-coded word: j = floor(j' tau' / tau)"""
    if tau < 1 or tau_prime < 1:
        raise DomainError("tau values must be positive")
    n = len(word)
    picked = []
    j_prime = 0
    while True:
        j = (j_prime * tau_prime) // tau
        if j >= n:
            break
        picked.append(word.symbols[j])
        j_prime += 1
    return SymbolWord(tuple(picked), word.alphabet_cardinality)


def tau_reconstruction_bound(word: SymbolWord, tau: int, tau_prime: int, backend: ComplexityBackend = LZ78,
                             const: float = 16.0) -> Dict[str, Any]:
    """K(resampled) <= K(word) + n' tau'/tau + const"""
    resampled = resample_word(word, tau, tau_prime)
    lhs = complexity(resampled, backend)
    rhs = complexity(word, backend) + len(resampled) * tau_prime / tau + const
    return {"n_prime": len(resampled), "lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}


@dataclass
class SpanningBound:
    sigma: int
    distinct_words: int
    two_part_rate: float
    mean_backend_rate: float


def spanning_code_bound(system: SystemDefinition, window, n: int, eps: float,
                        ensemble: Sequence[LatticeConfiguration], backend: ComplexityBackend = LZ78,
                        c0: int = 16) -> SpanningBound:
    """Two-part-code rate (log2 sigma + log2 n + c0)/n over eps/4 spanning representatives"""
    fine = tape_precision(min(eps / 4, 1.0))
    tensor = _orbit_tensor(ensemble, system, window, n, fine)
    representatives = [ensemble[i] for i in greedy_separated(tensor, eps / 4, _grid_step(ensemble, fine))]
    covering = build_covering(window, eps)
    words = [encode_orbit(rep, system, covering, n) for rep in representatives]
    listed = list({w.symbols: w for w in words}.values())
    two_part = two_part_code_complexity(words[0], listed, n, c0)
    mean_backend = float(np.mean([complexity(w, backend) for w in words])) / n
    return SpanningBound(len(representatives), len(listed), two_part / n, mean_backend)


@dataclass
class SubadditivityReport:
    trials: int
    time_pass_ratio: float
    space_pass_ratio: Optional[float]
    time_worst_excess: float
    space_worst_excess: Optional[float]


def subadditivity_trials(sampler: MeasureSampler, system: SystemDefinition, eps: float, window,
                         backend: ComplexityBackend = LZ78, trials: int = 100, n_range: Tuple[int, int] = (32, 256),
                         alpha: float = 8.0, beta: float = 64.0, q: int = PRODUCT_MULTIPLICITY,
                         seed: int = 0) -> SubadditivityReport:
    """Randomised time and space sub-additivity checks.

    Time: K(0, n+m) <= K(0, n) + K(n, n+m) + h(n) + h(m).
    Space (windows of two or more sites, split at a random site): the rate on
    the union is at most the sum of factor rates + log2 q + (2 h(N) + p c)/N,
    where p is the phrase count on the union and c the bits per union symbol.
    """
    lo, hi = window_bounds(window)
    h = h_function(alpha, beta)
    covering = build_covering((lo, hi), eps)
    time_ok = space_ok = 0
    space_runs = 0
    time_worst = -math.inf
    space_worst = -math.inf
    for i in range(trials):
        rng = np.random.default_rng(derive_seed(seed, i))
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = int(rng.integers(n_range[0], n_range[1] + 1))
        f = sample_for_orbit(replace(sampler, seed=derive_seed(sampler.seed, i)), system, (lo, hi), n + m)
        word = orbit_word(f, system, covering, n + m)

        excess = (complexity(word, backend) - complexity(word.slice(0, n), backend)
                  - complexity(word.slice(n), backend) - h(n) - h(m))
        time_worst = max(time_worst, excess)
        time_ok += excess <= 0

        if hi - lo >= 2:
            split = int(rng.integers(lo + 1, hi))
            total = n + m
            left = project_word(word, covering, build_covering((lo, split), eps))
            right = project_word(word, covering, build_covering((split, hi), eps))
            symbol_cost = lz78_parse(word.symbols).phrase_count * ceil_log2(covering.alphabet_cardinality)
            rate_excess = (complexity(word, backend) - complexity(left, backend) - complexity(right, backend)
                           - symbol_cost - 2 * h(total)) / total - math.log2(q)
            space_worst = max(space_worst, rate_excess)
            space_ok += rate_excess <= 0
            space_runs += 1

    return SubadditivityReport(
        trials,
        time_ok / trials if trials else 1.0,
        space_ok / space_runs if space_runs else None,
        time_worst,
        space_worst if space_runs else None,
    )

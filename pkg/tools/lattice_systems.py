"""
Extended dynamical systems on the integer lattice.

A configuration is the restriction of an extended state to a finite window
[lo, hi) together with the halo policy that says what lies outside it.
Time evolution (``evolve``) and space translation (``translate``) act on
configurations; ``sup_distance`` is the windowed sup metric.

Three site representations are supported:

* ``value``: reals in [0, 1] (tent and logistic map lattices)
* ``cell``: symbols of a finite alphabet (elementary cellular automata)
* ``tape``: fair-bit tapes read from a shared offset (the doubling lattice,
  realised as a shift so no precision is lost in floating point)
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from core.exceptions import DomainError, InsufficientHaloError, WindowMismatchError
from core.utils import fit_line, site_rng, zigzag

logger = logging.getLogger(__name__)

SYSTEM_KINDS = ("identity", "bit_tape_shift", "tent_lattice", "logistic_cml", "elementary_ca")
HALO_KINDS = ("periodic", "iid_refresh", "fixed_halo")
STATE_KINDS = ("value", "cell", "tape")

# Tape values are read through this many bits unless a precision is given.
DEFAULT_TAPE_PRECISION = 48
VALUE_RESOLUTION_BITS = 52

# Separation fits stop once a distance reaches this fraction of the diameter.
DEFAULT_SATURATION = 0.25
MIN_SEPARATION_TRIALS = 8


def window_bounds(window) -> Tuple[int, int]:
    """(lo, hi) from a tuple/list or any object with lo/hi attributes"""
    if hasattr(window, "lo") and hasattr(window, "hi"):
        lo, hi = window.lo, window.hi
    else:
        lo, hi = window
    lo, hi = int(lo), int(hi)
    if lo >= hi:
        raise DomainError(f"empty window [{lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class HaloPolicy:
    """What the configuration knows about sites outside its window.

    ``origin`` accumulates translations so that ``iid_refresh`` draws depend
    only on the absolute site, which keeps them translation-covariant.
    """
    kind: str = "periodic"
    width: int = 0
    seed: int = 0
    origin: int = 0
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in HALO_KINDS:
            raise DomainError(f"unknown halo policy {self.kind!r}")
        if self.width < 0:
            raise DomainError("halo width must be non-negative")

    @property
    def translation_consistent(self) -> bool:
        return self.kind in ("periodic", "iid_refresh")


@dataclass(frozen=True, eq=False)
class LatticeConfiguration:
    """Restriction f|_[lo, hi) of an extended state"""
    lo: int
    hi: int
    kind: str
    data: np.ndarray
    halo: HaloPolicy = field(default_factory=HaloPolicy)
    offset: int = 0
    time: int = 0
    alphabet: int = 2
    precision_cap: Optional[int] = None

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise DomainError(f"unknown site representation {self.kind!r}")
        if self.lo >= self.hi:
            raise DomainError(f"empty window [{self.lo}, {self.hi})")
        size = self.hi - self.lo

        if self.kind == "value":
            data = np.array(self.data, dtype=np.float64)
            if data.shape != (size,):
                raise DomainError(f"expected {size} site values, got shape {data.shape}")
            if np.any(data < 0.0) or np.any(data > 1.0) or np.any(np.isnan(data)):
                raise DomainError("site values must lie in [0, 1]")
        elif self.kind == "cell":
            data = np.array(self.data, dtype=np.uint8)
            if data.shape != (size,):
                raise DomainError(f"expected {size} cells, got shape {data.shape}")
            if self.alphabet < 1 or np.any(data >= self.alphabet):
                raise DomainError(f"cell symbols must lie in 0..{self.alphabet - 1}")
        else:
            data = np.array(self.data, dtype=np.uint8)
            if data.ndim != 2 or data.shape[0] != size:
                raise DomainError(f"expected a ({size}, depth) bit array, got shape {data.shape}")
            if np.any(data > 1):
                raise DomainError("tape entries must be bits")
            if self.offset < 0:
                raise DomainError("tape offset must be non-negative")

        if self.halo.kind == "fixed_halo" and 2 * self.halo.width >= size:
            raise DomainError(f"fixed halo width {self.halo.width} leaves no core in a window of {size} sites")

        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def window(self) -> Tuple[int, int]:
        return (self.lo, self.hi)

    @property
    def core_window(self) -> Tuple[int, int]:
        """Window left once a fixed halo has been consumed"""
        w = self.halo.width if self.halo.kind == "fixed_halo" else 0
        return (self.lo + w, self.hi - w)

    @property
    def tape_depth(self) -> int:
        return self.data.shape[1] if self.kind == "tape" else 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatticeConfiguration):
            return NotImplemented
        return (self.window == other.window and self.kind == other.kind
                and self.offset == other.offset and self.alphabet == other.alphabet
                and np.array_equal(self._visible(), other._visible()))

    __hash__ = None

    def _visible(self) -> np.ndarray:
        if self.kind == "tape":
            return self.data[:, self.offset:]
        return self.data


@dataclass(frozen=True)
class SystemDefinition:
    """A lattice dynamical system; ``tau`` micro-steps make one time unit"""
    kind: str
    tau: int = 1
    slope: float = 2.0
    r: float = 4.0
    coupling: float = 0.0
    rule: int = 30
    precision_cap: Optional[int] = None

    def __post_init__(self):
        if self.kind not in SYSTEM_KINDS:
            raise DomainError(f"unknown system kind {self.kind!r}")
        if int(self.tau) != self.tau or self.tau < 1:
            raise DomainError("tau must be a positive integer")
        if not 0.0 <= self.coupling <= 1.0:
            raise DomainError("coupling must lie in [0, 1]")
        if not 0 <= self.rule <= 255:
            raise DomainError("elementary rule must lie in 0..255")
        if self.kind == "tent_lattice" and not 0.0 < self.slope <= 2.0:
            raise DomainError("tent slope must lie in (0, 2]")
        if self.kind == "logistic_cml" and not 0.0 < self.r <= 4.0:
            raise DomainError("logistic parameter must lie in (0, 4]")

    @property
    def radius(self) -> int:
        """Interaction radius of one micro-step"""
        if self.kind == "elementary_ca":
            return 1
        if self.kind in ("tent_lattice", "logistic_cml") and self.coupling > 0.0:
            return 1
        return 0

    @property
    def state_kind(self) -> Optional[str]:
        return {"bit_tape_shift": "tape", "elementary_ca": "cell",
                "tent_lattice": "value", "logistic_cml": "value"}.get(self.kind)

    @property
    def system_id(self) -> str:
        if self.kind == "tent_lattice":
            return f"tent_lattice(slope={self.slope:g},c={self.coupling:g})"
        if self.kind == "logistic_cml":
            return f"logistic_cml(r={self.r:g},c={self.coupling:g})"
        if self.kind == "elementary_ca":
            return f"elementary_ca({self.rule})"
        if self.kind == "bit_tape_shift" and self.precision_cap is not None:
            return f"bit_tape_shift(cap={self.precision_cap})"
        return self.kind

    def with_tau(self, tau: int) -> "SystemDefinition":
        return replace(self, tau=tau)


def identity_system(tau: int = 1) -> SystemDefinition:
    return SystemDefinition("identity", tau=tau)


def bit_tape_shift(tau: int = 1, precision_cap: Optional[int] = None) -> SystemDefinition:
    return SystemDefinition("bit_tape_shift", tau=tau, precision_cap=precision_cap)


def tent_lattice(slope: float = 2.0, coupling: float = 0.0, tau: int = 1) -> SystemDefinition:
    return SystemDefinition("tent_lattice", tau=tau, slope=slope, coupling=coupling)


def logistic_cml(r: float = 4.0, coupling: float = 0.0, tau: int = 1) -> SystemDefinition:
    return SystemDefinition("logistic_cml", tau=tau, r=r, coupling=coupling)


def elementary_ca(rule: int, tau: int = 1) -> SystemDefinition:
    return SystemDefinition("elementary_ca", tau=tau, rule=rule)


def system_from_config(section) -> SystemDefinition:
    """Build a SystemDefinition from the ``system`` configuration section"""
    return SystemDefinition(kind=section.kind, tau=section.tau, slope=section.slope, r=section.r,
                            coupling=section.coupling, rule=section.rule, precision_cap=section.precision_cap)


def rule_table(rule: int) -> np.ndarray:
    """Output bit for each neighbourhood index 4*left + 2*centre + right"""
    return np.array([(rule >> i) & 1 for i in range(8)], dtype=np.uint8)


def _local_map(system: SystemDefinition, x: np.ndarray) -> np.ndarray:
    if system.kind == "tent_lattice":
        return system.slope * np.minimum(x, 1.0 - x)
    return system.r * x * (1.0 - x)


def _map_step(system: SystemDefinition, padded: np.ndarray, r: int) -> np.ndarray:
    g = _local_map(system, padded)
    if r == 0:
        out = g
    else:
        c = system.coupling
        out = (1.0 - c) * g[1:-1] + (c / 2.0) * (g[:-2] + g[2:])
    return np.clip(out, 0.0, 1.0)


def _ca_step(system: SystemDefinition, padded: np.ndarray) -> np.ndarray:
    idx = (padded[:-2].astype(np.uint16) << 2) | (padded[1:-1].astype(np.uint16) << 1) | padded[2:]
    return rule_table(system.rule)[idx]


def _refresh_halo(config: LatticeConfiguration, data: np.ndarray, lo: int, hi: int,
                  r: int, time: int) -> np.ndarray:
    """Pad data with r freshly drawn sites per side (translation-covariant draws)"""
    halo = config.halo
    sites = list(range(lo - r, lo)) + list(range(hi, hi + r))
    drawn = []
    for site in sites:
        rng = site_rng(halo.seed, site + halo.origin, time)
        if config.kind == "cell":
            drawn.append(int(rng.random() < halo.p))
        else:
            drawn.append(int(rng.integers(0, 2 ** VALUE_RESOLUTION_BITS)) / 2.0 ** VALUE_RESOLUTION_BITS)
    drawn = np.asarray(drawn, dtype=data.dtype)
    return np.concatenate([drawn[:r], data, drawn[r:]])


def _check_compatible(config: LatticeConfiguration, system: SystemDefinition) -> None:
    expected = system.state_kind
    if expected is not None and config.kind != expected:
        raise DomainError(f"{system.kind} evolves {expected} sites, configuration holds {config.kind} sites")


def evolve(config: LatticeConfiguration, system: SystemDefinition, steps: int) -> LatticeConfiguration:
    """Apply phi_{steps * tau}.

    Under ``fixed_halo`` the window shrinks by ``radius`` sites per side and
    micro-step; the returned configuration carries the shrunken window and the
    remaining halo width.
    """
    if steps < 0:
        raise DomainError("steps must be non-negative")
    if steps == 0:
        return config
    _check_compatible(config, system)

    micro = steps * system.tau
    r = system.radius
    new_time = config.time + micro

    if system.kind == "identity":
        return replace(config, time=new_time)
    if system.kind == "bit_tape_shift":
        return replace(config, offset=config.offset + micro, time=new_time)

    halo = config.halo
    if halo.kind == "fixed_halo" and r > 0:
        required = micro * r
        if halo.width < required:
            raise InsufficientHaloError(required_width=required, available_width=halo.width)

    data = np.array(config.data)
    lo, hi = config.lo, config.hi
    for step in range(micro):
        t = config.time + step
        if r == 0:
            padded = data
        elif halo.kind == "periodic":
            padded = np.pad(data, r, mode="wrap")
        elif halo.kind == "iid_refresh":
            padded = _refresh_halo(config, data, lo, hi, r, t)
        else:
            padded = data
            lo, hi = lo + r, hi - r
        if system.kind == "elementary_ca":
            data = _ca_step(system, padded)
        else:
            data = _map_step(system, padded, r)

    if (lo, hi) != config.window:
        shrink = lo - config.lo
        logger.debug("fixed halo consumed %d site(s) per side: [%d, %d) -> [%d, %d)",
                     shrink, config.lo, config.hi, lo, hi)
        halo = replace(halo, width=halo.width - shrink)
    return replace(config, lo=lo, hi=hi, data=data, halo=halo, time=new_time)


def trajectory(config: LatticeConfiguration, system: SystemDefinition, n: int) -> List[LatticeConfiguration]:
    """[phi_0 f, phi_tau f, ..., phi_{(n-1) tau} f]"""
    if n < 1:
        raise DomainError("trajectory length must be positive")
    states = [config]
    for _ in range(n - 1):
        states.append(evolve(states[-1], system, 1))
    return states


def translate(config: LatticeConfiguration, y: int, window=None) -> LatticeConfiguration:
    """Space translation (zeta_y f)(x) = f(x + y).

    The translated state lives on [lo - y, hi - y). Periodic configurations
    are mapped back onto their own ring, so (a, b, c, d) becomes (b, c, d, a)
    for y = 1. An explicit ``window`` restricts the result and must be
    covered by the available data.
    """
    y = int(y)
    if config.halo.kind == "periodic":
        data = config.data
        if y % config.size:
            data = np.roll(config.data, -y, axis=0)
        moved = replace(config, data=data)
    else:
        moved = replace(config, lo=config.lo - y, hi=config.hi - y,
                        halo=replace(config.halo, origin=config.halo.origin + y))
    if window is None:
        return moved
    lo, hi = window_bounds(window)
    if lo < moved.lo or hi > moved.hi:
        missing = max(moved.lo - lo, hi - moved.hi)
        raise InsufficientHaloError(required_width=missing, available_width=0)
    return restrict(moved, (lo, hi))


def restrict(config: LatticeConfiguration, window) -> LatticeConfiguration:
    """f restricted to a sub-window"""
    lo, hi = window_bounds(window)
    if (lo, hi) == config.window:
        return config
    if lo < config.lo or hi > config.hi:
        raise WindowMismatchError(f"window mismatch: [{lo}, {hi}) is not inside [{config.lo}, {config.hi})")
    start, stop = lo - config.lo, hi - config.lo
    halo = config.halo
    if halo.kind != "iid_refresh":
        halo = replace(halo, kind="fixed_halo", width=0)
    return replace(config, lo=lo, hi=hi, data=config.data[start:stop], halo=halo)


def site_values(config: LatticeConfiguration, window=None, precision: Optional[int] = None) -> np.ndarray:
    """Per-site reals in [0, 1]; tapes are truncated to ``precision`` bits"""
    if window is not None:
        config = restrict(config, window)
    if config.kind == "value":
        return np.asarray(config.data, dtype=np.float64)
    if config.kind == "cell":
        if config.alphabet == 1:
            return np.zeros(config.size)
        return config.data.astype(np.float64) / (config.alphabet - 1)

    k = DEFAULT_TAPE_PRECISION if precision is None else int(precision)
    if config.precision_cap is not None:
        k = min(k, config.precision_cap)
    available = config.tape_depth - config.offset
    if available < 1:
        raise DomainError(f"tape exhausted: offset {config.offset} at depth {config.tape_depth}")
    k = max(1, min(k, available))
    bits = config.data[:, config.offset:config.offset + k].astype(np.float64)
    weights = 2.0 ** -np.arange(1, k + 1)
    return bits @ weights


def sup_distance(c1: LatticeConfiguration, c2: LatticeConfiguration, window=None,
                 precision: Optional[int] = None) -> float:
    """d|_window: max over sites of the per-site distance"""
    if c1.kind != c2.kind:
        raise WindowMismatchError(f"window mismatch: cannot compare {c1.kind} sites with {c2.kind} sites")
    if window is None:
        if c1.window != c2.window:
            raise WindowMismatchError(f"window mismatch: {c1.window} vs {c2.window}")
        window = c1.window
    lo, hi = window_bounds(window)
    for c in (c1, c2):
        if lo < c.lo or hi > c.hi:
            raise WindowMismatchError(f"window mismatch: [{lo}, {hi}) is not inside {c.window}")
    v1 = site_values(c1, (lo, hi), precision)
    v2 = site_values(c2, (lo, hi), precision)
    return float(np.max(np.abs(v1 - v2)))


@dataclass(frozen=True)
class MeasureSampler:
    """Product measure on one site representation; seeded, never time-based"""
    kind: str
    seed: int
    distribution: str = "product_uniform"
    p: float = 0.5
    tape_depth: int = 64
    halo: str = "periodic"

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise DomainError(f"unknown site representation {self.kind!r}")
        if self.distribution not in ("product_uniform", "bernoulli"):
            raise DomainError(f"unknown distribution {self.distribution!r}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError("bernoulli parameter must lie in [0, 1]")
        if self.halo not in HALO_KINDS:
            raise DomainError(f"unknown halo policy {self.halo!r}")

    @property
    def site_probability(self) -> float:
        return self.p if self.distribution == "bernoulli" else 0.5


def sampler_for(system: SystemDefinition, seed: int, distribution: str = "product_uniform",
                p: float = 0.5, tape_depth: int = 64, halo: str = "periodic") -> MeasureSampler:
    return MeasureSampler(kind=system.state_kind or "value", seed=seed, distribution=distribution,
                          p=p, tape_depth=tape_depth, halo=halo)


def sample_initial(sampler: MeasureSampler, window_with_halo, halo_width: int = 0) -> LatticeConfiguration:
    """Draw f|_window from the sampler; deterministic in (seed, window)"""
    lo, hi = window_bounds(window_with_halo)
    size = hi - lo
    rng = np.random.default_rng(np.random.SeedSequence([int(sampler.seed), 0, zigzag(lo), size]))

    if sampler.kind == "value":
        if sampler.distribution == "bernoulli":
            data = (rng.random(size) < sampler.p).astype(np.float64)
        else:
            data = rng.integers(0, 2 ** VALUE_RESOLUTION_BITS, size=size) / 2.0 ** VALUE_RESOLUTION_BITS
    elif sampler.kind == "cell":
        data = (rng.random(size) < sampler.site_probability).astype(np.uint8)
    else:
        data = (rng.random((size, sampler.tape_depth)) < sampler.site_probability).astype(np.uint8)

    halo = HaloPolicy(kind=sampler.halo, width=halo_width if sampler.halo == "fixed_halo" else 0,
                      seed=sampler.seed, p=sampler.site_probability)
    return LatticeConfiguration(lo=lo, hi=hi, kind=sampler.kind, data=data, halo=halo)


def sample_for_orbit(sampler: MeasureSampler, system: SystemDefinition, window, steps: int) -> LatticeConfiguration:
    """Sample so that ``window`` stays observable for ``steps`` evolution steps.

    Fixed halos get radius * tau * steps extra sites per side and tapes get
    enough depth for the shifts plus a full reading precision.
    """
    lo, hi = window_bounds(window)
    if sampler.kind == "tape":
        needed = steps * system.tau + DEFAULT_TAPE_PRECISION + 16
        if sampler.tape_depth < needed:
            sampler = replace(sampler, tape_depth=needed)
    width = system.radius * system.tau * steps if sampler.halo == "fixed_halo" else 0
    return sample_initial(sampler, (lo - width, hi + width), halo_width=width)


def lyapunov_exponent(system: SystemDefinition, x0: float, steps: int = 10000, discard: int = 100) -> float:
    """Time average of log|g'(x)| along one orbit of the uncoupled site map"""
    if system.kind == "identity":
        return 0.0
    if system.kind == "bit_tape_shift":
        return math.log(2.0)
    if system.kind == "elementary_ca":
        raise DomainError("no derivative for cellular automata")
    if system.kind == "tent_lattice":
        return math.log(system.slope)

    x = float(x0)
    total = 0.0
    for i in range(discard + steps):
        if i >= discard:
            total += math.log(max(abs(system.r * (1.0 - 2.0 * x)), 1e-300))
        x = system.r * x * (1.0 - x)
    return total / steps


@dataclass
class SeparationEstimate:
    gamma: float
    envelope: float
    shrink_constant: float
    partial: bool
    fitted_steps: int
    mean_log_distance: List[float]

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.gamma, self.envelope, self.shrink_constant)


def _perturb(config: LatticeConfiguration, eps: float, rng: np.random.Generator) -> LatticeConfiguration:
    """A configuration at sup distance strictly below eps"""
    if config.kind == "tape":
        k = max(1, math.ceil(-math.log2(eps)))
        bits = np.array(config.data)
        positions = config.offset + k + rng.integers(0, 8, size=config.size)
        bits[np.arange(config.size), positions] ^= 1
        return replace(config, data=bits)
    if config.kind == "cell":
        raise DomainError("cells admit no perturbation below the symbol distance")
    x = np.asarray(config.data)
    delta = eps * rng.uniform(0.25, 0.5, size=x.shape)
    moved = np.where(x + delta <= 1.0, x + delta, x - delta)
    return replace(config, data=moved)


def estimate_separation_rate(system: SystemDefinition, eps: float, window, tmax: int, trials: int = 8,
                             seed: int = 0, saturation: float = DEFAULT_SATURATION) -> SeparationEstimate:
    """Fit d(phi_t f1, phi_t f2) < Gamma e^{gamma t} eps over perturbed pairs.

    Distances at time t are taken on the window shrunk by radius * (t + 1)
    per side (so the shrink constant is radius * eps). ``saturation`` is a
    fraction of the state-space diameter (1): each trial is fitted over the
    steps before its distance first reaches it and gamma is the mean of the
    per-trial slopes. A window exhausted before ``tmax`` yields a partial fit.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if tmax < 1:
        raise DomainError("tmax must be positive")
    if trials < MIN_SEPARATION_TRIALS:
        raise DomainError(f"separation fits need at least {MIN_SEPARATION_TRIALS} trials, got {trials}")
    if not 0.0 < saturation <= 1.0:
        raise DomainError("saturation is a fraction of the diameter and must lie in (0, 1]")
    lo, hi = window_bounds(window)
    size = hi - lo
    r = system.radius * system.tau
    if size <= 2 * r:
        raise DomainError(f"window of {size} sites is too narrow for interaction radius {r}")

    t_limit = tmax if r == 0 else min(tmax, (size - 1) // (2 * r) - 1)
    partial = t_limit < tmax
    if t_limit < 1:
        raise InsufficientHaloError(required_width=2 * r * (tmax + 1) + 1, available_width=size)

    kind = system.state_kind or "value"
    width = (size - 1) // 2 if r else 0
    sampler = MeasureSampler(kind=kind, seed=seed, halo="fixed_halo" if r else "periodic",
                             tape_depth=tmax * system.tau + DEFAULT_TAPE_PRECISION + 16)
    perturb_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2, zigzag(lo), size]))

    logs = np.zeros((trials, t_limit + 1))
    for trial in range(trials):
        f1 = sample_initial(replace(sampler, seed=int(seed) + trial), (lo, hi), halo_width=width)
        f2 = _perturb(f1, eps, perturb_rng)
        for t in range(t_limit + 1):
            inner = (lo + r * (t + 1), hi - r * (t + 1)) if r else (lo, hi)
            d = sup_distance(f1, f2, inner, precision=DEFAULT_TAPE_PRECISION)
            logs[trial, t] = math.log(d) if d > 0 else -math.inf
            if t < t_limit:
                f1, f2 = evolve(f1, system, 1), evolve(f2, system, 1)

    log_saturation = math.log(saturation)
    slopes, usable = [], []
    for row in logs:
        steps = 0
        for value in row:
            if math.isinf(value) or value >= log_saturation:
                break
            steps += 1
        usable.append(steps)
        if steps >= 2:
            slope, _, _ = fit_line(np.arange(steps), row[:steps])
            slopes.append(slope)

    mean_log = [float(v) for v in np.mean(np.where(np.isinf(logs), np.nan, logs), axis=0)]
    if not slopes:
        logger.warning("no separation trial has two unsaturated steps; reporting gamma = 0")
        return SeparationEstimate(0.0, 1.0, r * eps, True, max(usable), mean_log)

    gamma = float(np.mean(slopes))
    envelope = max(float(np.max(np.exp(row[:steps] - gamma * np.arange(steps))))
                   for row, steps in zip(logs, usable) if steps > 0) / eps
    return SeparationEstimate(gamma, envelope, r * eps, partial or len(slopes) < trials, max(usable), mean_log)

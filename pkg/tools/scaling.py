"""
Finite-grid stand-ins for limits: fitted rates with residual diagnostics.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DomainError
from core.utils import fit_line, relative_rms, tail_half

# Absolute slack so that near-zero sequences are not flagged by float noise.
ABS_TOLERANCE = 1e-9


@dataclass
class ScalingEstimate:
    """Rate fitted through the tail half of (size, value) samples"""
    samples: List[Tuple[float, float]]
    fitted_rate: float
    residual: float
    monotone_flag: bool = True
    flags: List[str] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        sizes = [s for s, _ in self.samples]
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise DomainError("scaling samples must be sorted by strictly increasing size")
        if not math.isfinite(self.fitted_rate):
            raise DomainError("fitted rate is not finite")
        if self.residual < 0:
            raise DomainError("residual must be non-negative")

    @property
    def values(self) -> List[float]:
        return [v for _, v in self.samples]


def is_monotone(values: Sequence[float], direction: str, tolerance: float = 0.0) -> bool:
    """Monotonicity within a multiplicative tolerance.

    ``nonincreasing``: v[i] <= v[i-1] * tolerance (tolerance >= 1).
    ``nondecreasing``: v[i] >= v[i-1] * (1 - tolerance).
    """
    values = list(values)
    for prev, cur in zip(values, values[1:]):
        if direction == "nonincreasing":
            if cur > prev * max(tolerance, 1.0) + ABS_TOLERANCE:
                return False
        elif direction == "nondecreasing":
            if cur < prev * (1.0 - tolerance) - ABS_TOLERANCE:
                return False
        else:
            raise DomainError(f"unknown monotone direction {direction!r}")
    return True


def fit_scaling(samples: Sequence[Tuple[float, float]], mode: str = "slope",
                monotone: Optional[str] = None, tolerance: float = 0.0,
                diagnostics: Optional[Dict[str, Any]] = None) -> ScalingEstimate:
    """Least-squares slope (or mean level) through the tail half of the samples"""
    samples = sorted((float(s), float(v)) for s, v in samples)
    if not samples:
        raise DomainError("cannot fit an empty sample list")
    tail = tail_half(samples)
    xs = [s for s, _ in tail]
    ys = [v for _, v in tail]
    if mode == "slope":
        rate, _, residual = fit_line(xs, ys)
    elif mode == "level":
        rate = float(np.mean(ys))
        residual = relative_rms(np.asarray(ys), np.full(len(ys), rate))
    else:
        raise DomainError(f"unknown fit mode {mode!r}")

    flag = True if monotone is None else is_monotone([v for _, v in samples], monotone, tolerance)
    flags = [] if flag else [f"not-{monotone}"]
    return ScalingEstimate(samples, float(rate), float(residual), flag, flags, dict(diagnostics or {}))

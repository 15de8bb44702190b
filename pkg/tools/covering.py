"""
Finite eps-coverings of windowed state spaces and the orbit coding map.

Coverings are product quantizations: each site of the window is cut into
``bins_per_site`` half-open bins (the rightmost one closed), so the coding
map is single-valued. A state's symbol is the mixed-radix number of its
per-site bins, leftmost site most significant.
"""

import math
import struct
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from core.exceptions import DomainError, InsufficientHaloError
from core.utils import ceil_log2
from tools.lattice_systems import (
    DEFAULT_TAPE_PRECISION,
    LatticeConfiguration,
    SystemDefinition,
    site_values,
    trajectory,
    window_bounds,
)

HEADER = struct.Struct("<QQ")
MAX_SERIALIZED_ALPHABET = 2 ** 64 - 1
# The (A2) multiplicity of quantizer partitions: product cells are exact products.
PRODUCT_MULTIPLICITY = 1


@dataclass(frozen=True)
class WindowSpec:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo >= self.hi:
            raise DomainError(f"window needs lo < hi, got [{self.lo}, {self.hi})")

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @classmethod
    def of(cls, window) -> "WindowSpec":
        if isinstance(window, cls):
            return window
        lo, hi = window_bounds(window)
        return cls(lo, hi)

    def as_tuple(self) -> Tuple[int, int]:
        return (self.lo, self.hi)


def base_bins(eps: float) -> int:
    """ceil(1/eps), tolerant of float noise in eps"""
    return max(1, math.ceil(1.0 / eps - 1e-9))


@dataclass(frozen=True)
class QuantizerCovering:
    window: WindowSpec
    eps: float
    level: int = 0

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if self.level < 0:
            raise DomainError("refinement level must be non-negative")

    @property
    def bins_per_site(self) -> int:
        return base_bins(self.eps) * 2 ** self.level

    @property
    def bin_width(self) -> float:
        return 1.0 / self.bins_per_site

    @property
    def alphabet_cardinality(self) -> int:
        return self.bins_per_site ** self.window.size


@dataclass(frozen=True)
class WordProvenance:
    system_id: str
    window: Tuple[int, int]
    eps: float
    tau: int
    start: int
    length: int
    level: int = 0


@dataclass(frozen=True)
class SymbolWord:
    symbols: Tuple[int, ...]
    alphabet_cardinality: int
    provenance: Optional[WordProvenance] = None

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        if self.alphabet_cardinality < 1:
            raise DomainError("alphabet cardinality must be positive")
        if symbols and (min(symbols) < 0 or max(symbols) >= self.alphabet_cardinality):
            raise DomainError(f"symbols must lie in 0..{self.alphabet_cardinality - 1}")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def slice(self, start: int, stop: Optional[int] = None) -> "SymbolWord":
        return SymbolWord(self.symbols[start:stop], self.alphabet_cardinality)

    def concat(self, other: "SymbolWord") -> "SymbolWord":
        if other.alphabet_cardinality != self.alphabet_cardinality:
            raise DomainError("cannot concatenate words over different alphabets")
        return SymbolWord(self.symbols + other.symbols, self.alphabet_cardinality)


def build_covering(window, eps: float, level: int = 0) -> QuantizerCovering:
    """Covering of F|_window by cells of per-site width <= eps * 2^-level"""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return QuantizerCovering(WindowSpec.of(window), float(eps), int(level))


def refine(covering: QuantizerCovering, extra_levels: int) -> QuantizerCovering:
    if extra_levels < 1:
        raise DomainError("extra_levels must be positive")
    return replace(covering, level=covering.level + extra_levels)


def product_covering(cov1: QuantizerCovering, cov2: QuantizerCovering) -> QuantizerCovering:
    """Covering of the union of two adjacent disjoint windows.

    Symbols project onto the factors by ``project_word``; with the left
    window first, pi_1 = id div A_2 and pi_2 = id mod A_2.
    """
    if cov1.eps != cov2.eps or cov1.level != cov2.level:
        raise DomainError("product coverings need a common eps and level")
    left, right = sorted((cov1, cov2), key=lambda c: c.window.lo)
    if left.window.hi > right.window.lo:
        raise DomainError(f"windows {left.window.as_tuple()} and {right.window.as_tuple()} overlap")
    if left.window.hi != right.window.lo:
        raise DomainError(f"windows {left.window.as_tuple()} and {right.window.as_tuple()} are not adjacent")
    return QuantizerCovering(WindowSpec(left.window.lo, right.window.hi), cov1.eps, cov1.level)


def bin_indices(config: LatticeConfiguration, covering: QuantizerCovering) -> np.ndarray:
    """Per-site bin of the configuration restricted to the covering window"""
    window = covering.window
    if window.lo < config.lo or window.hi > config.hi:
        raise InsufficientHaloError(
            required_width=max(config.lo - window.lo, window.hi - config.hi),
            available_width=0,
        )
    values = site_values(config, window.as_tuple(), precision=DEFAULT_TAPE_PRECISION)
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise DomainError("site values must lie in [0, 1]")
    bins = covering.bins_per_site
    return np.minimum(np.floor(values * bins).astype(np.int64), bins - 1)


def _mixed_radix(rows: np.ndarray, base: int) -> list:
    """Mixed-radix numbers of each row of digits, first digit most significant"""
    rows = np.atleast_2d(rows)
    width = rows.shape[1]
    if base ** width < 2 ** 63:
        weights = base ** np.arange(width - 1, -1, -1, dtype=np.int64)
        return [int(v) for v in rows.astype(np.int64) @ weights]
    out = []
    for row in rows:
        value = 0
        for digit in row:
            value = value * base + int(digit)
        out.append(value)
    return out


def _digits(symbol: int, base: int, width: int) -> list:
    digits = [0] * width
    for i in range(width - 1, -1, -1):
        symbol, digits[i] = divmod(symbol, base)
    return digits


def encode_state(config: LatticeConfiguration, covering: QuantizerCovering) -> int:
    """Index of the covering cell containing f|_window"""
    return _mixed_radix(bin_indices(config, covering)[None, :], covering.bins_per_site)[0]


def tape_orbit_values(config: LatticeConfiguration, window, offsets: np.ndarray,
                      precision: int = DEFAULT_TAPE_PRECISION) -> Optional[np.ndarray]:
    """Site values at several read offsets, shape (len(offsets), sites).

    Returns None when the tape is too shallow for a full-precision read at
    the last offset; callers then fall back to step-by-step evolution.
    """
    lo, hi = window_bounds(window)
    if lo < config.lo or hi > config.hi:
        raise InsufficientHaloError(required_width=max(config.lo - lo, hi - config.hi), available_width=0)
    k = precision if config.precision_cap is None else min(precision, config.precision_cap)
    if int(offsets[-1]) + k > config.tape_depth:
        return None
    rows = config.data[lo - config.lo:hi - config.lo]
    view = np.lib.stride_tricks.sliding_window_view(rows, k, axis=1)
    weights = 2.0 ** -np.arange(1, k + 1)
    return (view[:, offsets, :].astype(np.float64) @ weights).T


def _tape_orbit_bins(config: LatticeConfiguration, system: SystemDefinition, covering: QuantizerCovering,
                     n: int, start: int) -> Optional[np.ndarray]:
    offsets = config.offset + system.tau * np.arange(start, n)
    values = tape_orbit_values(config, covering.window.as_tuple(), offsets)
    if values is None:
        return None
    bins = covering.bins_per_site
    return np.minimum(np.floor(values * bins).astype(np.int64), bins - 1)


def encode_orbit(config: LatticeConfiguration, system: SystemDefinition, covering: QuantizerCovering,
                 n: int, start: int = 0) -> SymbolWord:
    """Coded orbit segment: symbol j is the cell of phi_{j tau} f, for start <= j < n"""
    if n < 1 or not 0 <= start < n:
        raise DomainError(f"need 0 <= start < n, got start={start}, n={n}")
    if config.kind == "tape" and system.precision_cap is not None:
        config = replace(config, precision_cap=system.precision_cap)

    if system.kind == "identity":
        symbols = [encode_state(config, covering)] * (n - start)
    else:
        bins = None
        if system.kind == "bit_tape_shift":
            bins = _tape_orbit_bins(config, system, covering, n, start)
        if bins is None:
            states = trajectory(config, system, n)[start:]
            bins = np.stack([bin_indices(state, covering) for state in states])
        symbols = _mixed_radix(bins, covering.bins_per_site)
    provenance = WordProvenance(system.system_id, covering.window.as_tuple(), covering.eps,
                                system.tau, start, n - start, covering.level)
    return SymbolWord(tuple(symbols), covering.alphabet_cardinality, provenance)


def project_word(word: SymbolWord, covering: QuantizerCovering, target: QuantizerCovering) -> SymbolWord:
    """Symbol-wise image of a word under a coarser covering or a factor window.

    ``target`` must share eps with ``covering``, sit at a level no finer and
    cover a sub-window. Per-site bins are divided by 2^(level difference).
    """
    if base_bins(target.eps) != base_bins(covering.eps):
        raise DomainError("projection needs a common eps")
    if target.level > covering.level:
        raise DomainError("cannot project onto a finer covering")
    if target.window.lo < covering.window.lo or target.window.hi > covering.window.hi:
        raise DomainError("target window is not inside the source window")
    if word.alphabet_cardinality != covering.alphabet_cardinality:
        raise DomainError("word was not coded with this covering")

    size = covering.window.size
    start = target.window.lo - covering.window.lo
    stop = start + target.window.size
    shift = 2 ** (covering.level - target.level)
    rows = np.array([_digits(s, covering.bins_per_site, size)[start:stop] for s in word.symbols],
                    dtype=np.int64).reshape(len(word), target.window.size)
    symbols = _mixed_radix(rows // shift, target.bins_per_site) if len(word) else []
    provenance = word.provenance
    if provenance is not None:
        provenance = replace(provenance, window=target.window.as_tuple(), level=target.level)
    return SymbolWord(tuple(symbols), target.alphabet_cardinality, provenance)


def serialize_word(word: SymbolWord) -> bytes:
    """Little-endian (cardinality, length) header, then symbols MSB-first in ceil(log2 A) bits"""
    card = word.alphabet_cardinality
    if card > MAX_SERIALIZED_ALPHABET:
        raise DomainError(f"alphabet of {card} symbols exceeds the 64-bit header")
    header = HEADER.pack(card, len(word))
    width = ceil_log2(card)
    if width == 0 or not len(word):
        return header
    symbols = np.array(word.symbols, dtype=np.uint64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    bits = ((symbols[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return header + np.packbits(bits.ravel()).tobytes()


def deserialize_word(payload: bytes) -> Tuple[int, Tuple[int, ...]]:
    """Inverse of serialize_word: (alphabet cardinality, symbols)"""
    if len(payload) < HEADER.size:
        raise DomainError("payload shorter than the word header")
    card, length = HEADER.unpack_from(payload)
    width = ceil_log2(card) if card else 0
    if width == 0 or length == 0:
        return card, (0,) * length
    needed = length * width
    if (len(payload) - HEADER.size) * 8 < needed:
        raise DomainError("payload truncated")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8, offset=HEADER.size))[:needed]
    rows = bits.reshape(length, width)
    return card, tuple(_mixed_radix(rows, 2))

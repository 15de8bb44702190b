import csv
import io
import logging
import os
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import aiofiles
import numpy as np

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def configure_logging(level_name: Optional[str] = None) -> int:
    """Configure root logging from EXTROPY_LOG (error, info, debug)"""
    requested = (level_name or os.environ.get("EXTROPY_LOG") or "info").strip().lower()
    level = LOG_LEVELS.get(requested)
    logging.basicConfig(
        level=level or logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    if level is None:
        logging.getLogger(__name__).warning("Unknown EXTROPY_LOG value %r, using info", requested)
        level = logging.INFO
    return level


def ceil_log2(n: int) -> int:
    """ceil(log2 n) for positive integers, exact (ceil_log2(1) == 0)"""
    if n < 1:
        raise ValueError(f"ceil_log2 needs a positive integer, got {n}")
    return (int(n) - 1).bit_length()


def zigzag(value: int) -> int:
    """Map a signed integer to a non-negative one (0, -1, 1, -2, ... -> 0, 1, 2, 3, ...)"""
    return 2 * value if value >= 0 else -2 * value - 1


def site_rng(seed: int, site: int, time: int = 0, stream: int = 1) -> np.random.Generator:
    """Generator that depends only on (seed, stream, absolute site, time)"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), zigzag(int(site)), int(time)]))


def derive_seed(seed: int, *words: int) -> int:
    """Child seed for (seed, words...), stable across runs and platforms"""
    sequence = np.random.SeedSequence([int(seed)] + [zigzag(int(w)) for w in words])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares line through (xs, ys).

    Returns (slope, intercept, residual) where residual is the RMS deviation
    from the fit relative to the mean absolute value (0 when all ys vanish).
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size == 0:
        return 0.0, 0.0, 0.0
    if x.size == 1:
        return 0.0, float(y[0]), 0.0
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), relative_rms(y, slope * x + intercept)


def relative_rms(observed: np.ndarray, predicted: np.ndarray) -> float:
    observed = np.asarray(observed, dtype=float)
    scale = float(np.mean(np.abs(observed)))
    if scale == 0.0:
        return 0.0 if np.allclose(predicted, 0.0) else float(np.sqrt(np.mean(np.square(predicted))))
    return float(np.sqrt(np.mean(np.square(observed - predicted))) / scale)


def tail_half(items: Sequence[Any]) -> List[Any]:
    """Second half of a sequence (at least two items when available)"""
    items = list(items)
    start = len(items) // 2
    if len(items) - start < 2:
        start = max(0, len(items) - 2)
    return items[start:]


def relative_spread(values: Iterable[float]) -> float:
    """Max pairwise relative deviation |a - b| / max(|a|, |b|); 0 for all-zero input"""
    values = [float(v) for v in values]
    worst = 0.0
    for i, a in enumerate(values):
        for b in values[i + 1:]:
            denom = max(abs(a), abs(b))
            if denom > 0:
                worst = max(worst, abs(a - b) / denom)
    return worst


def format_value(value: Any) -> str:
    """Stable text form for CSV cells"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    if isinstance(value, (list, tuple)):
        return ";".join(format_value(v) for v in value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in header])
    return buffer.getvalue()


async def write_text_atomic(path: Path, text: str) -> Path:
    """Write through a temporary file and os.replace so readers never see partial output"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f".{path.name}.tmp")
    async with aiofiles.open(tmp_path, "w", encoding="utf-8", newline="") as f:
        await f.write(text)
    os.replace(tmp_path, path)
    return path


async def write_csv_atomic(path: Path, header: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
    return await write_text_atomic(path, render_csv(header, rows))


def create_recovery_suggestions(error_type: str, context: str) -> List[str]:
    """Generate recovery suggestions based on error type and context"""
    suggestions = []
    kind = error_type.lower()

    if "halo" in kind:
        suggestions.extend([
            "Widen the sampled window or lower the number of steps",
            "Switch system.halo to periodic or iid_refresh",
        ])
    elif "enumeration" in kind:
        suggestions.extend([
            "Lower axioms.h4_max_len or axioms.h4_alphabet",
            "Use the sampled counting path instead of exhaustive enumeration",
        ])
    elif "inadmissible" in kind:
        suggestions.extend([
            "Choose a growing, symmetric or drifting admissible sequence",
            "Lower admissible.l_min if the drift condition is too strict",
        ])
    elif "window" in kind:
        suggestions.extend([
            "Compare configurations defined on the same window",
            "Restrict both configurations to a common window first",
        ])
    elif "domain" in kind:
        suggestions.extend([
            "Check eps is in (0, 1] and values lie in [0, 1]",
            "Increase ensemble.size to at least 2",
        ])
    elif "config" in kind:
        suggestions.append("Fix the configuration field named in the error message")

    if context:
        suggestions.append(f"Failed during: {context}")
    return suggestions

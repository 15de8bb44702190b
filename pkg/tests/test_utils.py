"""
Unit tests for the shared helpers
"""

import math
import shutil
import tempfile
from pathlib import Path

import pytest

from core.async_utils import run_async_safe
from core.utils import (
    ceil_log2,
    create_recovery_suggestions,
    derive_seed,
    fit_line,
    format_value,
    relative_spread,
    render_csv,
    tail_half,
    write_csv_atomic,
    zigzag,
)


def test_ceil_log2():
    assert [ceil_log2(n) for n in (1, 2, 3, 4, 5, 1024, 1025)] == [0, 1, 2, 2, 3, 10, 11]
    with pytest.raises(ValueError):
        ceil_log2(0)


def test_zigzag():
    assert [zigzag(v) for v in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]


def test_derive_seed_is_stable():
    assert derive_seed(7, 0, 4, 1) == derive_seed(7, 0, 4, 1)
    assert derive_seed(7, 0, 4, 1) != derive_seed(7, 0, 4, 2)
    assert derive_seed(7, -4, 4) != derive_seed(7, 4, 4)


def test_fit_line():
    slope, intercept, residual = fit_line([1, 2, 3, 4], [3, 5, 7, 9])
    assert slope == pytest.approx(2.0)
    assert intercept == pytest.approx(1.0)
    assert residual == pytest.approx(0.0, abs=1e-12)
    assert fit_line([5], [2.5]) == (0.0, 2.5, 0.0)


def test_tail_half():
    assert tail_half([1, 2, 3, 4]) == [3, 4]
    assert tail_half([1, 2, 3]) == [2, 3]
    assert tail_half([1]) == [1]


def test_relative_spread():
    assert relative_spread([1.0, 1.1, 0.9]) == pytest.approx(0.2 / 1.1)
    assert relative_spread([0.0, 0.0]) == 0.0


def test_format_value():
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(math.inf) == "inf"
    assert format_value(["a", 2]) == "a;2"


def test_render_csv_orders_columns():
    text = render_csv(["b", "a"], [{"a": 1, "b": 0.5}, {"a": 2}])
    assert text == "b,a\n0.5,1\n,2\n"


def test_write_csv_atomic():
    out_dir = Path(tempfile.mkdtemp(prefix="extropy_utils_test_"))
    try:
        path = run_async_safe(write_csv_atomic(out_dir / "nested" / "t.csv", ["x"], [{"x": 1}]))
        assert path.read_text() == "x\n1\n"
        assert not list(path.parent.glob(".*.tmp"))
    finally:
        shutil.rmtree(out_dir, ignore_errors=True)


def test_recovery_suggestions():
    suggestions = create_recovery_suggestions("EnumerationGuardError", "axioms")
    assert any("h4_max_len" in s for s in suggestions)
    assert suggestions[-1] == "Failed during: axioms"

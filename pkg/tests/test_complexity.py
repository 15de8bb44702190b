#!/usr/bin/env python3
"""
Tests for the complexity backends and the axiom harness
"""

from types import SimpleNamespace
from unittest.mock import patch

import numpy as np
import pytest

from core.exceptions import DomainError, EnumerationGuardError, ExtropyToolError, MembershipError
from tools.complexity import (
    LZ78,
    ComplexityBackend,
    check_H1a,
    check_H1b,
    check_H2,
    check_H3,
    check_H4,
    complexity,
    h1a_corpus,
    h1b_corpus,
    h2_corpus,
    h3_lists,
    h4_enumeration_size,
    lz76_phrase_count,
    lz78_code_length,
    lz78_parse,
    random_words,
    two_part_code_complexity,
)
from tools.covering import SymbolWord


def word(bits, card=2):
    return SymbolWord(tuple(bits), card)


def test_lz78_worked_example():
    """Six complete phrases 0|1|00|01|10|11 and a trailing 00"""
    w = word([0, 1, 0, 0, 0, 1, 1, 0, 1, 1, 0, 0])
    parse = lz78_parse(w.symbols)
    assert parse.complete_phrases == 6
    assert parse.trailing
    # index bits 0+1+2+2+3+3, six new-symbol bits, trailing index ceil(log2 7)
    assert lz78_code_length(w) == 20


def test_lz78_small_examples():
    # a|aa|aaa costs 0+1+2 index bits and three symbol bits
    assert lz78_code_length(word([0] * 6)) == 6
    # a|b|ab costs 0+1+2 index bits and three symbol bits
    assert lz78_code_length(word([0, 1, 0, 1])) == 6


def test_fair_coin_rate_band():
    bits = np.random.default_rng(2016).integers(0, 2, 2 ** 16)
    rate = lz78_code_length(word(bits)) / 2 ** 16
    assert 0.95 <= rate <= 1.35


def test_lz78_alphabet_cost():
    assert lz78_code_length(word([0, 1], card=4)) == 0 + 1 + 2 * 2


def test_empty_word_costs_nothing():
    assert complexity(word([])) == 0
    assert complexity(word([]), ComplexityBackend("lz76_phrase_encoding")) == 0


def test_lz76_phrase_count():
    assert lz76_phrase_count([int(c) for c in "0001101001000101"]) == 6
    assert lz76_phrase_count([0]) == 1
    assert lz76_phrase_count([]) == 0


def test_constant_words_compress():
    assert complexity(word([0] * 1024)) < 512


def test_unknown_backend():
    with pytest.raises(DomainError):
        ComplexityBackend("zstd_magic")
    with pytest.raises(DomainError):
        ComplexityBackend("external_compressor")


def test_two_part_code():
    members = [word([0] * 8), word([0] * 7 + [1]), word([1] * 8), word([0, 1] * 4), word([1, 0] * 4)]
    assert two_part_code_complexity(word([1] * 8), members, 8, c0=16) == 3 + 3 + 16


def test_two_part_code_requires_membership():
    with pytest.raises(MembershipError):
        two_part_code_complexity(word([1, 1]), [word([0, 0])], 2)


def test_h4_counts_every_short_word():
    report = check_H4(LZ78, alphabet_cardinality=2, max_len=12, c=21)
    assert report.details["enumerated"] == 8190
    assert report.slacks["count"] == 8190
    assert report.passed


def test_h4_sparse_threshold():
    report = check_H4(LZ78, alphabet_cardinality=2, max_len=16, c=8)
    assert report.passed
    assert report.slacks["count"] <= 256


def test_h4_guard():
    assert h4_enumeration_size(2, 30) == 2 ** 31 - 2
    with pytest.raises(EnumerationGuardError) as ctx:
        check_H4(LZ78, alphabet_cardinality=2, max_len=30, c=8)
    assert ctx.value.recovery_suggestions


def test_h1a_on_random_prefixes():
    report = check_H1a(LZ78, h1a_corpus(seed=3, count=100, max_len=256))
    assert report.passed
    assert report.hypothesis == "H1a"
    assert not report.informational


def test_h1b_on_random_pairs():
    report = check_H1b(LZ78, h1b_corpus(seed=3, count=100, max_len=256))
    assert report.passed
    assert report.slacks["alpha"] <= 8.0
    assert report.slacks["beta"] <= 64.0


def test_h1a_on_full_corpus():
    base = check_H1a(LZ78, h1a_corpus(seed=3, count=1000, max_len=4096))
    doubled = check_H1a(LZ78, h1a_corpus(seed=3, count=2000, max_len=4096))
    assert base.passed
    assert doubled.passed


def test_h1b_on_full_corpus():
    assert check_H1b(LZ78, h1b_corpus(seed=3, count=1000, max_len=1024)).passed
    base = check_H1b(LZ78, h1b_corpus(seed=3, count=1000, max_len=4096))
    doubled = check_H1b(LZ78, h1b_corpus(seed=3, count=2000, max_len=4096))
    excess, twice = base.details["max_excess"], doubled.details["max_excess"]
    assert 0 < excess <= twice <= 2 * excess


def test_h2_on_product_words():
    report = check_H2(LZ78, h2_corpus(seed=3, count=60, max_len=256))
    assert report.details["h2a_passed"]
    assert report.details["h2b_passed"]
    assert report.passed
    assert report.slacks["effective_q"] >= 1.0


def test_h2_on_full_corpus():
    report = check_H2(LZ78, h2_corpus(seed=3, count=1000, max_len=4096))
    assert report.passed, report.slacks


def test_h3_is_informational():
    report = check_H3(LZ78, h3_lists(seed=5))
    assert report.passed
    assert report.informational
    assert "backend_within_bound" in report.details


def test_empty_corpora_rejected():
    with pytest.raises(DomainError):
        check_H1a(LZ78, [])
    with pytest.raises(DomainError):
        check_H3(LZ78, [])


def test_random_words_prefix_stable():
    small = random_words(seed=7, count=20, max_len=64)
    large = random_words(seed=7, count=40, max_len=64)
    assert large[:20] == small
    assert all(1 <= len(w) <= 64 for w in large)


def test_report_row_flattens_slacks():
    row = check_H1b(LZ78, h1b_corpus(seed=1, count=10, max_len=32)).to_row()
    assert {"slack_alpha", "slack_beta", "hypothesis", "passed"} <= set(row)


@patch('tools.complexity.subprocess.run')
def test_external_compressor(mock_run):
    mock_run.return_value = SimpleNamespace(stdout=b"\x00" * 5)
    backend = ComplexityBackend("external_compressor", adapter="gzip")
    assert backend.informational
    assert backend.name == "external_compressor(gzip)"
    assert complexity(word([0, 1, 1, 0]), backend) == 40
    argv = mock_run.call_args[0][0]
    assert argv[0] == "gzip"


@patch('tools.complexity.subprocess.run', side_effect=FileNotFoundError())
def test_external_compressor_missing(mock_run):
    backend = ComplexityBackend("external_compressor", adapter=("nosuchzip", "-c"))
    with pytest.raises(ExtropyToolError):
        complexity(word([0, 1]), backend)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

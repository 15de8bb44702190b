"""
Unit tests for admissible sequences, windowed averages and the boundary check
"""

import math
import unittest
from types import SimpleNamespace

import numpy as np

from core.exceptions import DomainError, InadmissibleSequenceError
from tools.ergodic import (
    AdmissibleSequence,
    Observable,
    OrbitSource,
    boundary_term_check,
    constant_observable,
    index_partition,
    require_admissible,
    site_value_observable,
    validate,
    window_complexity_observable,
    windowed_average,
)
from tools.lattice_systems import HaloPolicy, LatticeConfiguration, MeasureSampler


def quadratic_sequence(terms=16):
    return AdmissibleSequence("explicit", explicit=tuple((k * k, k * k + k) for k in range(1, terms + 1)))


class TestAdmissibleSequence(unittest.TestCase):
    """Generators and the finite-prefix admissibility proxies"""

    def test_generator_bounds(self):
        self.assertEqual(AdmissibleSequence("growing").bounds(3), (0, 3))
        self.assertEqual(AdmissibleSequence("symmetric", scale=2).bounds(3), (-6, 6))
        self.assertEqual(AdmissibleSequence("drifting", alpha=0.5).bounds(5), (2, 7))
        self.assertEqual(AdmissibleSequence("growing", k_max=16).default_indices(), [1, 2, 4, 8, 16])

    def test_invalid_sequences(self):
        with self.assertRaises(DomainError):
            AdmissibleSequence("spiral")
        with self.assertRaises(DomainError):
            AdmissibleSequence("growing", scale=0)
        with self.assertRaises(DomainError):
            AdmissibleSequence("explicit", explicit=((3, 3),))
        with self.assertRaises(DomainError):
            AdmissibleSequence("growing").bounds(0)

    def test_growing_passes(self):
        report = validate(AdmissibleSequence("growing"), l_min=0.1)
        self.assertTrue(report.passed)
        self.assertEqual(report.prefix_length, 32)
        self.assertEqual(report.proxies["cond-succ-2"], math.inf)

    def test_symmetric_passes(self):
        self.assertTrue(validate(AdmissibleSequence("symmetric"), l_min=0.1).passed)

    def test_drifting_passes(self):
        report = validate(AdmissibleSequence("drifting", alpha=0.5), l_min=0.1)
        self.assertTrue(report.passed)
        self.assertGreater(report.proxies["cond-succ-2"], 1.5)

    def test_quadratic_drift_rejected(self):
        report = validate(quadratic_sequence(), l_min=0.1)
        self.assertFalse(report.passed)
        self.assertEqual(report.condition, "cond-succ-2")
        self.assertEqual(report.witness_k, 16)
        self.assertAlmostEqual(report.proxies["cond-succ-2"], 1 / 16)

    def test_require_admissible_raises(self):
        with self.assertRaises(InadmissibleSequenceError) as ctx:
            require_admissible(quadratic_sequence(), l_min=0.1)
        self.assertEqual(ctx.exception.condition, "cond-succ-2")
        self.assertEqual(ctx.exception.witness_k, 16)
        self.assertIn("cond-succ-2", str(ctx.exception))

    def test_left_drift_rejected_on_right_end(self):
        seq = AdmissibleSequence("explicit", explicit=tuple((-k * k - k, -k * k) for k in range(1, 17)))
        report = validate(seq, l_min=0.1)
        self.assertEqual(report.condition, "cond-succ-3")

    def test_constant_widths_fail_divergence(self):
        seq = AdmissibleSequence("explicit", explicit=tuple((k, k + 4) for k in range(16)))
        report = validate(seq, l_min=0.1)
        self.assertFalse(report.passed)
        self.assertEqual(report.condition, "cond-succ-1")

    def test_short_prefix_is_flagged(self):
        seq = AdmissibleSequence("explicit", explicit=((0, 1), (0, 2), (0, 4), (0, 8)))
        report = validate(seq, l_min=0.1)
        self.assertTrue(report.passed)
        self.assertIn("short_prefix", report.flags)
        self.assertEqual(report.prefix_length, 4)

    def test_generator_prefix_too_short(self):
        with self.assertRaises(DomainError):
            validate(AdmissibleSequence("growing", k_max=8), l_min=0.1)
        with self.assertRaises(DomainError):
            validate(AdmissibleSequence("growing"), l_min=0.0)

    def test_from_config_falls_back_to_grid_windows(self):
        section = SimpleNamespace(kind="explicit", k_max=32, alpha=0.5, scale=1, explicit=[])
        seq = AdmissibleSequence.from_config(section, [[0, 4], [0, 8]])
        self.assertEqual(seq.windows(), [(0, 4), (0, 8)])
        self.assertEqual(seq.length, 2)

    def test_report_row(self):
        row = validate(quadratic_sequence(), l_min=0.1).to_row()
        self.assertEqual(row["violated"], "cond-succ-2")
        self.assertEqual(row["witness_k"], 16)


class TestWindowedAverage(unittest.TestCase):
    """Spatial averages of observables along admissible windows"""

    def setUp(self):
        self.sampler = MeasureSampler("value", seed=2024)
        self.k_grid = [1, 2, 4, 8]

    def average(self, seq, observable=None):
        observable = observable or site_value_observable()
        source = OrbitSource.for_sequence(self.sampler, seq, self.k_grid, observable.support)
        return windowed_average(observable, source, seq, self.k_grid)

    def test_constant_observable(self):
        estimate = self.average(AdmissibleSequence("growing", scale=64), constant_observable(0.7))
        self.assertAlmostEqual(estimate.fitted_rate, 0.7)
        self.assertAlmostEqual(estimate.residual, 0.0)
        self.assertIn("integrability-assumed", estimate.flags)

    def test_site_value_average(self):
        estimate = self.average(AdmissibleSequence("growing", scale=2048))
        self.assertGreaterEqual(estimate.fitted_rate, 0.48)
        self.assertLessEqual(estimate.fitted_rate, 0.52)
        self.assertLess(estimate.diagnostics["deviation"], 0.01)

    def test_generators_agree(self):
        rates = [
            self.average(AdmissibleSequence("growing", scale=2048)).fitted_rate,
            self.average(AdmissibleSequence("symmetric", scale=1024)).fitted_rate,
            self.average(AdmissibleSequence("drifting", alpha=0.5, scale=2048)).fitted_rate,
        ]
        self.assertLess((max(rates) - min(rates)) / max(rates), 0.02)

    def test_inadmissible_sequence_refused(self):
        source = OrbitSource.sample(self.sampler, 0, 400)
        with self.assertRaises(InadmissibleSequenceError):
            windowed_average(site_value_observable(), source, quadratic_sequence(), [1, 2, 4])

    def test_non_increasing_widths(self):
        seq = AdmissibleSequence("growing", scale=4)
        source = OrbitSource.for_sequence(self.sampler, seq, [4, 2])
        with self.assertRaises(DomainError):
            windowed_average(site_value_observable(), source, seq, [2, 2])

    def test_site_value_reads_tape_value(self):
        bits = np.array([[1, 1, 0, 1] + [0] * 60, [0] * 64], dtype=np.uint8)
        config = LatticeConfiguration(3, 5, "tape", bits, HaloPolicy("periodic"))
        self.assertAlmostEqual(site_value_observable()(config), 0.8125)

    def test_site_value_scales_cells(self):
        config = LatticeConfiguration(0, 2, "cell", np.array([2, 0]), HaloPolicy("periodic"), alphabet=3)
        self.assertAlmostEqual(site_value_observable()(config), 1.0)

    def test_declared_bound_enforced(self):
        source = OrbitSource.sample(self.sampler, 0, 8)
        loud = Observable(lambda config: 2.0, support=1, bound=1.0, name="loud")
        with self.assertRaises(DomainError):
            source.evaluate(loud, 0, 2)

    def test_translate_outside_sample(self):
        source = OrbitSource.sample(self.sampler, 0, 8)
        with self.assertRaises(DomainError):
            source.shifted(6, 4)


class TestBoundaryCheck(unittest.TestCase):
    """Boundary terms vanish relative to the window size"""

    def setUp(self):
        self.sampler = MeasureSampler("value", seed=77)
        self.seq = AdmissibleSequence("growing", scale=128)
        self.k_grid = [2, 4, 8, 16]

    def check(self, xi):
        source = OrbitSource.for_sequence(self.sampler, self.seq, self.k_grid, xi.support)
        return boundary_term_check(xi, source, self.seq, self.k_grid)

    def test_window_complexity_passes(self):
        report = self.check(window_complexity_observable(1 / 16, support=4))
        self.assertTrue(report.passed)
        self.assertLess(report.max_tail_ratio, 0.05)
        self.assertGreater(report.exceedance_range, 0)

    def test_zero_and_constant(self):
        self.assertEqual(self.check(constant_observable(0.0)).max_tail_ratio, 0.0)
        report = self.check(constant_observable(1.0))
        self.assertTrue(report.passed)
        self.assertEqual(report.exceedances, 0)

    def test_negative_xi_rejected(self):
        with self.assertRaises(DomainError):
            self.check(constant_observable(-1.0))


class TestIndexPartition(unittest.TestCase):
    """Grouping of indices by endpoint size and sign"""

    def test_growing_is_one_sided(self):
        labels = index_partition(AdmissibleSequence("growing"), [1, 2, 4, 8, 16, 32])
        self.assertEqual({label.label for label in labels}, {"I3(++)"})

    def test_symmetric_is_two_sided(self):
        labels = index_partition(AdmissibleSequence("symmetric"), [1, 4, 8, 16])
        self.assertEqual(labels[0].label, "I4(-+)")
        self.assertTrue(all(label.label == "I1(-+)" for label in labels[1:]))

    def test_left_windows(self):
        seq = AdmissibleSequence("explicit", explicit=((-40, -20),))
        self.assertEqual(index_partition(seq, [1])[0].label, "I1(--)")


if __name__ == '__main__':
    unittest.main()

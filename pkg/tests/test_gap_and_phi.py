import unittest
from unittest.mock import patch

import numpy as np

from twistmin.action import NeighboringPair, normalized_terms
from twistmin.exceptions import InvalidParameterError, NonConvergenceError
from twistmin.genfn import FrenkelKontorovaParams, fk_generating_function
from twistmin.minimize import GapInterval, detect_gap, estimate_phi, heteroclinic_constants, phi_bounds
from twistmin.minimize.gap import fiber_points
from twistmin.minimize.loops import _far_mask, diagonal_lower_bound

PAIR = NeighboringPair(0.0, 1.0, 0.0)


def fk(coupling=1.0, amplitude=2.0):
    return fk_generating_function(FrenkelKontorovaParams(coupling, amplitude))


class TestGapDetection(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.h = fk(1.0, 2.0)
        cls.report = detect_gap(cls.h, PAIR, fiber_samples=64, half_window=30)

    def test_strong_pinning_has_gap(self):
        self.assertTrue(self.report.has_gap)
        self.assertGreater(self.report.e0, 0.0)
        self.assertGreater(self.report.e1, 0.0)

    def test_gap_intervals_lie_inside_the_pair(self):
        for direction in ("up", "down"):
            for interval in self.report.intervals(direction):
                with self.subTest(direction=direction, interval=interval):
                    self.assertLess(PAIR.u0, interval.lo)
                    self.assertLessEqual(interval.lo, interval.hi)
                    self.assertLess(interval.hi, PAIR.u1)
                    self.assertGreaterEqual(interval.margin, self.report.margin)

    def test_heteroclinic_sites_are_reported(self):
        self.assertTrue(self.report.i0_sites)
        self.assertTrue(all(PAIR.u0 < x < PAIR.u1 for x in self.report.i0_sites + self.report.i1_sites))

    def test_constrained_minimum_is_lipschitz(self):
        lipschitz = PAIR.strip_lipschitz(self.h)
        for direction in ("up", "down"):
            samples = self.report.samples(direction)
            x0 = np.array([s.x0 for s in samples])
            minima = np.array([s.constrained_min for s in samples])
            with self.subTest(direction=direction):
                self.assertTrue(np.all(np.diff(x0) > 0))
                jumps = np.abs(np.diff(minima))
                self.assertTrue(np.all(jumps <= 2.0 * lipschitz * np.diff(x0) + 1e-8))

    def test_constrained_minimum_is_above_the_constant(self):
        for sample in self.report.samples("up"):
            self.assertGreaterEqual(sample.constrained_min, self.report.c0 - 1e-9)

    def test_weak_pinning_has_no_gap(self):
        h = fk(1.0, 0.005)
        report = detect_gap(h, PAIR, fiber_samples=16, half_window=30)

        self.assertFalse(report.has_gap)

    def test_too_few_fibers_raise(self):
        with self.assertRaises(InvalidParameterError):
            detect_gap(self.h, PAIR, fiber_samples=4)

    def test_report_serializes(self):
        data = self.report.to_dict()

        self.assertTrue(data["has_gap"])
        self.assertEqual(len(data["fiber_samples"]), len(self.report.fiber_samples))

    def test_gap_interval_contains(self):
        interval = GapInterval(lo=0.2, hi=0.4, margin=0.1)

        self.assertTrue(interval.contains(0.3))
        self.assertFalse(interval.contains(0.5))


class TestGapIntervalRuns(unittest.TestCase):
    def test_unconverged_fiber_splits_the_interval(self):
        h = fk(1.0, 2.0)
        constants = heteroclinic_constants(h, PAIR, half_window=10)
        points = fiber_points(PAIR, 16)
        stalled = float(points[len(points) // 2])
        level = max(constants.c0, constants.c1) + 1.0

        def fiber_minimum(h, pair, direction, x0, half_window, opts):
            if x0 == stalled:
                raise NonConvergenceError("stalled")
            return level

        with patch("twistmin.minimize.gap.constrained_minimum", side_effect=fiber_minimum):
            report = detect_gap(h, PAIR, fiber_samples=16, half_window=10, constants=constants)

        for direction in ("up", "down"):
            intervals = report.intervals(direction)
            self.assertEqual(len(intervals), 2)
            self.assertLess(intervals[0].hi, stalled)
            self.assertGreater(intervals[1].lo, stalled)
            self.assertFalse(any(g.contains(stalled) for g in intervals))


class TestPhi(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.h = fk(1.0, 2.0)
        cls.estimate = phi_bounds(cls.h, PAIR, 0.25, 4)

    def test_bounds_are_ordered(self):
        self.assertGreater(self.estimate.lower, 0.0)
        self.assertLessEqual(self.estimate.lower, self.estimate.upper)
        self.assertEqual(len(self.estimate.per_length), 4)
        self.assertEqual(estimate_phi(self.h, PAIR, 0.25, 4), self.estimate.upper)

    def test_random_loops_respect_lower_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            loop = rng.uniform(PAIR.u0, PAIR.u1, n)
            loop[0] = rng.uniform(0.25, 0.75)
            closed = np.append(loop, loop[0])
            total = float(np.sum(normalized_terms(self.h, PAIR, closed)))
            self.assertGreaterEqual(total, self.estimate.lower - 1e-8)

    def test_random_segments_respect_lipschitz_bound(self):
        rng = np.random.default_rng(1)
        coupling = self.h.coupling
        for _ in range(1000):
            segment = rng.uniform(PAIR.u0, PAIR.u1, int(rng.integers(2, 12)))
            total = float(np.sum(normalized_terms(self.h, PAIR, segment)))
            self.assertGreaterEqual(total, -coupling * abs(segment[-1] - segment[0]) - 1e-8)

    def test_zero_delta(self):
        estimate = phi_bounds(self.h, PAIR, 0.0, 3)

        self.assertEqual((estimate.lower, estimate.upper), (0.0, 0.0))

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidParameterError):
            phi_bounds(self.h, PAIR, 0.6, 3)
        with self.assertRaises(InvalidParameterError):
            phi_bounds(self.h, PAIR, 0.25, 0)

    def test_small_delta_has_a_positive_lower_bound(self):
        amplitude = 2.0
        for delta in (1e-3, 7e-4):
            with self.subTest(delta=delta):
                estimate = phi_bounds(self.h, PAIR, delta, 4)
                potential = amplitude * (1.0 - np.cos(2.0 * np.pi * delta))

                self.assertGreater(estimate.lower, 0.95 * potential)
                self.assertLessEqual(estimate.lower, potential)

    def test_off_grid_far_sites_respect_lower_bound(self):
        rng = np.random.default_rng(2)
        spacing = PAIR.width / 256
        for delta in (1.4 * spacing, 2.7 * spacing, 9.5 * spacing):
            estimate = phi_bounds(self.h, PAIR, delta, 3)
            for _ in range(200):
                n = int(rng.integers(1, 4))
                loop = rng.uniform(PAIR.u0, PAIR.u1, n)
                loop[0] = PAIR.u0 + delta
                closed = np.append(loop, loop[0])
                total = float(np.sum(normalized_terms(self.h, PAIR, closed)))
                self.assertGreaterEqual(total, estimate.lower - 1e-12)

    def test_relaxed_far_mask_reaches_half_a_grid_step(self):
        grid = np.linspace(PAIR.u0, PAIR.u1, 257)
        spacing = grid[1] - grid[0]

        strict = _far_mask(grid, PAIR, 1.4 * spacing)
        relaxed = _far_mask(grid, PAIR, 1.4 * spacing, slack=0.5 * spacing)

        self.assertFalse(strict[1])
        self.assertTrue(relaxed[1])
        self.assertFalse(relaxed[0])
        self.assertTrue(np.all(relaxed[strict]))

    def test_diagonal_lower_bound_matches_the_potential(self):
        for delta in (0.0, 1e-4, 0.1, 0.5):
            with self.subTest(delta=delta):
                potential = 2.0 * (1.0 - np.cos(2.0 * np.pi * delta))

                bound = diagonal_lower_bound(self.h, PAIR, delta)

                self.assertLessEqual(bound, potential + 1e-15)
                self.assertGreaterEqual(bound, 0.95 * potential - 1e-12)

    def test_constants_feed_the_gap(self):
        constants = heteroclinic_constants(self.h, PAIR, half_window=30)

        self.assertGreater(constants.c_star, 0.0)
        self.assertAlmostEqual(constants.c0, constants.c1, places=8)


if __name__ == "__main__":
    unittest.main()

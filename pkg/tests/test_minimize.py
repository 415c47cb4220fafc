import math
import unittest

import numpy as np

from twistmin.action import NeighboringPair, compute_I
from twistmin.exceptions import DegenerateFoliationError, InvalidParameterError, NonConvergenceError
from twistmin.genfn import FrenkelKontorovaParams, fk_generating_function
from twistmin.minimize import (
    MinimizeOptions,
    approximate_heteroclinic_window,
    chain_action,
    delta_visits,
    find_neighboring_pair,
    heteroclinic_constants,
    heteroclinic_minimizer,
    minimize_chain,
    minimize_segment,
    multistart_segments,
    partial_action,
    rational_neighboring_pair,
    solve_from_seeds,
)


def fk(coupling=1.0, amplitude=1.0, harmonic=1):
    return fk_generating_function(FrenkelKontorovaParams(coupling, amplitude, harmonic))


def brute_force_segments(h, left, right, grid, n_interior):
    """Actions of every grid chain left -> grid^n_interior -> right, with the chain axes last."""
    pair_values = h.eval(grid[:, None], grid[None, :])
    total = h.eval(left, grid)
    for k in range(1, n_interior):
        total = total[..., None] + pair_values.reshape((1,) * (k - 1) + pair_values.shape)
    return total + h.eval(grid, right).reshape((1,) * (n_interior - 1) + grid.shape)


class TestMinimizeOptions(unittest.TestCase):
    def test_invalid_options_raise(self):
        for kwargs in ({"tol_grad": 0.0}, {"max_sweeps": 0}, {"method": "simplex"},
                       {"grid_seed_points": 1}, {"threads": -1}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(InvalidParameterError):
                    MinimizeOptions(**kwargs)

    def test_default_workers(self):
        self.assertIsNone(MinimizeOptions(threads=0).max_workers)
        self.assertEqual(MinimizeOptions(threads=3).max_workers, 3)


class TestSegment(unittest.TestCase):
    def test_free_segment_is_linear(self):
        segment, residuals = minimize_segment(fk(1.0, 0.0), 0.0, 1.0, 3, box=(-1.0, 2.0))

        self.assertTrue(np.allclose(segment, [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-9))
        self.assertLess(float(np.max(residuals)), 1e-9)

    def test_no_interior_sites(self):
        segment, residuals = minimize_segment(fk(), 0.2, 0.4, 0, box=(0.0, 1.0))

        self.assertEqual(segment.tolist(), [0.2, 0.4])
        self.assertEqual(residuals.size, 0)

    def test_endpoint_outside_box_raises(self):
        with self.assertRaises(InvalidParameterError):
            minimize_segment(fk(), 0.0, 1.5, 2, box=(0.0, 1.0))

    def test_matches_exhaustive_grid_search(self):
        coupling, amplitude = 1.0, 0.5
        h = fk(coupling, amplitude)
        grid = np.linspace(0.0, 1.0, 41)
        spacing = grid[1] - grid[0]
        curvature = 2.0 * coupling + amplitude * (2.0 * math.pi) ** 2
        endpoints = np.linspace(0.0, 1.0, 5)

        for n_interior in (1, 2, 3):
            action_tol = n_interior * curvature * spacing ** 2 / 8.0
            for left in endpoints:
                for right in endpoints:
                    with self.subTest(n=n_interior, left=left, right=right):
                        segment, _ = minimize_segment(h, left, right, n_interior, box=(0.0, 1.0))
                        best = chain_action(h, segment)
                        totals = brute_force_segments(h, left, right, grid, n_interior)
                        grid_best = float(totals.min())

                        self.assertLessEqual(best, grid_best + 1e-12)
                        self.assertLessEqual(grid_best - best, max(action_tol, 1e-3))
                        near = np.argwhere(totals <= grid_best + max(action_tol, 1e-3))
                        distances = np.max(np.abs(grid[near] - segment[1:-1]), axis=1)
                        self.assertLessEqual(float(distances.min()), spacing + 1e-12)

    def test_seed_order_does_not_change_result(self):
        h = fk(1.0, 1.0)
        fixed = np.array([True, False, False, True])
        seeds = [np.array([0.0, 0.0, 1.0, 1.0]), np.array([0.0, 1.0, 1.0, 1.0]),
                 np.array([0.0, 0.0, 0.0, 1.0]), np.linspace(0.0, 1.0, 4)]

        results = [solve_from_seeds(h, seeds, fixed, 0.0, 1.0, MinimizeOptions(seed=seed)) for seed in (0, 1, 7)]

        for result in results[1:]:
            self.assertEqual(result.values.tolist(), results[0].values.tolist())

    def test_multistart_finds_mirror_minimizers(self):
        minimizers = multistart_segments(fk(1.0, 1.0), 0.0, 1.0, 1, box=(0.0, 1.0))

        self.assertGreaterEqual(len(minimizers), 2)
        self.assertAlmostEqual(minimizers[0][1], 1.0 - minimizers[1][1], places=8)

    def test_global_minimizers_do_not_cross(self):
        h = fk(1.0, 1.0)
        for n_interior in (1, 2, 3):
            with self.subTest(n=n_interior):
                minimizers = multistart_segments(h, 0.0, 1.0, n_interior, box=(0.0, 1.0))
                best = min(chain_action(h, m) for m in minimizers)
                optimal = [m for m in minimizers if chain_action(h, m) <= best + 1e-9]

                for i, first in enumerate(optimal):
                    for second in optimal[i + 1:]:
                        gap = (second - first)[1:-1]
                        self.assertTrue(np.all(gap >= -1e-12) or np.all(gap <= 1e-12))

    def test_ordered_endpoints_give_ordered_minimizers(self):
        h = fk(1.0, 0.5)
        low, _ = minimize_segment(h, 0.1, 0.6, 3, box=(0.0, 1.0))
        high, _ = minimize_segment(h, 0.2, 0.8, 3, box=(0.0, 1.0))

        self.assertTrue(np.all(high - low >= -1e-9))

    def test_bounds_are_respected(self):
        values = np.array([0.0, 0.5, 0.5, 1.0])
        fixed = np.array([True, False, False, True])

        result = minimize_chain(fk(1.0, 0.0), values, fixed, [0.0, 0.0, 0.0, 0.0], [1.0, 0.2, 1.0, 1.0])

        self.assertLessEqual(result.values[1], 0.2)
        self.assertTrue(result.at_bound[1])
        self.assertLess(result.kkt_residual, 1e-9)

    def test_exhausted_budget_raises_with_iterate(self):
        opts = MinimizeOptions(max_sweeps=1)
        values = np.array([0.0, 0.9, 0.1, 0.8, 1.0])
        fixed = np.array([True, False, False, False, True])

        with self.assertRaises(NonConvergenceError) as ctx:
            minimize_chain(fk(1.0, 1.0), values, fixed, 0.0, 1.0, opts)
        self.assertIsNotNone(ctx.exception.best_iterate)


class TestNeighboringPair(unittest.TestCase):
    def test_standard_pair(self):
        pair = find_neighboring_pair(fk(1.0, 1.0))

        self.assertAlmostEqual(pair.u0, 0.0, places=12)
        self.assertAlmostEqual(pair.u1, 1.0, places=12)
        self.assertAlmostEqual(pair.c, 0.0, places=12)

    def test_second_harmonic_pair(self):
        pair = find_neighboring_pair(fk(1.0, 1.0, harmonic=2))

        self.assertAlmostEqual(pair.u0, 0.0, places=10)
        self.assertAlmostEqual(pair.u1, 0.5, places=10)

    def test_flat_diagonal_is_degenerate(self):
        with self.assertRaises(DegenerateFoliationError):
            find_neighboring_pair(fk(1.0, 0.0))

    def test_rational_pair_segments(self):
        for q, p in ((2, 1), (3, 1)):
            with self.subTest(q=q, p=p):
                _, pair, lower, upper = rational_neighboring_pair(fk(1.0, 0.3), q, p)

                self.assertEqual(lower.size, q + 1)
                self.assertAlmostEqual(lower[-1] - lower[0], p, places=12)
                self.assertAlmostEqual(upper[-1] - upper[0], p, places=12)
                self.assertTrue(np.all(lower <= upper + 1e-9))


class TestHeteroclinic(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.h = fk(1.0, 1.0)
        cls.pair = NeighboringPair(0.0, 1.0, 0.0)
        cls.constants = heteroclinic_constants(cls.h, cls.pair, half_window=200)

    def test_minimizers_are_monotone_and_interior(self):
        for result in (self.constants.up, self.constants.down):
            with self.subTest(direction=result.direction):
                self.assertTrue(result.monotone)
                self.assertTrue(result.interior_strict)
                self.assertLess(result.max_residual, 1e-8)

    def test_symmetric_constants(self):
        self.assertLess(abs(self.constants.c0 - self.constants.c1), 1e-8)
        self.assertGreater(self.constants.c_star, 1e-6)

    def test_value_is_normalized_action(self):
        up = self.constants.up

        self.assertAlmostEqual(compute_I(self.h, self.pair, up.config), up.value, places=12)

    def test_truncation_converges(self):
        doubled = heteroclinic_minimizer(self.h, self.pair, "up", half_window=400)

        self.assertLess(abs(doubled.value - self.constants.c0), 1e-6)

    def test_approximation_window(self):
        epsilon = 1e-3
        n0, window = approximate_heteroclinic_window(self.h, self.pair, epsilon, heteroclinic=self.constants.up)

        self.assertEqual(window.values.size, n0 + 1)
        self.assertLess(abs(partial_action(self.h, self.pair, window) - self.constants.c0), epsilon)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidParameterError):
            heteroclinic_minimizer(self.h, self.pair, "sideways")
        with self.assertRaises(InvalidParameterError):
            heteroclinic_minimizer(self.h, self.pair, "up", half_window=2)
        with self.assertRaises(InvalidParameterError):
            approximate_heteroclinic_window(self.h, self.pair, 0.0, heteroclinic=self.constants.up)

    def test_delta_visits(self):
        visits = delta_visits([0.0, 0.1, 0.5, 0.95, 1.0], self.pair, 0.2, lo=-2)

        self.assertEqual(visits, {"u0": [-2, -1], "u1": [1, 2]})


if __name__ == "__main__":
    unittest.main()

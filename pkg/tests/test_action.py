import math
import unittest

import numpy as np

from twistmin.action import (
    KIND_INTERIOR,
    KIND_MINUS,
    KIND_PLUS,
    BlockConstantCache,
    Configuration,
    ConstantTail,
    Label,
    NeighboringPair,
    PeriodicLift,
    Schedule,
    block_constant_c_plus,
    block_kinds,
    compute_I,
    compute_J,
    normalized_term_a,
    normalized_terms,
    plateau_sequence,
    rotation_number,
    segment_action,
)
from twistmin.exceptions import (
    ConstraintViolationError,
    DomainError,
    InvalidParameterError,
    PreconditionError,
)
from twistmin.genfn import FrenkelKontorovaParams, fk_generating_function

PAIR = NeighboringPair(u0=0.0, u1=1.0, c=0.0)


def fk(coupling=1.0, amplitude=2.0):
    return fk_generating_function(FrenkelKontorovaParams(coupling, amplitude))


def step_schedule(rho=0.05):
    return Schedule(k=[0, 4, 8, 12], rho=[rho] * 4, labels=["u0", "u0", "u1", "u1"])


class TestFunctionals(unittest.TestCase):
    def test_segment_action(self):
        self.assertAlmostEqual(segment_action(fk(1.0, 0.0), [0.0, 0.5, 1.0]), 0.25, places=12)
        with self.assertRaises(InvalidParameterError):
            segment_action(fk(), [0.0])

    def test_normalized_term_subtracts_the_pair_constant(self):
        h = fk(1.0, 0.0)
        shifted = NeighboringPair(u0=0.0, u1=1.0, c=0.1)

        self.assertAlmostEqual(normalized_term_a(h, shifted, 0.0, 0.5), 0.125 - 0.1, places=12)
        self.assertEqual(normalized_term_a(h, PAIR, 0.0, 0.0), 0.0)

    def test_resting_steps_are_exactly_zero(self):
        terms = normalized_terms(fk(), PAIR, [0.0, 0.0, 0.3, 1.0, 1.0])

        self.assertEqual(terms[0], 0.0)
        self.assertEqual(terms[-1], 0.0)
        self.assertGreater(terms[1], 0.0)

    def test_constant_configuration_has_zero_action(self):
        config = Configuration(0, np.zeros(5), ConstantTail(Label.U0), ConstantTail(Label.U0))

        self.assertEqual(compute_I(fk(), PAIR, config), 0.0)

    def test_padding_leaves_action_unchanged(self):
        h = fk()
        config = Configuration(-2, [0.0, 0.1, 0.5, 0.9, 1.0], ConstantTail(Label.U0), ConstantTail(Label.U1))

        padded = config.padded(5, 7, PAIR)

        self.assertAlmostEqual(compute_I(h, PAIR, padded), compute_I(h, PAIR, config), places=14)
        self.assertGreater(compute_I(h, PAIR, config), 0.0)

    def test_periodic_tails(self):
        window = Configuration(0, [0.0, 0.5, 1.0], PeriodicLift(2, 1), PeriodicLift(2, 1))
        flat = Configuration(0, [0.0, 0.0], PeriodicLift(1, 0), PeriodicLift(1, 0))

        self.assertEqual(compute_I(fk(), PAIR, window), math.inf)
        with self.assertRaises(DomainError):
            compute_I(fk(), PAIR, flat)

    def test_open_tail_is_outside_the_domain(self):
        with self.assertRaises(DomainError):
            compute_I(fk(), PAIR, Configuration(0, [0.0, 0.2]))

    def test_rotation_number(self):
        lifted = Configuration(0, [0.0, 0.5, 1.0], PeriodicLift(2, 1), PeriodicLift(2, 1))
        walk = Configuration(0, 0.25 * np.arange(41))

        self.assertEqual(rotation_number(lifted, 10), (0.5, 0.5))
        plus, minus = rotation_number(walk, 10)
        self.assertAlmostEqual(plus, 0.25, places=12)
        self.assertAlmostEqual(minus, 0.25, places=12)
        with self.assertRaises(InvalidParameterError):
            rotation_number(walk, 0)


class TestSchedule(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(InvalidParameterError):
            Schedule(k=[1, 4], rho=[0.1, 0.1], labels=["u0", "u0"])
        with self.assertRaises(InvalidParameterError):
            Schedule(k=[0, 4, 4], rho=[0.1] * 3, labels=["u0"] * 3)
        with self.assertRaises(InvalidParameterError):
            Schedule(k=[0, 4], rho=[0.1, 0.0], labels=["u0", "u0"])
        with self.assertRaises(PreconditionError):
            Schedule(k=[0, 4, 8], rho=[0.1] * 3, labels=["u0", "u1", "u0"])
        with self.assertRaises(InvalidParameterError):
            step_schedule(rho=0.5).validate(PAIR)

    def test_blocks_and_windows(self):
        schedule = step_schedule()

        self.assertEqual(schedule.n_blocks, 3)
        self.assertEqual(schedule.transitions, 1)
        self.assertEqual(block_kinds(schedule), [KIND_INTERIOR, KIND_PLUS, KIND_INTERIOR])
        self.assertEqual(schedule.window(0, PAIR), (0.0, 0.05))
        self.assertEqual(schedule.window(3, PAIR), (0.95, 1.0))

    def test_down_block_kind(self):
        schedule = Schedule(k=[0, 3, 6, 9], rho=[0.05] * 4, labels=["u1", "u1", "u0", "u0"])

        self.assertEqual(block_kinds(schedule)[1], KIND_MINUS)

    def test_from_dict_restores_schedule(self):
        schedule = step_schedule()

        self.assertEqual(Schedule.from_dict(schedule.to_dict()), schedule)
        with self.assertRaises(InvalidParameterError):
            Schedule.from_dict({"k": [0]})


class TestRenormalizedAction(unittest.TestCase):
    def test_block_constants_are_mirror_symmetric(self):
        h = fk()
        cache = BlockConstantCache()

        up, up_segment = block_constant_c_plus(h, PAIR, 4, 0.05, 0.05, "up", cache=cache)
        down, _ = block_constant_c_plus(h, PAIR, 4, 0.05, 0.05, "down", cache=cache)

        self.assertAlmostEqual(up, down, places=9)
        self.assertEqual(len(cache), 2)
        self.assertLessEqual(up_segment[0], 0.05 + 1e-12)
        self.assertGreaterEqual(up_segment[-1], 0.95 - 1e-12)
        again, _ = block_constant_c_plus(h, PAIR, 4, 0.05, 0.05, "up", cache=cache)
        self.assertEqual(again, up)
        self.assertEqual(len(cache), 2)

    def test_plateau_sequence_has_vanishing_terms(self):
        h = fk()
        schedule = step_schedule()
        cache = BlockConstantCache()

        config = plateau_sequence(h, PAIR, schedule, margin=2, cache=cache)
        report = compute_J(h, PAIR, schedule, config, cache=cache)

        self.assertEqual(config.lo, -2)
        self.assertEqual(config.hi, 14)
        self.assertEqual(len(report.per_block), schedule.n_blocks + 2)
        self.assertEqual(report.per_block[0].value, 0.0)
        self.assertEqual(len(report.transition_terms), 1)
        self.assertAlmostEqual(report.transition_terms[0].value, 0.0, places=10)
        self.assertGreaterEqual(report.total, -1e-10)

    def test_free_block_constant_has_closed_form(self):
        h = fk(1.0, 0.0)
        rho_i, rho_next = 0.05, 0.1
        for spacing in (2, 4, 6):
            with self.subTest(spacing=spacing):
                value, segment = block_constant_c_plus(h, PAIR, spacing, rho_i, rho_next, "up",
                                                       cache=BlockConstantCache())

                distance = PAIR.width - rho_i - rho_next
                self.assertAlmostEqual(value, distance ** 2 / (2 * spacing), places=10)
                self.assertTrue(np.allclose(segment, np.linspace(rho_i, PAIR.u1 - rho_next, spacing + 1), atol=1e-7))

    def test_renormalized_action_is_bounded_below(self):
        h = fk()
        schedule = step_schedule()
        cache = BlockConstantCache()
        bound = -2.0 * PAIR.strip_lipschitz(h) * sum(schedule.rho)
        plateau = plateau_sequence(h, PAIR, schedule, margin=2, cache=cache)
        rng = np.random.default_rng(3)

        for trial in range(300):
            if trial % 2:
                values = rng.uniform(PAIR.u0, PAIR.u1, plateau.values.size)
            else:
                values = np.clip(plateau.values + rng.normal(0.0, 0.02, plateau.values.size), PAIR.u0, PAIR.u1)
            for k, rho, label in zip(schedule.k, schedule.rho, schedule.labels):
                offset = rng.uniform(0.0, rho)
                values[k - plateau.lo] = PAIR.u0 + offset if label is Label.U0 else PAIR.u1 - offset
            config = Configuration(plateau.lo, values, ConstantTail(Label.U0), ConstantTail(Label.U1))

            report = compute_J(h, PAIR, schedule, config, cache=cache)

            self.assertGreaterEqual(report.total, bound - 1e-10)

    def test_renormalized_and_normalized_actions_differ_by_block_constants(self):
        h = fk()
        schedule = step_schedule()
        cache = BlockConstantCache()
        plateau = plateau_sequence(h, PAIR, schedule, margin=2, cache=cache)
        rng = np.random.default_rng(4)

        for trial in range(20):
            values = np.clip(plateau.values + rng.normal(0.0, 0.01, plateau.values.size), PAIR.u0, PAIR.u1)
            for k, label in zip(schedule.k, schedule.labels):
                values[k - plateau.lo] = PAIR.level(label)
            config = Configuration(plateau.lo, values, ConstantTail(Label.U0), ConstantTail(Label.U1))

            report = compute_J(h, PAIR, schedule, config, cache=cache)

            correction = sum((term.end - term.start) * PAIR.c - term.constant for term in report.transition_terms)
            with self.subTest(trial=trial):
                self.assertAlmostEqual(report.total, compute_I(h, PAIR, config) + correction, places=10)

    def test_window_violation_raises(self):
        h = fk()
        schedule = step_schedule()
        values = np.concatenate((np.zeros(8), np.ones(5)))
        values[4] = 0.2
        config = Configuration(0, values, ConstantTail(Label.U0), ConstantTail(Label.U1))

        with self.assertRaises(ConstraintViolationError) as ctx:
            compute_J(h, PAIR, schedule, config, cache=BlockConstantCache())
        self.assertEqual(ctx.exception.index, 4)

    def test_mismatched_tail_raises(self):
        schedule = step_schedule()
        config = Configuration(0, np.concatenate((np.zeros(8), np.ones(5))),
                               ConstantTail(Label.U0), ConstantTail(Label.U0))

        with self.assertRaises(DomainError):
            compute_J(fk(), PAIR, schedule, config, cache=BlockConstantCache())


if __name__ == "__main__":
    unittest.main()

import math
import unittest
from unittest.mock import patch

import numpy as np

from twistmin.action import BlockConstantCache, Configuration, ConstantTail, Label, Schedule, compute_J
from twistmin.exceptions import ConstructionError, DistinctnessError, InvalidParameterError, PreconditionError
from twistmin.genfn import FrenkelKontorovaParams, fk_generating_function
from twistmin.minimize import (
    GapReport,
    detect_gap,
    find_neighboring_pair,
    heteroclinic_constants,
    heteroclinic_minimizer,
    phi_bounds,
)
from twistmin.transition import (
    SPACING_VERDICT,
    ScheduleBlueprint,
    build_schedule,
    count_transitions,
    increasing_spacing_schedule,
    minimize_transition,
    multi_schedule_distinctness,
    pairwise_distinctness,
    sequence_schedule,
    verify_blueprint,
)
from twistmin.transition.distinctness import has_increasing_spacing

SEQUENCES = [[0, 1, 2, 3, 4, 5], [0, 1, 2, 4, 5, 6], [0, 1, 2, 5, 6, 7]]


class TransitionFixture(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.h = fk_generating_function(FrenkelKontorovaParams(1.0, 2.0))
        cls.pair = find_neighboring_pair(cls.h)
        cls.constants = heteroclinic_constants(cls.h, cls.pair, half_window=30)
        cls.gap = detect_gap(cls.h, cls.pair, fiber_samples=64, half_window=30, constants=cls.constants)
        cls.cache = BlockConstantCache()

    @classmethod
    def build(cls, n_blocks, pattern="alternating"):
        blueprint = ScheduleBlueprint(epsilon=0.05, n_blocks=n_blocks, pattern=pattern,
                                      max_plateau_spacing=12, clamp_plateau_spacing=True)
        return build_schedule(cls.h, cls.pair, cls.gap, blueprint, constants=cls.constants)


class TestScheduleConstruction(TransitionFixture):
    def test_alternating_labels(self):
        blueprint = ScheduleBlueprint(epsilon=0.05, n_blocks=5)

        self.assertEqual([label.value for label in blueprint.labels()],
                         ["u0", "u0", "u1", "u1", "u0", "u0"])

    def test_blueprint_validation(self):
        with self.assertRaises(InvalidParameterError):
            ScheduleBlueprint(epsilon=0.0, n_blocks=3)
        with self.assertRaises(InvalidParameterError):
            ScheduleBlueprint(epsilon=0.05, n_blocks=3, pattern="zigzag").labels()
        with self.assertRaises(InvalidParameterError):
            ScheduleBlueprint(epsilon=0.05, n_blocks=3, pattern=["u0", "u1"]).labels()
        with self.assertRaises(InvalidParameterError):
            ScheduleBlueprint(epsilon=0.05, n_blocks=3, min_plateau_spacing=8, max_plateau_spacing=4)

    def test_schedule_satisfies_construction_inequalities(self):
        schedule = self.build(3)
        lipschitz = self.pair.lipschitz_bound(self.h)
        c_star = self.gap.c0 + self.gap.c1

        verdicts = verify_blueprint(schedule, lipschitz, c_star, self.pair, self.gap)

        self.assertEqual(verdicts.pop(SPACING_VERDICT), not schedule.diagnostics["plateau_spacing_clamped"])
        self.assertTrue(all(verdicts.values()), verdicts)
        self.assertEqual(schedule.k[0], 0)
        self.assertEqual(schedule.transitions, 1)
        self.assertTrue(all(r < self.pair.half_width for r in schedule.rho))
        self.assertEqual(set(schedule.diagnostics["plateau_blocks"]), {"0", "2"})

    def test_interior_spacings_meet_the_loop_bound(self):
        blueprint = ScheduleBlueprint(epsilon=0.005, n_blocks=3, pattern=["u0"] * 4)

        schedule = build_schedule(self.h, self.pair, self.gap, blueprint, constants=self.constants)

        lipschitz, c_star = schedule.diagnostics["lipschitz"], schedule.diagnostics["c_star"]
        blocks = schedule.diagnostics["plateau_blocks"]
        self.assertEqual(set(blocks), {"0", "1", "2"})
        for b, entry in blocks.items():
            b = int(b)
            with self.subTest(block=b):
                phi = phi_bounds(self.h, self.pair, entry["delta"], blueprint.phi_n_max)
                required = math.ceil((c_star / 2 + lipschitz * (schedule.rho[b] + schedule.rho[b + 1])) / phi.lower)
                self.assertGreater(phi.lower, 0.0)
                self.assertEqual(entry["required"], required)
                self.assertGreaterEqual(schedule.spacing(b), required)
                self.assertFalse(entry["clamped"])
        self.assertTrue(schedule.diagnostics["verdicts"][SPACING_VERDICT])
        self.assertFalse(schedule.diagnostics["plateau_spacing_clamped"])

    def test_spacing_above_the_cap_raises(self):
        blueprint = ScheduleBlueprint(epsilon=0.005, n_blocks=3, pattern=["u0"] * 4, max_plateau_spacing=4)

        with self.assertRaises(ConstructionError) as ctx:
            build_schedule(self.h, self.pair, self.gap, blueprint, constants=self.constants)
        self.assertEqual(ctx.exception.inequality, "(d)")

    def test_clamping_is_recorded(self):
        blueprint = ScheduleBlueprint(epsilon=0.005, n_blocks=3, pattern=["u0"] * 4, max_plateau_spacing=4,
                                      clamp_plateau_spacing=True)

        schedule = build_schedule(self.h, self.pair, self.gap, blueprint, constants=self.constants)

        self.assertEqual([schedule.spacing(b) for b in range(3)], [4, 4, 4])
        self.assertTrue(schedule.diagnostics["plateau_spacing_clamped"])
        self.assertFalse(schedule.diagnostics["verdicts"][SPACING_VERDICT])
        for entry in schedule.diagnostics["plateau_blocks"].values():
            self.assertTrue(entry["clamped"])
            self.assertGreater(entry["required"], 4)

    def test_empty_gap_is_a_precondition_failure(self):
        empty = GapReport(c0=self.gap.c0, c1=self.gap.c1, margin=self.gap.margin, half_window=30)

        with self.assertRaises(PreconditionError):
            build_schedule(self.h, self.pair, empty, ScheduleBlueprint(epsilon=0.05, n_blocks=3))

    def test_tiny_epsilon_cannot_reach_a_gap_face(self):
        with self.assertRaises(ConstructionError) as ctx:
            build_schedule(self.h, self.pair, self.gap, ScheduleBlueprint(epsilon=1e-9, n_blocks=3),
                           constants=self.constants)
        self.assertEqual(ctx.exception.inequality, "(p1)")


class TestTransitionMinimizers(TransitionFixture):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.results = {}
        for n_blocks in (3, 5, 7):
            schedule = cls.build(n_blocks)
            cls.results[schedule.transitions] = minimize_transition(cls.h, cls.pair, schedule, cache=cls.cache)

    def test_transition_counts(self):
        self.assertEqual(sorted(self.results), [1, 2, 3])

    def test_minimizers_are_interior_orbits(self):
        lipschitz = self.pair.lipschitz_bound(self.h)
        for transitions, result in self.results.items():
            with self.subTest(transitions=transitions):
                self.assertTrue(result.interior, result.contacts)
                self.assertEqual(result.transitions, transitions)
                self.assertEqual(count_transitions(result.config, self.pair, min(result.schedule.rho)), transitions)
                self.assertLess(result.max_residual, 1e-6)
                self.assertLessEqual(result.action_value, lipschitz * sum(result.schedule.rho) + 1e-12)
                for term in result.report.transition_terms:
                    self.assertGreaterEqual(term.value, -1e-8)

    def test_transition_blocks_are_monotone(self):
        result = self.results[2]

        self.assertEqual(len(result.block_monotone), 2)
        for verdict in result.block_monotone:
            self.assertTrue(verdict["monotone"], verdict)
        self.assertEqual([v["direction"] for v in result.block_monotone], ["up", "down"])

    def test_action_matches_recomputation(self):
        result = self.results[1]

        report = compute_J(self.h, self.pair, result.schedule, result.config, cache=self.cache)

        self.assertEqual(report.total, result.action_value)

    def test_result_serializes(self):
        data = self.results[1].to_dict()
        rows = self.results[1].site_rows()

        self.assertTrue(data["interior"])
        self.assertEqual(len(rows), self.results[1].config.values.size)
        self.assertEqual(sum(1 for row in rows if row[2]), len(self.results[1].schedule.k))

    def test_single_transition_follows_the_heteroclinic(self):
        result = self.results[1]
        heteroclinic = self.constants.up.config
        middle = 0.5 * (self.pair.u0 + self.pair.u1)

        def first_above_middle(config):
            return config.lo + int(np.argmax(config.values > middle))

        shift = first_above_middle(result.config) - first_above_middle(heteroclinic)
        sites = [s for s in range(result.config.lo, result.config.hi + 1)
                 if heteroclinic.lo <= s - shift <= heteroclinic.hi]
        difference = max(abs(result.config[s] - heteroclinic[s - shift]) for s in sites)

        self.assertGreater(len(sites), 20)
        self.assertLess(difference, 1e-6)

    def test_dropping_the_last_block_keeps_the_minimizer(self):
        full = self.results[2]
        schedule = full.schedule
        truncated = Schedule(k=schedule.k[:-1], rho=schedule.rho[:-1], labels=schedule.labels[:-1])

        result = minimize_transition(self.h, self.pair, truncated, cache=self.cache)

        sites = range(max(full.config.lo, result.config.lo), truncated.k[-1] + 1)
        difference = max(abs(full.config[s] - result.config[s]) for s in sites)
        self.assertEqual(result.transitions, full.transitions)
        self.assertLess(difference, 1e-6)

    def test_narrow_windows_touch_the_faces(self):
        heteroclinic = heteroclinic_minimizer(self.h, self.pair, "up", half_window=30)
        site = max(v for v in heteroclinic.config.values if v < 0.5 * (self.pair.u0 + self.pair.u1))
        rho = site - self.pair.u0
        schedule = Schedule(k=[0, 4, 5, 9], rho=[rho] * 4, labels=["u0", "u0", "u1", "u1"])

        result = minimize_transition(self.h, self.pair, schedule, cache=self.cache)

        self.assertFalse(result.interior)
        self.assertTrue(result.contacts)
        self.assertEqual(len(result.surgery), len(result.contacts))


class TestDistinctness(TransitionFixture):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.base = increasing_spacing_schedule(cls.build(7))

    def test_base_schedule_spacings_increase(self):
        self.assertTrue(has_increasing_spacing(self.base))
        self.assertEqual(self.base.labels, tuple(ScheduleBlueprint(epsilon=0.05, n_blocks=7).labels()))

    def test_sequence_schedule(self):
        schedule = sequence_schedule(self.base, SEQUENCES[1])

        self.assertEqual(schedule.k, tuple(self.base.k[j] for j in SEQUENCES[1]))
        self.assertEqual(schedule.rho, self.base.rho[:6])
        self.assertEqual(schedule.labels, self.base.labels[:6])
        with self.assertRaises(InvalidParameterError):
            sequence_schedule(self.base, [1, 2, 3])
        with self.assertRaises(InvalidParameterError):
            sequence_schedule(self.base, [0, 2, 2])

    def test_distinct_sequences_give_distinct_minimizers(self):
        results = multi_schedule_distinctness(self.h, self.pair, self.base, SEQUENCES, cache=self.cache)

        entries = pairwise_distinctness(results, self.pair, 0.5 * min(self.base.rho))
        self.assertEqual(len(entries), 3)
        for entry in entries:
            self.assertTrue(entry["distinct"], entry)

    def test_identical_sequences_reproduce_results(self):
        first, second = multi_schedule_distinctness(self.h, self.pair, self.base, [SEQUENCES[0], SEQUENCES[0]],
                                                    cache=self.cache)

        self.assertEqual(first.config.lo, second.config.lo)
        self.assertTrue(np.array_equal(first.config.values, second.config.values))

    def test_coinciding_minimizers_of_different_sequences_raise(self):
        shared = minimize_transition(self.h, self.pair, sequence_schedule(self.base, SEQUENCES[0]), cache=self.cache)

        with patch("twistmin.transition.distinctness.minimize_transition", return_value=shared):
            with self.assertRaises(DistinctnessError) as ctx:
                multi_schedule_distinctness(self.h, self.pair, self.base, SEQUENCES[:2], cache=self.cache)

        self.assertEqual(ctx.exception.status, 4)
        self.assertEqual([(e["a"], e["b"]) for e in ctx.exception.pairs], [(0, 1)])
        self.assertEqual(ctx.exception.pairs[0]["sup_difference"], 0.0)
        self.assertEqual(len(ctx.exception.results), 2)

    def test_base_without_increasing_spacing_raises(self):
        flat = Schedule(k=[0, 4, 8], rho=[0.01] * 3, labels=["u0"] * 3)

        with self.assertRaises(InvalidParameterError):
            multi_schedule_distinctness(self.h, self.pair, flat, [[0, 1]])


class TestCountTransitions(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.h = fk_generating_function(FrenkelKontorovaParams(1.0, 2.0))
        cls.pair = find_neighboring_pair(cls.h)

    def test_constant_configuration_has_none(self):
        config = Configuration(0, np.full(9, self.pair.u0), ConstantTail(Label.U0), ConstantTail(Label.U0))

        self.assertEqual(count_transitions(config, self.pair, 0.1), 0)

    def test_heteroclinic_has_one(self):
        for direction in ("up", "down"):
            with self.subTest(direction=direction):
                heteroclinic = heteroclinic_minimizer(self.h, self.pair, direction, half_window=30)

                self.assertEqual(count_transitions(heteroclinic.config, self.pair, 0.1), 1)

    def test_excursion_counts_both_passages(self):
        values = np.array([0.0, 0.02, 0.5, 0.97, 1.0, 0.6, 0.3, 0.01])
        config = Configuration(0, values, ConstantTail(Label.U0), ConstantTail(Label.U0))

        self.assertEqual(count_transitions(config, self.pair, 0.05), 2)

    def test_visits_inside_the_collar_only_do_not_count(self):
        values = np.array([0.0, 0.3, 0.5, 0.7, 0.5, 0.0])
        config = Configuration(0, values, ConstantTail(Label.U0), ConstantTail(Label.U0))

        self.assertEqual(count_transitions(config, self.pair, 0.1), 0)

    def test_invalid_clearance_raises(self):
        config = Configuration(0, np.zeros(3), ConstantTail(Label.U0), ConstantTail(Label.U0))

        with self.assertRaises(InvalidParameterError):
            count_transitions(config, self.pair, 0.0)


if __name__ == "__main__":
    unittest.main()

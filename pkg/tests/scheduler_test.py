from fractions import Fraction
from math import sqrt
from unittest import TestCase

import numpy as np

from decoupling.errors import ConfigError
from decoupling.scheduler import (RoundRobin, Scripted, distribution, fairness_epsilon, is_deterministic, next_agent,
                                  period, round_robin, scheduler_from_json, scheduler_to_json, scripted, uniform,
                                  weighted)


# mypy: ignore-errors
class TestScheduler(TestCase):

    def test_distribution(self):
        third = Fraction(1, 3)
        test_cases = [
            ("uniform", uniform(3), 5, {0: third, 1: third, 2: third}),
            ("weighted", weighted([1, 3]), 0, {0: Fraction(1, 4), 1: Fraction(3, 4)}),
            ("round robin", round_robin(2), 3, {1: Fraction(1)}),
            ("round robin with order", round_robin(3, [2, 0, 1]), 0, {2: Fraction(1)}),
            ("scripted wraps around", scripted([0, 0, 1]), 4, {0: Fraction(1)}),
        ]
        for case, spec, step, expect in test_cases:
            with self.subTest(msg=case):
                self.assertEqual(expect, distribution(spec, step))

    def test_period_and_determinism(self):
        test_cases = [
            (uniform(2), 1, False, Fraction(1, 2)),
            (weighted([1, 3]), 1, False, Fraction(1, 4)),
            (round_robin(3), 3, True, None),
            (scripted([0, 1, 1, 0, 1]), 5, True, None),
        ]
        for spec, expect_period, deterministic, epsilon in test_cases:
            with self.subTest(spec=spec):
                self.assertEqual(expect_period, period(spec))
                self.assertEqual(deterministic, is_deterministic(spec))
                self.assertEqual(epsilon, fairness_epsilon(spec))

    def test_invalid_specs(self):
        test_cases = [
            ("no agents", lambda: uniform(0)),
            ("zero weight", lambda: weighted([1, 0])),
            ("order not a permutation", lambda: round_robin(2, [0, 0])),
            ("empty script", lambda: scripted([], 2)),
            ("script names a missing agent", lambda: scripted([0, 3], 2)),
        ]
        for case, build in test_cases:
            with self.subTest(msg=case):
                self.assertRaises(ConfigError, build)

    def test_next_agent_frequencies(self):
        rng = np.random.default_rng(11)
        draws = 4000
        counts = [0, 0]
        for _ in range(draws):
            counts[next_agent(weighted([1, 3]), [], rng)] += 1
        error = 3 * sqrt(0.25 * 0.75 / draws)
        self.assertLess(abs(counts[1] / draws - 0.75), error)

    def test_next_agent_follows_history_length(self):
        rng = np.random.default_rng(0)
        self.assertEqual([0, 1, 0, 1], [next_agent(round_robin(2), [0] * k, rng) for k in range(4)])

    def test_json_is_one_based(self):
        self.assertEqual({"kind": "roundrobin", "n": 2, "order": [2, 1]}, scheduler_to_json(round_robin(2, [1, 0])))
        self.assertEqual(RoundRobin((1, 0)), scheduler_from_json({"kind": "roundrobin", "order": [2, 1]}).kind)
        spec = scheduler_from_json({"kind": "scripted", "seq": [1, 2, 2]})
        self.assertEqual(Scripted((0, 1, 1)), spec.kind)
        self.assertEqual(2, spec.n_agents)

    def test_json_round_trip(self):
        for spec in (uniform(3), weighted([1, Fraction(1, 2)]), round_robin(3, [2, 1, 0]), scripted([1, 0, 0], 3)):
            with self.subTest(spec=spec):
                self.assertEqual(spec, scheduler_from_json(scheduler_to_json(spec)))

    def test_json_errors(self):
        test_cases = [
            ({"kind": "uniform"}, "scheduler.n"),
            ({"kind": "weighted", "weights": ["x"]}, "scheduler.weights"),
            ({"kind": "scripted", "seq": [0, 1]}, "scheduler.seq"),
            ({"kind": "lottery", "n": 2}, "scheduler.kind"),
        ]
        for data, where in test_cases:
            with self.subTest(data=data):
                self.assertRaisesRegex(ConfigError, where, scheduler_from_json, data)

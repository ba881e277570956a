from fractions import Fraction
from unittest import TestCase

import numpy as np

from decoupling.distributions import condition, dirac, mixture, push, sample, total_mass, uniform


# mypy: ignore-errors
class TestDistributions(TestCase):

    def test_uniform_and_mixture(self):
        half = Fraction(1, 2)
        self.assertEqual({"a": half, "b": half}, uniform(["a", "b", "a"]))
        self.assertRaises(ValueError, uniform, [])
        mixed = mixture([(half, dirac("a")), (half, uniform(["a", "b"]))])
        self.assertEqual({"a": Fraction(3, 4), "b": Fraction(1, 4)}, mixed)
        self.assertEqual(Fraction(1), total_mass(mixed))

    def test_push_and_condition(self):
        dist = uniform([1, 2, 3, 4])
        self.assertEqual({0: Fraction(1, 2), 1: Fraction(1, 2)}, push(dist, lambda v: v % 2))
        self.assertEqual({2: Fraction(1, 2), 4: Fraction(1, 2)}, condition(dist, lambda v: v % 2 == 0))
        self.assertIsNone(condition(dist, lambda v: v > 4))

    def test_sample_uses_one_draw(self):
        for seed in range(5):
            with self.subTest(seed=seed):
                drawn, reference = np.random.default_rng(seed), np.random.default_rng(seed)
                self.assertEqual("x", sample(dirac("x"), drawn))
                reference.random()
                self.assertEqual(reference.random(), drawn.random())

    def test_sample_follows_the_cumulative_order(self):
        dist = {"a": Fraction(1, 4), "b": Fraction(0), "c": Fraction(3, 4)}
        for seed in range(20):
            with self.subTest(seed=seed):
                u = np.random.default_rng(seed).random()
                self.assertEqual("a" if u < 0.25 else "c", sample(dist, np.random.default_rng(seed)))

    def test_sample_frequencies(self):
        rng = np.random.default_rng(11)
        dist = {0: Fraction(1, 3), 1: Fraction(2, 3)}
        draws = [sample(dist, rng) for _ in range(6000)]
        # within 3 standard errors of 2/3
        self.assertAlmostEqual(2 / 3, sum(draws) / len(draws), delta=3 * (2 / 9 / 6000) ** 0.5)

import json
from fractions import Fraction
from math import sqrt
from unittest import TestCase

from decoupling.composition import (Composition, exact_step_distribution, initial_distribution, memory_digest, run,
                                    solo, trace_to_jsonl, trial_seed)
from decoupling.distributions import total_mass
from decoupling.errors import ConfigError
from decoupling.gallery import hexagon_graph, two_lobe_graph, fork_graph, self_loop_graph
from decoupling.objectives import Buchi, Safety
from decoupling.policies import (CoBuchiConventionPolicy, ExpDwellPolicy, det_defeat_policies,
                                 memoryless_cobuchi_counterexample, shortest_path_policy)
from decoupling.scheduler import round_robin, uniform, weighted
from decoupling.shield import build_shield


# mypy: ignore-errors

def compositions() -> list[tuple[str, Composition]]:
    hexagon = hexagon_graph("t1")
    lobes = two_lobe_graph()
    fig2 = fork_graph()
    fig3 = self_loop_graph()
    return [
        ("shortest paths", Composition(hexagon_graph(), (shortest_path_policy(hexagon_graph(), [0]),
                                                       shortest_path_policy(hexagon_graph(), [3])), uniform(2))),
        ("co-Buchi conventions", Composition(hexagon, (CoBuchiConventionPolicy(hexagon, [1, 2, 3, 4, 5]),
                                                       CoBuchiConventionPolicy(hexagon, [1, 2, 4, 5])), uniform(2))),
        ("dwelling under weights", Composition(lobes, (ExpDwellPolicy(lobes, 0, max_exponent=3),
                                                       ExpDwellPolicy(lobes, 1, max_exponent=3)), weighted([1, 2]))),
        ("known schedule", Composition(fig2, det_defeat_policies(fig2, round_robin(2)), round_robin(2))),
        ("memoryless pair", Composition(fig3, memoryless_cobuchi_counterexample(fig3), uniform(2))),
    ]


class TestComposition(TestCase):

    def test_runs_are_reproducible(self):
        for case, comp in compositions():
            with self.subTest(msg=case):
                self.assertEqual(run(comp, 100), run(comp, 100))
                self.assertEqual(101, len(run(comp, 100).vertices))

    def test_runs_follow_edges(self):
        for case, comp in compositions():
            with self.subTest(msg=case):
                trace = run(comp, 300)
                for step in trace.steps:
                    self.assertTrue(comp.graph.has_edge(step.vertex_before, step.vertex_after))
                    self.assertEqual(step.proposals[step.scheduled], step.vertex_after)

    def test_exact_step_is_a_distribution(self):
        for case, comp in compositions():
            with self.subTest(msg=case):
                frontier = list(initial_distribution(comp))
                seen = set(frontier)
                while frontier and len(seen) < 500:
                    state = frontier.pop()
                    step = exact_step_distribution(comp, state)
                    self.assertEqual(Fraction(1), total_mass(step))
                    for successor in step:
                        if successor not in seen:
                            seen.add(successor)
                            frontier.append(successor)

    def test_exact_step(self):
        fig2 = fork_graph()
        known = Composition(fig2, det_defeat_policies(fig2, round_robin(2)), round_robin(2))
        self.assertEqual({(1, (1, 1), 0): Fraction(1)}, exact_step_distribution(known, (0, (0, 0), 0)))
        fig3 = self_loop_graph()
        pair = Composition(fig3, memoryless_cobuchi_counterexample(fig3), uniform(2))
        half = Fraction(1, 2)
        self.assertEqual({(0, (None, None), 3): half, (0, (None, None), 2): half},
                         exact_step_distribution(pair, (0, (None, None), 1)))

    def test_scheduler_frequency_at_the_fork(self):
        fig3 = self_loop_graph()
        trace = run(Composition(fig3, memoryless_cobuchi_counterexample(fig3), uniform(2), seed=5), 6000)
        forks = [step.vertex_after for step in trace.steps if step.vertex_before == 1]
        left = sum(1 for v in forks if v == 3)
        error = 3 * sqrt(0.25 / len(forks))
        self.assertGreater(len(forks), 1900)
        self.assertLess(abs(left / len(forks) - 0.5), error)

    def test_trace_to_jsonl(self):
        fig2 = fork_graph()
        trace = run(Composition(fig2, det_defeat_policies(fig2, round_robin(2)), round_robin(2)), 2)
        lines = trace_to_jsonl(trace, fig2).splitlines()
        self.assertEqual(2, len(lines))
        record = json.loads(lines[1])
        self.assertEqual(["after", "before", "memory_digest", "overridden", "proposals", "scheduled", "step"],
                         sorted(record))
        self.assertEqual(1, record["step"])
        self.assertEqual(2, record["scheduled"])
        self.assertEqual(["a1", "v"], record["proposals"])
        self.assertEqual("v", record["after"])
        self.assertFalse(record["overridden"])
        self.assertEqual([f"{memory_digest(0):016x}"] * 2, record["memory_digest"])

    def test_memory_digest_is_stable(self):
        self.assertEqual(memory_digest((1, (2, 3))), memory_digest((1, (2, 3))))
        self.assertNotEqual(memory_digest(0), memory_digest(1))
        self.assertLess(memory_digest("anything"), 2 ** 64)

    def test_trial_seeds_differ(self):
        self.assertEqual(trial_seed(3, 1), trial_seed(3, 1))
        self.assertEqual(10, len({trial_seed(3, k) for k in range(10)}))

    def test_invalid_compositions(self):
        fig2 = fork_graph()
        back = shortest_path_policy(fig2, [0])
        shield = build_shield(fig2, [Safety(frozenset({0, 2})), Buchi(frozenset({2}))])
        test_cases = [
            ("scheduler size", lambda: Composition(fig2, (back,), uniform(2))),
            ("shield size", lambda: Composition(fig2, (back, back, back), uniform(3), shield)),
        ]
        for case, build in test_cases:
            with self.subTest(msg=case):
                self.assertRaises(ConfigError, build)

    def test_solo(self):
        hexagon = hexagon_graph()
        trace = run(solo(hexagon, shortest_path_policy(hexagon, [0])), 4)
        self.assertEqual([2, 1, 0, 0, 0], trace.vertices)

from fractions import Fraction
from unittest import TestCase

import networkx as nx

from decoupling import gallery
from decoupling.analysis import (AllOf, BuchiVisits, CleanSuffix, Outcome, ParityTail, Stabilized, almost_sure_verdict,
                                 build_global_chain, check_consensus_claims, check_row_stochastic, convergence_csv,
                                 convergence_time, finite_horizon_predicate, first_stable_step, monte_carlo_estimate,
                                 periodic, seeded, verdict_to_json, wilson_interval)
from decoupling.composition import Composition, StepRecord, Trace, run, solo
from decoupling.errors import ClaimViolated, NotDirectlyConvertible, StateCapExceeded
from decoupling.gallery import hexagon_graph, fork_graph, self_loop_graph
from decoupling.graph import from_edges
from decoupling.objectives import Buchi, CoBuchi, Conjunction, Parity, Reachability, Safety
from decoupling.policies import (CoBuchiConventionPolicy, MemorylessPolicy, det_defeat_policies,
                                 memoryless_cobuchi_counterexample, shortest_path_policy)
from decoupling.scheduler import round_robin, uniform
from decoupling.utilities import build_composition


# mypy: ignore-errors

def make_trace(vertices, digest=(0,)):
    steps = tuple(StepRecord(a, (b,), 0, b, False, digest) for a, b in zip(vertices, vertices[1:]))
    return Trace(steps, len(steps), digest, (0, (None,), vertices[-1]))


def brute_force_bsccs(chain):
    reach = [frozenset({s}) | frozenset(nx.descendants(chain.digraph, s)) for s in range(len(chain))]
    return sorted({reach[s] for s in range(len(chain)) if all(s in reach[t] for t in reach[s])}, key=min)


def cobuchi_pair(on_conflict="resample"):
    graph = hexagon_graph("t1")
    policies = (CoBuchiConventionPolicy(graph, [1, 2, 3, 4, 5], on_conflict=on_conflict),
                CoBuchiConventionPolicy(graph, [1, 2, 4, 5], on_conflict=on_conflict))
    return Composition(graph, policies, uniform(2))


class TestExactAnalysis(TestCase):

    def test_gallery_verdicts(self):
        for name in gallery.names():
            config = gallery.instance(name)
            if config.mode == "simulate":
                continue
            with self.subTest(instance=name):
                chain = build_global_chain(build_composition(config), config.state_cap)
                check_row_stochastic(chain)
                verdict = almost_sure_verdict(chain, config.objectives)
                self.assertEqual(config.expect, tuple(o.value for o in verdict.per_objective))

    def test_bsccs_match_brute_force(self):
        for name in ("fig1a-reach", "fig2-detfail", "fig2-shield", "fig3-counterexample"):
            with self.subTest(instance=name):
                chain = build_global_chain(build_composition(gallery.instance(name)))
                self.assertLessEqual(len(chain), 200)
                self.assertEqual(brute_force_bsccs(chain), chain.bsccs)

    def test_counterexample_witness(self):
        fig3 = self_loop_graph()
        comp = Composition(fig3, memoryless_cobuchi_counterexample(fig3), uniform(2))
        chain = build_global_chain(comp)
        self.assertEqual(4, len(chain))
        verdict = almost_sure_verdict(chain, [CoBuchi(frozenset({2})), CoBuchi(frozenset({3}))])
        self.assertEqual((Outcome.VIOLATED, Outcome.VIOLATED), verdict.per_objective)
        self.assertEqual((Fraction(0), Fraction(0)), verdict.probabilities)
        for witness in verdict.witness:
            self.assertLessEqual(frozenset({2, 3}), witness.vertices)
        data = verdict_to_json(verdict, fig3)
        self.assertEqual(["violated", "violated"], data["per_objective"])
        self.assertEqual(["v0", "v1", "v11", "v12"], data["witness"][0]["vertices"])
        self.assertEqual(["0", "0"], data["probabilities"])

    def test_schedule_aware_policies_are_defeated(self):
        fig2 = fork_graph()
        comp = Composition(fig2, det_defeat_policies(fig2, round_robin(2)), round_robin(2))
        chain = build_global_chain(comp)
        verdict = almost_sure_verdict(chain, [Reachability(frozenset({1})), Reachability(frozenset({2}))])
        self.assertFalse(verdict.all_almost_sure)
        self.assertEqual([frozenset({0, 1})], chain.bsccs)
        self.assertEqual((Fraction(0), Fraction(0)), verdict.probabilities)

    def test_unsafe_prefix_rejects_the_witness(self):
        graph = from_edges(3, [(0, 1), (1, 2), (2, 2)])
        chain = build_global_chain(solo(graph, MemorylessPolicy(graph, (1, 2, 2))))
        verdict = almost_sure_verdict(chain, [Safety(frozenset({0, 2})), Buchi(frozenset({2}))])
        self.assertEqual((Outcome.VIOLATED, Outcome.ALMOST_SURE), verdict.per_objective)
        self.assertEqual(frozenset({2}), verdict.witness[0].vertices)
        self.assertEqual((False, True), verdict.witness[0].accepts)
        self.assertEqual(Fraction(0), verdict.probabilities[0])

    def test_reachability_inside_conjunction(self):
        chain = build_global_chain(cobuchi_pair())
        objective = Conjunction((Safety(frozenset(range(6))), Reachability(frozenset({0}))))
        self.assertRaises(NotDirectlyConvertible, almost_sure_verdict, chain, [objective])

    def test_state_cap(self):
        fig3 = self_loop_graph()
        comp = Composition(fig3, memoryless_cobuchi_counterexample(fig3), uniform(2))
        self.assertRaises(StateCapExceeded, build_global_chain, comp, 2)

    def test_cobuchi_claims(self):
        comp = cobuchi_pair()
        chain = build_global_chain(comp)
        report = check_consensus_claims(chain, comp, "cobuchi")
        self.assertGreater(report.consensus_states, 0)
        self.assertEqual(len(chain), report.states)
        verdict = almost_sure_verdict(chain, [CoBuchi(frozenset({1, 2, 3, 4, 5})), CoBuchi(frozenset({1, 2, 4, 5}))])
        self.assertTrue(verdict.all_almost_sure)

    def test_keeping_the_cycle_breaks_the_claims(self):
        comp = cobuchi_pair("keep_cycle")
        chain = build_global_chain(comp)
        with self.assertRaises(ClaimViolated) as raised:
            check_consensus_claims(chain, comp, "cobuchi")
        self.assertEqual("b", raised.exception.clause)

    def test_parity_claims(self):
        config = gallery.instance("fig1b-parity")
        comp = build_composition(config)
        report = check_consensus_claims(build_global_chain(comp), comp, "parity")
        self.assertGreater(report.bscc_states, 0)


class TestPredicates(TestCase):

    def test_finite_horizon_predicates(self):
        graph = self_loop_graph()
        test_cases = [
            (Reachability(frozenset({1})), BuchiVisits(frozenset({1}), 1)),
            (Safety(frozenset({0, 1})), CleanSuffix(frozenset({2, 3}), 11)),
            (Buchi(frozenset({2})), BuchiVisits(frozenset({2}), 3)),
            (CoBuchi(frozenset({2})), CleanSuffix(frozenset({2}), 4)),
            (Parity((0, 1, 2, 3)), ParityTail((0, 1, 2, 3), 4)),
            (Conjunction((Safety(frozenset({0, 1})), Buchi(frozenset({0})))),
             AllOf((CleanSuffix(frozenset({2, 3}), 11), BuchiVisits(frozenset({0}), 3)))),
        ]
        for objective, expect in test_cases:
            with self.subTest(objective=objective):
                self.assertEqual(expect, finite_horizon_predicate(objective, graph, 10, 4))

    def test_predicates_on_traces(self):
        trace = make_trace([0, 1, 2, 0, 1, 3, 0, 0, 0])
        test_cases = [
            ("visits after the start", BuchiVisits(frozenset({0}), 4), True),
            ("too few visits", BuchiVisits(frozenset({1}), 3), False),
            ("clean tail", CleanSuffix(frozenset({2, 3}), 3), True),
            ("dirty tail", CleanSuffix(frozenset({3}), 4), False),
            ("even tail", ParityTail((2, 1, 1, 3), 3), True),
            ("odd tail", ParityTail((2, 1, 1, 3), 4), False),
            ("stable", Stabilized(2), True),
            ("tail not periodic", Stabilized(4), False),
            ("window longer than the run", Stabilized(9), False),
            ("all parts", AllOf((BuchiVisits(frozenset({0}), 1), CleanSuffix(frozenset({3}), 4))), False),
        ]
        for case, predicate, expect in test_cases:
            with self.subTest(msg=case):
                self.assertEqual(expect, predicate(trace))

    def test_periodic(self):
        self.assertTrue(periodic([1, 2, 1, 2, 1], 2))
        self.assertFalse(periodic([1, 2, 1, 2, 1], 1))
        self.assertFalse(periodic([1, 2, 3], 2))

    def test_wilson_interval(self):
        test_cases = [
            (0, 10, 0.0, 0.2775),
            (5, 10, 0.2366, 0.7634),
            (10, 10, 0.7225, 1.0),
        ]
        for successes, trials, low, high in test_cases:
            with self.subTest(successes=successes, trials=trials):
                interval = wilson_interval(successes, trials)
                self.assertAlmostEqual(low, interval[0], places=3)
                self.assertAlmostEqual(high, interval[1], places=3)

    def test_wilson_interval_is_exact_at_the_ends(self):
        self.assertEqual(0.0, wilson_interval(0, 200)[0])
        self.assertEqual(1.0, wilson_interval(200, 200)[1])
        self.assertEqual(0.0, wilson_interval(0, 1)[0])
        self.assertEqual(1.0, wilson_interval(1, 1)[1])


class TestSimulation(TestCase):

    def test_monte_carlo_reaches_both_ends(self):
        comp = build_composition(gallery.instance("fig1a-buchi-convention"))
        estimate = monte_carlo_estimate(comp, 300, 30, AllOf((BuchiVisits(frozenset({0}), 3),
                                                              BuchiVisits(frozenset({3}), 3))))
        self.assertEqual(30, estimate.successes)
        self.assertEqual(1.0, estimate.value)
        self.assertGreater(estimate.high, 0.9)

    def test_monte_carlo_is_seeded(self):
        comp = build_composition(gallery.instance("fig1a-cobuchi"))
        predicate = CleanSuffix(frozenset({1, 2, 3, 4, 5}), 12)
        self.assertEqual(monte_carlo_estimate(comp, 100, 10, predicate), monte_carlo_estimate(comp, 100, 10, predicate))

    def test_monte_carlo_needs_trials(self):
        comp = build_composition(gallery.instance("fig3-counterexample"))
        self.assertRaises(ValueError, monte_carlo_estimate, comp, 10, 0, BuchiVisits(frozenset({0}), 1))

    def test_convergence_of_memoryless_policies(self):
        hexagon = hexagon_graph()
        comp = solo(hexagon, shortest_path_policy(hexagon, [0]))
        summary = convergence_time(comp, 3, 4, 20)
        self.assertEqual(0.0, summary.median)
        self.assertEqual(0, summary.censored)
        self.assertEqual("trial,first_stable_step,censored\n0,0,0\n1,0,0\n2,0,0\n", convergence_csv(summary))

    def test_alternating_memories_are_censored(self):
        fig2 = fork_graph()
        trace = run(Composition(fig2, det_defeat_policies(fig2, round_robin(2)), round_robin(2)), 20)
        self.assertEqual((20, True), first_stable_step(trace, 4))

    def test_cobuchi_conventions_settle(self):
        comp = cobuchi_pair()
        summary = convergence_time(comp, 20, 12, 400)
        self.assertEqual(0, summary.censored)
        for trial, _, _ in summary.samples:
            with self.subTest(trial=trial):
                trace = run(seeded(comp, trial), 400)
                self.assertEqual([0] * 12, trace.vertices[-12:])

    def test_buchi_conventions_keep_visiting(self):
        comp = build_composition(gallery.instance("fig1a-buchi-convention"))
        for target in (0, 3):
            with self.subTest(target=target):
                estimate = monte_carlo_estimate(comp, 1000, 60, BuchiVisits(frozenset({target}), 20))
                self.assertGreaterEqual(estimate.value, 0.99)

    def test_cobuchi_conventions_stabilize(self):
        comp = build_composition(gallery.instance("fig1a-cobuchi"))
        estimate = monte_carlo_estimate(comp, 2000, 60, Stabilized(2 * comp.graph.n))
        self.assertGreaterEqual(estimate.value, 0.99)

    def test_third_agent_slows_convergence(self):
        two = convergence_time(build_composition(gallery.instance("fig1a-cobuchi")), 60, 12, 2000)
        three = convergence_time(build_composition(gallery.instance("fig1a-cobuchi-3")), 60, 12, 2000)
        self.assertEqual((0, 0), (two.censored, three.censored))
        self.assertGreaterEqual(three.median, two.median)
        self.assertGreater(three.mean, two.mean)

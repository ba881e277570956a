from unittest import TestCase

import numpy as np

from decoupling.errors import CycleCapExceeded, DeadlockVertex, MalformedEdge, Unreachable
from decoupling.gallery import hexagon_graph, self_loop_graph
from decoupling.graph import (Graph, Lasso, canonical_rotation, check_lasso, distances_to, enumerate_simple_cycles,
                              from_edges, graph_from_json, graph_to_json, is_strongly_connected, make_graph, reachable,
                              rotate_to, sample_lasso, scc_decompose, shortest_lassos, successor_on_cycle, validate)


# mypy: ignore-errors
class TestGraph(TestCase):

    def setUp(self):
        self.hexagon = hexagon_graph()

    def test_make_graph_sorts_successors(self):
        test_cases = [
            ("l", (0, 1, 5)),
            ("t1", (0, 2)),
            ("r", (2, 3, 4)),
            ("b1", (0, 4)),
        ]
        for label, expect in test_cases:
            with self.subTest(vertex=label):
                self.assertEqual(expect, self.hexagon.succ(self.hexagon.index(label)))
        self.assertEqual(2, self.hexagon.init)

    def test_make_graph_rejects_unknown_labels(self):
        self.assertRaisesRegex(MalformedEdge, "unknown endpoint", make_graph, ["a"], [("a", "b")], "a")
        self.assertRaisesRegex(MalformedEdge, "not a vertex", make_graph, ["a"], [("a", "a")], "b")

    def test_validate(self):
        test_cases = [
            ("deadlock", from_edges(2, [(0, 1)]), DeadlockVertex),
            ("unsorted successors", Graph(((1, 0), (0,))), MalformedEdge),
            ("duplicate successors", Graph(((0, 0),)), MalformedEdge),
            ("initial vertex out of range", Graph(((0,),), init=3), MalformedEdge),
            ("dangling edge", Graph(((4,),)), MalformedEdge),
            ("label count", Graph(((0,),), labels=("a", "b")), MalformedEdge),
        ]
        for case, graph, error in test_cases:
            with self.subTest(msg=case):
                self.assertRaises(error, validate, graph)
        validate(self.hexagon)

    def test_deadlock_names_the_vertex(self):
        with self.assertRaises(DeadlockVertex) as raised:
            validate(make_graph(["x", "y"], [("x", "y")], "x"))
        self.assertEqual(1, raised.exception.vertex)

    def test_from_edges_rejects_out_of_range(self):
        self.assertRaises(MalformedEdge, from_edges, 2, [(0, 5)])

    def test_scc_decompose_bottom_first(self):
        graph = from_edges(3, [(0, 0), (0, 1), (1, 2), (2, 1)])
        self.assertEqual([frozenset({1, 2}), frozenset({0})], scc_decompose(graph))
        self.assertFalse(is_strongly_connected(graph))
        self.assertTrue(is_strongly_connected(self_loop_graph()))

    def test_reachable_within(self):
        test_cases = [
            ("everything", None, frozenset(range(6))),
            ("top row only", frozenset({0, 1, 2}), frozenset({0, 1, 2})),
            ("source outside", frozenset({3, 4}), frozenset()),
        ]
        for case, within, expect in test_cases:
            with self.subTest(msg=case):
                self.assertEqual(expect, reachable(self.hexagon, [2], within))

    def test_distances_to(self):
        self.assertEqual([0, 1, 2, 3, 2, 1], distances_to(self.hexagon, [0]))
        graph = from_edges(3, [(0, 0), (1, 1), (2, 2), (0, 1)])
        self.assertEqual([1, 0, None], distances_to(graph, [1]))

    def test_rotations(self):
        self.assertEqual((1, 2, 3), canonical_rotation((3, 1, 2)))
        self.assertEqual((3, 1, 2), rotate_to((1, 2, 3), 3))
        self.assertEqual(1, successor_on_cycle((1, 2, 3), 3))

    def test_enumerate_simple_cycles(self):
        expect = [(0,), (3,), (0, 1), (0, 5), (1, 2), (2, 3), (3, 4), (4, 5), (0, 1, 2, 3, 4, 5), (0, 5, 4, 3, 2, 1)]
        self.assertEqual(expect, enumerate_simple_cycles(self.hexagon))
        self.assertEqual([(0,), (0, 1)], enumerate_simple_cycles(self.hexagon, forbidden=[2, 3, 4, 5]))
        self.assertEqual([], enumerate_simple_cycles(self.hexagon, forbidden=range(6)))

    def test_enumerate_simple_cycles_cap(self):
        self.assertRaises(CycleCapExceeded, enumerate_simple_cycles, self.hexagon, (), 3)

    def test_shortest_lassos(self):
        test_cases = [
            ("one shortest stem", 2, (0,), [Lasso((2, 1), (0,))]),
            ("two shortest stems", 3, (0,), [Lasso((3, 2, 1), (0,)), Lasso((3, 4, 5), (0,))]),
            ("already on the cycle", 1, (0, 1), [Lasso((), (1, 0))]),
            ("enter at the nearest cycle vertex", 3, (0, 1), [Lasso((3, 2), (1, 0))]),
        ]
        for case, source, cycle, expect in test_cases:
            with self.subTest(msg=case):
                self.assertEqual(expect, shortest_lassos(self.hexagon, source, cycle))

    def test_sample_lasso(self):
        options = shortest_lassos(self.hexagon, 3, (0,))
        drawn = {sample_lasso(self.hexagon, 3, (0,), np.random.default_rng(seed)) for seed in range(40)}
        self.assertEqual(set(options), drawn)
        self.assertEqual(sample_lasso(self.hexagon, 3, (0,), np.random.default_rng(7)),
                         sample_lasso(self.hexagon, 3, (0,), np.random.default_rng(7)))

    def test_shortest_lassos_unreachable(self):
        graph = from_edges(3, [(0, 0), (1, 1), (2, 2), (0, 1)])
        self.assertRaises(Unreachable, shortest_lassos, graph, 1, (0,))

    def test_lasso_unroll(self):
        self.assertEqual([2, 1, 0, 0, 0], Lasso((2, 1), (0,)).unroll(5))
        self.assertEqual([1, 0, 1, 0], Lasso((), (1, 0)).unroll(4))
        self.assertEqual(2, Lasso((2, 1), (0,)).anchor)

    def test_check_lasso(self):
        check_lasso(self.hexagon, Lasso((2, 1), (0,)), anchor=2)
        check_lasso(self.hexagon, Lasso((), (0, 1, 2, 1)), simple=False)
        test_cases = [
            ("missing edge", Lasso((2,), (0,)), None),
            ("wrong anchor", Lasso((2, 1), (0,)), 1),
            ("empty cycle", Lasso((2,), ()), None),
            ("repeated cycle vertex", Lasso((), (0, 1, 2, 1)), None),
        ]
        for case, lasso, anchor in test_cases:
            with self.subTest(msg=case):
                self.assertRaises(MalformedEdge, check_lasso, self.hexagon, lasso, anchor)

    def test_induced(self):
        restricted, embedding = self.hexagon.induced([0, 1, 2, 3, 4])
        self.assertEqual((0, 1, 2, 3, 4), embedding)
        self.assertEqual((3,), restricted.succ(4))
        self.assertEqual((0, 1), restricted.succ(0))
        self.assertEqual("b2", restricted.label(4))
        self.assertEqual(2, restricted.init)
        self.assertRaises(Unreachable, self.hexagon.induced, [0, 1])

    def test_json(self):
        data = graph_to_json(self.hexagon)
        self.assertEqual(["l", "t1", "t2", "r", "b2", "b1"], data["vertices"])
        self.assertEqual(2, data["init"])
        self.assertEqual(self.hexagon, graph_from_json(data))

    def test_json_errors(self):
        test_cases = [
            ("missing edges", {"vertices": ["a"]}, MalformedEdge),
            ("bad edge", {"vertices": ["a"], "edges": [[0]]}, MalformedEdge),
            ("deadlock", {"vertices": ["a", "b"], "edges": [[0, 1]]}, DeadlockVertex),
        ]
        for case, data, error in test_cases:
            with self.subTest(msg=case):
                self.assertRaises(error, graph_from_json, data)

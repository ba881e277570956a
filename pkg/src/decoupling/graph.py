import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import islice
from typing import Any, Iterable, Iterator, Sequence

import networkx as nx
import numpy as np

from decoupling.errors import CycleCapExceeded, DeadlockVertex, MalformedEdge, Unreachable

logger = logging.getLogger(__name__)

DEFAULT_CYCLE_CAP = 100_000

type Cycle = tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    """Finite directed graph over the dense vertex indices 0..n-1."""
    successors: tuple[tuple[int, ...], ...]
    init: int = 0
    labels: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.successors)

    @property
    def vertices(self) -> range:
        return range(self.n)

    def succ(self, v: int) -> tuple[int, ...]:
        return self.successors[v]

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels else str(v)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise MalformedEdge(f'unknown vertex label "{label}"') from None

    def indices(self, labels: Iterable[str]) -> frozenset[int]:
        return frozenset(self.index(label) for label in labels)

    def edges(self) -> Iterator[tuple[int, int]]:
        for v, successors in enumerate(self.successors):
            for u in successors:
                yield v, u

    def has_edge(self, v: int, u: int) -> bool:
        return 0 <= v < self.n and u in self.successors[v]

    @cached_property
    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges())
        return g

    def induced(self, keep: Iterable[int]) -> tuple["Graph", tuple[int, ...]]:
        """G[keep] re-indexed densely, plus the embedding new index -> old index.

        The initial vertex must be kept.
        """
        embedding: tuple[int, ...] = tuple(sorted(set(keep)))
        position: dict[int, int] = {old: new for new, old in enumerate(embedding)}
        if self.init not in position:
            raise Unreachable(f"initial vertex {self.label(self.init)} is not kept by the restriction")
        successors = tuple(
            tuple(position[u] for u in self.successors[old] if u in position)
            for old in embedding
        )
        labels = tuple(self.label(old) for old in embedding)
        return Graph(successors, position[self.init], labels), embedding


@dataclass(frozen=True)
class Lasso:
    """The ultimately periodic path stem . cycle^omega.

    cycle[0] is the vertex entered right after the last stem vertex (or the
    anchor itself when the stem is empty).
    """
    stem: tuple[int, ...]
    cycle: tuple[int, ...]

    @property
    def anchor(self) -> int:
        return self.stem[0] if self.stem else self.cycle[0]

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.stem) | frozenset(self.cycle)

    def unroll(self, length: int) -> list[int]:
        prefix: list[int] = list(self.stem[:length])
        while len(prefix) < length:
            prefix.append(self.cycle[(len(prefix) - len(self.stem)) % len(self.cycle)])
        return prefix


def make_graph(labels: Sequence[str], edges: Iterable[tuple[str, str]], init: str) -> Graph:
    position: dict[str, int] = {label: i for i, label in enumerate(labels)}
    index_edges: list[tuple[int, int]] = []
    for a, b in edges:
        if a not in position or b not in position:
            raise MalformedEdge(f"edge ({a}, {b}): unknown endpoint")
        index_edges.append((position[a], position[b]))
    if init not in position:
        raise MalformedEdge(f'initial vertex "{init}" is not a vertex')
    return from_edges(len(labels), index_edges, position[init], tuple(labels))


def from_edges(n: int, edges: Iterable[tuple[int, int]], init: int = 0, labels: tuple[str, ...] = ()) -> Graph:
    successors: list[set[int]] = [set() for _ in range(n)]
    for v, u in edges:
        if not (0 <= v < n and 0 <= u < n):
            raise MalformedEdge(f"edge ({v}, {u}): endpoint outside 0..{n - 1}")
        successors[v].add(u)
    return Graph(tuple(tuple(sorted(s)) for s in successors), init, labels)


def validate(graph: Graph) -> None:
    if graph.labels and len(graph.labels) != graph.n:
        raise MalformedEdge(f"{len(graph.labels)} labels for {graph.n} vertices")
    if not 0 <= graph.init < graph.n:
        raise MalformedEdge(f"initial vertex {graph.init} outside 0..{graph.n - 1}")
    for v, successors in enumerate(graph.successors):
        for u in successors:
            if not 0 <= u < graph.n:
                raise MalformedEdge(f"edge ({v}, {u}): endpoint outside 0..{graph.n - 1}")
        if list(successors) != sorted(set(successors)):
            raise MalformedEdge(f"vertex {graph.label(v)}: successor list not sorted and duplicate-free")
    for v, successors in enumerate(graph.successors):
        if not successors:
            raise DeadlockVertex(v, graph.label(v))


def is_strongly_connected(graph: Graph) -> bool:
    return bool(nx.is_strongly_connected(graph.digraph))


def scc_decompose(graph: Graph) -> list[frozenset[int]]:
    """SCCs in reverse topological order: bottom components come first."""
    condensed = nx.condensation(graph.digraph)
    order = list(nx.topological_sort(condensed))
    return [frozenset(condensed.nodes[c]["members"]) for c in reversed(order)]


def reachable(graph: Graph, sources: Iterable[int], within: frozenset[int] | None = None) -> frozenset[int]:
    seen: set[int] = {s for s in sources if within is None or s in within}
    queue: deque[int] = deque(seen)
    while queue:
        v = queue.popleft()
        for u in graph.succ(v):
            if u not in seen and (within is None or u in within):
                seen.add(u)
                queue.append(u)
    return frozenset(seen)


def distances_to(graph: Graph, targets: Iterable[int]) -> list[int | None]:
    """Length of a shortest path from every vertex into targets (0 on targets)."""
    predecessors: list[list[int]] = [[] for _ in graph.vertices]
    for v, u in graph.edges():
        predecessors[u].append(v)
    distance: list[int | None] = [None] * graph.n
    queue: deque[int] = deque()
    for t in targets:
        distance[t] = 0
        queue.append(t)
    while queue:
        u = queue.popleft()
        for v in predecessors[u]:
            if distance[v] is None:
                distance[v] = distance[u] + 1  # type: ignore[operator]
                queue.append(v)
    return distance


def canonical_rotation(cycle: Sequence[int]) -> Cycle:
    start: int = cycle.index(min(cycle))
    return tuple(cycle[start:]) + tuple(cycle[:start])


def rotate_to(cycle: Sequence[int], start: int) -> Cycle:
    i: int = cycle.index(start)
    return tuple(cycle[i:]) + tuple(cycle[:i])


def successor_on_cycle(cycle: Sequence[int], v: int) -> int:
    return cycle[(cycle.index(v) + 1) % len(cycle)]


def enumerate_simple_cycles(graph: Graph, forbidden: Iterable[int] = (),
                            cap: int = DEFAULT_CYCLE_CAP) -> list[Cycle]:
    """Every simple cycle avoiding `forbidden`, canonically rotated, shortest first.

    Uses Johnson's algorithm; the number of simple cycles can be exponential,
    so more than `cap` of them is an error.
    """
    if cap <= 0:
        raise ValueError("cycle cap must be positive")
    blocked: frozenset[int] = frozenset(forbidden)
    sub = graph.digraph.subgraph(v for v in graph.vertices if v not in blocked)
    found: set[Cycle] = set()
    for cycle in islice(nx.simple_cycles(sub), cap + 1):
        found.add(canonical_rotation(cycle))
    if len(found) > cap:
        raise CycleCapExceeded(f"more than {cap} simple cycles")
    logger.debug("enumerated %d simple cycles avoiding %s", len(found), sorted(blocked))
    return sorted(found, key=lambda c: (len(c), c))


def shortest_lassos(graph: Graph, source: int, cycle: Sequence[int]) -> list[Lasso]:
    """All lassos from source into cycle whose stem is a shortest path, sorted."""
    on_cycle: frozenset[int] = frozenset(cycle)
    if source in on_cycle:
        return [Lasso((), rotate_to(cycle, source))]
    distance = nx.single_source_shortest_path_length(graph.digraph, source)
    reached: list[int] = [c for c in cycle if c in distance]
    if not reached:
        raise Unreachable(f"cycle {tuple(graph.label(c) for c in cycle)} unreachable from {graph.label(source)}")
    nearest: int = min(distance[c] for c in reached)
    lassos: set[Lasso] = set()
    for entry in reached:
        if distance[entry] != nearest:
            continue
        for path in nx.all_shortest_paths(graph.digraph, source, entry):
            lassos.add(Lasso(tuple(path[:-1]), rotate_to(cycle, entry)))
    return sorted(lassos, key=lambda lasso: (lasso.stem, lasso.cycle))


def sample_lasso(graph: Graph, source: int, cycle: Sequence[int], rng: np.random.Generator) -> Lasso:
    options: list[Lasso] = shortest_lassos(graph, source, cycle)
    return options[int(rng.integers(len(options)))]


def check_lasso(graph: Graph, lasso: Lasso, anchor: int | None = None, simple: bool = True) -> None:
    if not lasso.cycle:
        raise MalformedEdge("lasso cycle is empty")
    if anchor is not None and lasso.anchor != anchor:
        raise MalformedEdge(f"lasso starts at {graph.label(lasso.anchor)}, expected {graph.label(anchor)}")
    walk: list[int] = list(lasso.stem) + list(lasso.cycle) + [lasso.cycle[0]]
    for v, u in zip(walk, walk[1:]):
        if not graph.has_edge(v, u):
            raise MalformedEdge(f"lasso uses missing edge ({graph.label(v)}, {graph.label(u)})")
    if simple and len(set(lasso.cycle)) != len(lasso.cycle):
        raise MalformedEdge("lasso cycle repeats a vertex")
    if simple and len(set(lasso.stem)) != len(lasso.stem):
        raise MalformedEdge("lasso stem repeats a vertex")


def graph_to_json(graph: Graph) -> dict[str, Any]:
    return {
        "vertices": [graph.label(v) for v in graph.vertices],
        "edges": [[v, u] for v, u in graph.edges()],
        "init": graph.init,
    }


def graph_from_json(data: dict[str, Any]) -> Graph:
    try:
        labels: list[str] = [str(label) for label in data["vertices"]]
        edges: list[tuple[int, int]] = [(int(v), int(u)) for v, u in data["edges"]]
        init: int = int(data.get("init", 0))
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedEdge(f"graph JSON: {e}") from None
    graph: Graph = from_edges(len(labels), edges, init, tuple(labels))
    validate(graph)
    return graph

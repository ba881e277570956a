import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from math import prod
from typing import Hashable, Iterable, Iterator, Literal, Sequence

import networkx as nx
import numpy as np

from decoupling import linalg
from decoupling.distributions import Dist, dirac, mixture, sample, uniform
from decoupling.errors import (MalformedEdge, NoGoodCycle, NoGoodTuple, ShapeMismatch, StateCapExceeded,
                               TupleSpaceCapExceeded, Unreachable, WitnessInvalid)
from decoupling.graph import (DEFAULT_CYCLE_CAP, Cycle, Graph, Lasso, canonical_rotation, check_lasso, distances_to,
                              enumerate_simple_cycles, reachable, shortest_lassos, successor_on_cycle)
from decoupling.objectives import Parity, satisfies_lasso
from decoupling.scheduler import SchedulerSpec, distribution, is_deterministic, period, uniform as uniform_scheduler

logger = logging.getLogger(__name__)

DEFAULT_TUPLE_CAP = 1_000_000
DEFAULT_MAX_EXPONENT = 20
DEFAULT_MEMORY_CAP = 200_000

type Choice = tuple[int, ...]
type ParityMemory = tuple[Choice, ...]


class ObservationClass(Enum):
    PATH_AWARE = "path-aware"
    SCHEDULED_AWARE = "scheduled-aware"
    FULL_HISTORY_AWARE = "full-history-aware"


@dataclass(frozen=True)
class Observation:
    """What one policy learns from one step of the composition.

    `scheduled` is None for path-aware policies and `agent` is None for
    everything below full-history-aware.
    """
    before: int
    after: int
    own_choice: int
    scheduled: bool | None = None
    agent: int | None = None


class Policy[M: Hashable](ABC):
    """A finite-state stochastic decision rule over one graph."""
    observation_class: ObservationClass = ObservationClass.PATH_AWARE
    name: str = "policy"

    @abstractmethod
    def initial_memory(self) -> Dist[M]:
        ...

    @abstractmethod
    def propose(self, memory: M, vertex: int) -> Dist[int]:
        ...

    def update(self, memory: M, observation: Observation) -> Dist[M]:
        return dirac(memory)

    @abstractmethod
    def memory_states(self) -> Iterable[M]:
        ...


class MemorylessPolicy(Policy[None]):
    def __init__(self, graph: Graph, choice: Choice, name: str = "memoryless") -> None:
        for v, u in enumerate(choice):
            if not graph.has_edge(v, u):
                raise MalformedEdge(f"{name}: {graph.label(v)} -> {graph.label(u)} is not an edge")
        self.graph = graph
        self.choice = choice
        self.name = name

    def initial_memory(self) -> Dist[None]:
        return dirac(None)

    def propose(self, memory: None, vertex: int) -> Dist[int]:
        return dirac(self.choice[vertex])

    def memory_states(self) -> Iterable[None]:
        return [None]


def capped[T](items: Iterable[T], cap: int, what: str) -> Iterator[T]:
    for count, item in enumerate(items):
        if count >= cap:
            raise StateCapExceeded(f"{what}: more than {cap} states")
        yield item


def check_proposals(graph: Graph, policy: Policy[Hashable], cap: int = DEFAULT_MEMORY_CAP) -> None:
    """Every proposal of every (memory, vertex) pair must be a successor."""
    for memory in capped(policy.memory_states(), cap, policy.name):
        for v in graph.vertices:
            for u, p in policy.propose(memory, v).items():
                if p > 0 and not graph.has_edge(v, u):
                    raise MalformedEdge(f"{policy.name}: proposes {graph.label(v)} -> {graph.label(u)}")


def _shape(graph: Graph, labels: Sequence[str], edges: Iterable[tuple[str, str]], what: str) -> dict[str, int]:
    index: dict[str, int] = {}
    for label in labels:
        if label not in graph.labels:
            raise ShapeMismatch(f"{what}: vertex {label} missing")
        index[label] = graph.labels.index(label)
    for a, b in edges:
        if not graph.has_edge(index[a], index[b]):
            raise ShapeMismatch(f"{what}: edge ({a}, {b}) missing")
    return index


def toward(graph: Graph, region: Iterable[int]) -> list[int]:
    """Successor on a shortest path into region, ties to the lowest index.

    Vertices inside region, or that cannot reach it, get their lowest successor.
    """
    inside: frozenset[int] = frozenset(region)
    distance = distances_to(graph, inside)
    step: list[int] = []
    for v in graph.vertices:
        options = [u for u in graph.succ(v) if distance[u] is not None]
        if v in inside or not options:
            step.append(graph.succ(v)[0])
        else:
            step.append(min(options, key=lambda u: (distance[u], u)))
    return step


def shortest_path_policy(graph: Graph, targets: Iterable[int]) -> MemorylessPolicy:
    goal: frozenset[int] = frozenset(targets)
    distance = distances_to(graph, goal)
    choice: list[int] = []
    for v in graph.vertices:
        options = [u for u in graph.succ(v) if distance[u] is not None]
        if not options:
            raise Unreachable(f"targets unreachable from {graph.label(v)}")
        choice.append(min(options, key=lambda u: (distance[u], u)))
    return MemorylessPolicy(graph, tuple(choice), "shortest-path")


def buchi_convention_policy(graph: Graph, accepting: Iterable[int]) -> MemorylessPolicy:
    """Shortest-path policy that keeps re-entering `accepting`.

    From every vertex the next accepting visit happens after at most |V|
    steps.
    """
    goal: frozenset[int] = frozenset(accepting)
    if not goal:
        raise Unreachable("accepting set is empty")
    policy: MemorylessPolicy = shortest_path_policy(graph, goal)
    policy.name = "buchi-convention"
    return policy


def solo_step[M: Hashable](policy: Policy[M], memory: M, vertex: int) -> Dist[tuple[M, int]]:
    return mixture(
        (pu, mixture((pm, dirac((m, u))) for m, pm in policy.update(memory, Observation(vertex, u, u, True)).items()))
        for u, pu in policy.propose(memory, vertex).items()
    )


def verify_bounded_hitting[M: Hashable](graph: Graph, policy: Policy[M], targets: Iterable[int],
                                         cap: int = DEFAULT_MEMORY_CAP) -> Fraction | float | None:
    """Supremum over (memory, vertex) of the expected solo hitting time of targets.

    Hitting time counts the steps t >= 1 until the path is in targets. None
    when some state misses targets with positive probability.
    """
    goal: frozenset[int] = frozenset(targets)
    states: list[tuple[M, int]] = list(capped(((m, v) for m in policy.memory_states() for v in graph.vertices),
                                              cap, policy.name))
    index: dict[tuple[M, int], int] = {s: i for i, s in enumerate(states)}
    rows: list[dict[int, Fraction]] = []
    hits: list[bool] = []
    frontier: int = 0
    while frontier < len(states):
        memory, vertex = states[frontier]
        frontier += 1
        row: dict[int, Fraction] = {}
        hit = False
        for (m, u), p in solo_step(policy, memory, vertex).items():
            if u in goal:
                hit = True
                continue
            if (m, u) not in index:
                if len(states) >= cap:
                    raise StateCapExceeded(f"{policy.name}: more than {cap} states")
                index[(m, u)] = len(states)
                states.append((m, u))
            row[index[(m, u)]] = row.get(index[(m, u)], Fraction(0)) + p
        rows.append(row)
        hits.append(hit)

    moves = nx.DiGraph()
    moves.add_nodes_from(range(len(states)))
    moves.add_edges_from((i, j) for i, row in enumerate(rows) for j in row)
    can_hit: set[int] = {i for i, hit in enumerate(hits) if hit}
    for i in list(can_hit):
        can_hit |= nx.ancestors(moves, i)
    if len(can_hit) < len(states):
        logger.info("%s: %d states never hit the targets", policy.name, len(states) - len(can_hit))
        return None

    # (I - Q) E = 1
    system: list[dict[int, Fraction]] = [
        {j: (Fraction(1) if i == j else Fraction(0)) - row.get(j, Fraction(0)) for j in set(row) | {i}}
        for i, row in enumerate(rows)
    ]
    expected = linalg.solve(system, [Fraction(1)] * len(states))
    bound = max(expected)
    logger.debug("%s: hitting bound %s over %d states", policy.name, bound, len(states))
    return bound


class CoBuchiConventionPolicy(Policy[Lasso]):
    """Guesses a lasso into a good cycle and re-guesses on every conflict.

    Memory is the remaining lasso whose stem starts at the current vertex;
    once the stem is consumed the cycle is kept in canonical rotation.
    """
    observation_class = ObservationClass.SCHEDULED_AWARE
    name = "cobuchi-convention"

    def __init__(self, graph: Graph, bad: Iterable[int], seed: int | None = None,
                 on_conflict: Literal["resample", "keep_cycle"] = "resample",
                 cycle_cap: int = DEFAULT_CYCLE_CAP) -> None:
        self.graph = graph
        self.bad: frozenset[int] = frozenset(bad)
        self.on_conflict = on_conflict
        self.good_cycles: list[Cycle] = enumerate_simple_cycles(graph, self.bad, cycle_cap)
        if not self.good_cycles:
            raise NoGoodCycle(f"every cycle visits a bad vertex of {sorted(self.bad)}")
        self._resample: dict[int, Dist[Lasso]] = {}
        self._initial: Dist[Lasso] = self.resample(graph.init)
        if seed is not None:
            self._initial = dirac(sample(self._initial, np.random.default_rng(seed)))

    def initial_memory(self) -> Dist[Lasso]:
        return self._initial

    def resample(self, vertex: int) -> Dist[Lasso]:
        if vertex not in self._resample:
            here: frozenset[int] = reachable(self.graph, [vertex])
            cycles: list[Cycle] = [c for c in self.good_cycles if here.intersection(c)]
            if not cycles:
                raise NoGoodCycle(f"no good cycle reachable from {self.graph.label(vertex)}")
            self._resample[vertex] = mixture(
                (Fraction(1, len(cycles)), uniform(normalize(lasso) for lasso in shortest_lassos(self.graph, vertex, c)))
                for c in cycles
            )
        return self._resample[vertex]

    def anchored(self, memory: Lasso, vertex: int) -> Lasso:
        if (memory.stem and memory.stem[0] == vertex) or (not memory.stem and vertex in memory.cycle):
            return memory
        return normalize(shortest_lassos(self.graph, vertex, memory.cycle)[0])

    def next_vertex(self, memory: Lasso, vertex: int) -> int:
        lasso: Lasso = self.anchored(memory, vertex)
        if len(lasso.stem) >= 2:
            return lasso.stem[1]
        if lasso.stem:
            return lasso.cycle[0]
        return successor_on_cycle(lasso.cycle, vertex)

    def propose(self, memory: Lasso, vertex: int) -> Dist[int]:
        return dirac(self.next_vertex(memory, vertex))

    def update(self, memory: Lasso, observation: Observation) -> Dist[Lasso]:
        lasso: Lasso = self.anchored(memory, observation.before)
        if observation.after == self.next_vertex(lasso, observation.before):
            return dirac(normalize(Lasso(lasso.stem[1:], lasso.cycle)) if lasso.stem else lasso)
        logger.debug("%s: conflict at %s", self.name, self.graph.label(observation.after))
        if self.on_conflict == "keep_cycle":
            return dirac(normalize(shortest_lassos(self.graph, observation.after, lasso.cycle)[0]))
        return self.resample(observation.after)

    def memory_states(self) -> Iterable[Lasso]:
        states: set[Lasso] = set()
        for v in self.graph.vertices:
            for lasso in self.resample(v):
                for k in range(len(lasso.stem) + 1):
                    states.add(normalize(Lasso(lasso.stem[k:], lasso.cycle)))
        return sorted(states, key=lambda lasso: (lasso.stem, lasso.cycle))


def normalize(lasso: Lasso) -> Lasso:
    return lasso if lasso.stem else Lasso((), canonical_rotation(lasso.cycle))


def cobuchi_convention_policy(graph: Graph, bad: Iterable[int], seed: int | None = None,
                              on_conflict: Literal["resample", "keep_cycle"] = "resample") -> CoBuchiConventionPolicy:
    return CoBuchiConventionPolicy(graph, bad, seed, on_conflict)


def loop_erase(walk: Sequence[int]) -> list[int]:
    path: list[int] = []
    for v in walk:
        if v in path:
            del path[path.index(v) + 1:]
        else:
            path.append(v)
    return path


def union_graph(graph: Graph, memory: ParityMemory, scheduler: SchedulerSpec) -> nx.DiGraph:
    active: list[int] = [j for j, p in distribution(scheduler, 0).items() if p > 0]
    g = nx.DiGraph()
    g.add_nodes_from(graph.vertices)
    g.add_edges_from((v, memory[j][v]) for j in active for v in graph.vertices)
    return g


def check_tuple_good(graph: Graph, memory: ParityMemory, scheduler: SchedulerSpec, colouring: Parity,
                     from_vertices: Iterable[int] | None = None) -> bool:
    """Whether every bottom component reachable from the start vertices has an even top colour."""
    chain = union_graph(graph, memory, scheduler)
    starts: set[int] = set(from_vertices) if from_vertices is not None else {graph.init}
    seen: set[int] = set(starts)
    for s in starts:
        seen |= nx.descendants(chain, s)
    for component in nx.attracting_components(chain):
        if component & seen and max(colouring.colours[v] for v in component) % 2 == 1:
            return False
    return True


def construct_good_tuple(graph: Graph, colourings: Sequence[Parity], witness: Lasso,
                         scheduler: SchedulerSpec | None = None) -> ParityMemory:
    """Memoryless maps that jointly satisfy every colouring, built from a witness lasso.

    The witness cycle is cut at the top-colour vertex of every objective;
    the loop-erased pieces between consecutive cut points form the shared
    cycle. Agent i walks its own piece first, then the following ones.
    """
    try:
        check_lasso(graph, witness, simple=False)
    except MalformedEdge as e:
        raise WitnessInvalid(str(e)) from None
    for i, colouring in enumerate(colourings):
        if not satisfies_lasso(colouring, witness):
            raise WitnessInvalid(f"witness does not satisfy colouring {i + 1}")
    cycle: tuple[int, ...] = witness.cycle
    m: int = len(cycle)

    def top(colouring: Parity) -> int:
        best: int = max(colouring.colours[v] for v in cycle)
        return next(k for k, v in enumerate(cycle) if colouring.colours[v] == best)

    owned: list[int] = [top(colouring) for colouring in colourings]
    cuts: list[int] = sorted(set(owned))
    pieces: dict[int, list[int]] = {}
    for k, start in enumerate(cuts):
        end: int = cuts[k + 1] if k + 1 < len(cuts) else cuts[0] + m
        walk: list[int] = [cycle[p % m] for p in range(start, end + 1)]
        pieces[start] = loop_erase(walk) if walk[0] != walk[-1] else loop_erase(walk[:-1]) + [walk[-1]]

    on_cycle: frozenset[int] = frozenset(v for piece in pieces.values() for v in piece)
    approach: list[int] = toward(graph, on_cycle)
    maps: list[Choice] = []
    for own in owned:
        choice: dict[int, int] = {}
        first: int = cuts.index(own)
        for k in range(len(cuts)):
            piece: list[int] = pieces[cuts[(first + k) % len(cuts)]]
            for a, b in zip(piece, piece[1:]):
                choice.setdefault(a, b)
        maps.append(tuple(choice[v] if v in on_cycle else approach[v] for v in graph.vertices))
    memory: ParityMemory = tuple(maps)

    fair: SchedulerSpec = scheduler if scheduler is not None else uniform_scheduler(len(colourings))
    for colouring in colourings:
        assert check_tuple_good(graph, memory, fair, colouring, graph.vertices)
    return memory


def cycle_attractor(graph: Graph, cycle: Cycle) -> Choice:
    approach: list[int] = toward(graph, cycle)
    return tuple(
        successor_on_cycle(cycle, v) if v in cycle else approach[v]
        for v in graph.vertices
    )


def candidate_tuples(graph: Graph, n_agents: int, tuple_space: Literal["all", "cycle_attractors"],
                     cap: int = DEFAULT_TUPLE_CAP) -> Iterable[ParityMemory]:
    maps: Iterable[Choice]
    match tuple_space:
        case "all":
            size: int = prod(len(graph.succ(v)) for v in graph.vertices) ** n_agents
            if size > cap:
                raise TupleSpaceCapExceeded(f"{size} candidate tuples exceed the cap of {cap}")
            maps = list(product(*graph.successors))
        case "cycle_attractors":
            maps = list(dict.fromkeys(cycle_attractor(graph, c) for c in enumerate_simple_cycles(graph)))
            if len(maps) ** n_agents > cap:
                raise TupleSpaceCapExceeded(f"{len(maps) ** n_agents} candidate tuples exceed the cap of {cap}")
    return product(maps, repeat=n_agents)


class ParityConventionPolicy(Policy[ParityMemory]):
    """Guesses the memoryless maps of every agent; re-guesses when a guess is refuted."""
    observation_class = ObservationClass.FULL_HISTORY_AWARE
    name = "parity-convention"

    def __init__(self, graph: Graph, colouring: Parity, n_agents: int, scheduler: SchedulerSpec, agent: int,
                 seed: int | None = None, tuple_space: Literal["all", "cycle_attractors"] = "cycle_attractors",
                 seed_tuples: Sequence[ParityMemory] = (), cap: int = DEFAULT_TUPLE_CAP) -> None:
        if is_deterministic(scheduler):
            raise NoGoodTuple("the parity convention needs a fair scheduler")
        self.graph = graph
        self.agent = agent
        good: dict[ParityMemory, None] = dict.fromkeys(seed_tuples)
        for candidate in candidate_tuples(graph, n_agents, tuple_space, cap):
            if check_tuple_good(graph, candidate, scheduler, colouring, graph.vertices):
                good[candidate] = None
        if not good:
            raise NoGoodTuple(f"no good {n_agents}-tuple of memoryless maps in the {tuple_space} space")
        self.pool: list[ParityMemory] = list(good)
        logger.info("%s %d: %d good tuples", self.name, agent + 1, len(self.pool))
        self._resample: Dist[ParityMemory] = uniform(self.pool)
        self._initial: Dist[ParityMemory] = self._resample
        if seed is not None:
            self._initial = dirac(sample(self._resample, np.random.default_rng(seed)))

    def initial_memory(self) -> Dist[ParityMemory]:
        return self._initial

    def propose(self, memory: ParityMemory, vertex: int) -> Dist[int]:
        return dirac(memory[self.agent][vertex])

    def update(self, memory: ParityMemory, observation: Observation) -> Dist[ParityMemory]:
        if observation.scheduled or observation.agent is None:
            return dirac(memory)
        if memory[observation.agent][observation.before] == observation.after:
            return dirac(memory)
        return self._resample

    def memory_states(self) -> Iterable[ParityMemory]:
        return self.pool


def parity_convention_policy(graph: Graph, colouring: Parity, n_agents: int, scheduler: SchedulerSpec, agent: int,
                             seed: int | None = None,
                             tuple_space: Literal["all", "cycle_attractors"] = "cycle_attractors",
                             seed_tuples: Sequence[ParityMemory] = ()) -> ParityConventionPolicy:
    return ParityConventionPolicy(graph, colouring, n_agents, scheduler, agent, seed, tuple_space, seed_tuples)


class ExpDwellPolicy(Policy[tuple[int, int]]):
    """Dwells growth**n steps on its own middle vertex during the n-th attempt.

    Memory is (attempt, dwell steps so far); the attempt counter stops at
    max_exponent.
    """
    name = "exp-dwell"

    def __init__(self, graph: Graph, agent: int, growth: int = 2, max_exponent: int = DEFAULT_MAX_EXPONENT) -> None:
        if growth < 2:
            raise ShapeMismatch("dwell growth factor must be at least 2")
        shape = _shape(graph, ["v", "a1", "a2", "b1", "b2"],
                       [("v", "a1"), ("v", "a2"), ("a1", "a1"), ("a2", "a2"), ("a1", "v"), ("a2", "v"),
                        ("a1", "b1"), ("a2", "b2"), ("b1", "v"), ("b2", "v")], "exp-dwell")
        own, other = (1, 2) if agent == 0 else (2, 1)
        self.v = shape["v"]
        self.a = shape[f"a{own}"]
        self.b = shape[f"b{own}"]
        self.other_a = shape[f"a{other}"]
        self.growth = growth
        self.max_exponent = max_exponent

    def dwell(self, attempt: int) -> int:
        return int(self.growth ** attempt)

    def initial_memory(self) -> Dist[tuple[int, int]]:
        return dirac((1, 0))

    def propose(self, memory: tuple[int, int], vertex: int) -> Dist[int]:
        attempt, waited = memory
        if vertex == self.v:
            return dirac(self.a)
        if vertex == self.a:
            return dirac(self.a if waited < self.dwell(attempt) else self.b)
        return dirac(self.v)

    def update(self, memory: tuple[int, int], observation: Observation) -> Dist[tuple[int, int]]:
        attempt, waited = memory
        if observation.after == self.v:
            return dirac((min(attempt + 1, self.max_exponent), 0))
        if observation.after == self.a and observation.before == self.a:
            return dirac((attempt, min(waited + 1, self.dwell(attempt))))
        return dirac((attempt, 0))

    def memory_states(self) -> Iterable[tuple[int, int]]:
        return ((n, k) for n in range(1, self.max_exponent + 1) for k in range(self.dwell(n) + 1))


def exp_dwell_policy(graph: Graph, agent: int, growth: int = 2,
                     max_exponent: int = DEFAULT_MAX_EXPONENT) -> ExpDwellPolicy:
    return ExpDwellPolicy(graph, agent, growth, max_exponent)


class DetDefeatPolicy(Policy[int]):
    """Knows the deterministic schedule and self-loops whenever it is its turn."""
    name = "det-defeat"

    def __init__(self, graph: Graph, agent: int, schedule: SchedulerSpec) -> None:
        if not is_deterministic(schedule):
            raise ShapeMismatch("det-defeat policies need a deterministic schedule")
        shape = _shape(graph, ["v", "a1", "a2"],
                       [("v", "v"), ("v", "a1"), ("v", "a2"), ("a1", "v"), ("a2", "v")], "det-defeat")
        self.v = shape["v"]
        self.target = shape[f"a{agent + 1}"]
        self.agent = agent
        self.schedule = schedule
        self.period: int = period(schedule)

    def initial_memory(self) -> Dist[int]:
        return dirac(0)

    def propose(self, memory: int, vertex: int) -> Dist[int]:
        if vertex != self.v:
            return dirac(self.v)
        if distribution(self.schedule, memory) == dirac(self.agent):
            return dirac(self.v)
        return dirac(self.target)

    def update(self, memory: int, observation: Observation) -> Dist[int]:
        return dirac((memory + 1) % self.period)

    def memory_states(self) -> Iterable[int]:
        return range(self.period)


def det_defeat_policies(graph: Graph, schedule: SchedulerSpec) -> tuple[DetDefeatPolicy, DetDefeatPolicy]:
    return DetDefeatPolicy(graph, 0, schedule), DetDefeatPolicy(graph, 1, schedule)


def memoryless_cobuchi_counterexample(graph: Graph) -> tuple[MemorylessPolicy, MemorylessPolicy]:
    shape = _shape(graph, ["v0", "v1", "v11", "v12"],
                   [("v0", "v1"), ("v1", "v11"), ("v1", "v12"), ("v11", "v0"), ("v12", "v0")], "fig3")

    def build(at_v1: str, name: str) -> MemorylessPolicy:
        choice: list[int] = list(graph.succ(v)[0] for v in graph.vertices)
        choice[shape["v0"]] = shape["v1"]
        choice[shape["v1"]] = shape[at_v1]
        choice[shape["v11"]] = shape["v0"]
        choice[shape["v12"]] = shape["v0"]
        return MemorylessPolicy(graph, tuple(choice), name)

    return build("v12", "avoid-v11"), build("v11", "avoid-v12")


class AlternatingPolicy(Policy[int]):
    """Cycles through `choices` on successive departures from `at`; elsewhere heads back to `at`."""
    name = "alternating"

    def __init__(self, graph: Graph, at: int, choices: Sequence[int]) -> None:
        for u in choices:
            if not graph.has_edge(at, u):
                raise ShapeMismatch(f"alternating: {graph.label(at)} -> {graph.label(u)} is not an edge")
        self.at = at
        self.choices: tuple[int, ...] = tuple(choices)
        self.back: list[int] = toward(graph, [at])

    def initial_memory(self) -> Dist[int]:
        return dirac(0)

    def propose(self, memory: int, vertex: int) -> Dist[int]:
        if vertex == self.at:
            return dirac(self.choices[memory])
        return dirac(self.back[vertex])

    def update(self, memory: int, observation: Observation) -> Dist[int]:
        if observation.before == self.at:
            return dirac((memory + 1) % len(self.choices))
        return dirac(memory)

    def memory_states(self) -> Iterable[int]:
        return range(len(self.choices))


class LiftedPolicy[M: Hashable](Policy[M]):
    """A policy of the restricted graph G[W] acting on the full graph."""

    def __init__(self, inner: Policy[M], embedding: Sequence[int]) -> None:
        self.inner = inner
        self.embedding: tuple[int, ...] = tuple(embedding)
        self.position: dict[int, int] = {old: new for new, old in enumerate(embedding)}
        self.observation_class = inner.observation_class
        self.name = f"lifted-{inner.name}"

    def initial_memory(self) -> Dist[M]:
        return self.inner.initial_memory()

    def propose(self, memory: M, vertex: int) -> Dist[int]:
        if vertex not in self.position:
            raise Unreachable(f"{self.name}: vertex {vertex} lies outside the restricted graph")
        return {self.embedding[u]: p for u, p in self.inner.propose(memory, self.position[vertex]).items()}

    def update(self, memory: M, observation: Observation) -> Dist[M]:
        if observation.before not in self.position or observation.after not in self.position:
            raise Unreachable(f"{self.name}: step leaves the restricted graph")
        return self.inner.update(memory, Observation(
            self.position[observation.before], self.position[observation.after],
            self.position.get(observation.own_choice, self.position[observation.after]),
            observation.scheduled, observation.agent))

    def memory_states(self) -> Iterable[M]:
        return self.inner.memory_states()

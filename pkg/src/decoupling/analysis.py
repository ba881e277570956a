import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from math import sqrt
from typing import Any, Callable, Iterable, Literal, Sequence

import networkx as nx
import numpy as np
from scipy.stats import norm

from decoupling import linalg
from decoupling.composition import (Composition, GlobalState, Trace, exact_step_distribution, initial_distribution,
                                    run, trial_seed)
from decoupling.distributions import Dist
from decoupling.errors import ClaimViolated, NotDirectlyConvertible, StateCapExceeded
from decoupling.graph import Graph, Lasso
from decoupling.objectives import (Buchi, CoBuchi, Conjunction, Objective, Parity, Reachability, Safety, accepts_run,
                                   liveness_part, safety_parts)
from decoupling.policies import ParityMemory

logger = logging.getLogger(__name__)

DEFAULT_STATE_CAP = 50_000


@dataclass
class GlobalChain:
    """Explicit Markov chain over the global states reachable from the initial distribution."""
    states: list[GlobalState]
    rows: list[dict[int, Fraction]]
    initial: dict[int, Fraction]
    index: dict[GlobalState, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.states)

    def vertex(self, state: int) -> int:
        return self.states[state][2]

    @cached_property
    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.states)))
        g.add_edges_from((i, j) for i, row in enumerate(self.rows) for j, p in row.items() if p > 0)
        return g

    @cached_property
    def bsccs(self) -> list[frozenset[int]]:
        return sorted((frozenset(c) for c in nx.attracting_components(self.digraph)), key=min)


def build_global_chain(comp: Composition, state_cap: int = DEFAULT_STATE_CAP,
                       initial: Dist[GlobalState] | None = None) -> GlobalChain:
    start: Dist[GlobalState] = initial if initial is not None else initial_distribution(comp)
    states: list[GlobalState] = []
    index: dict[GlobalState, int] = {}

    def intern(state: GlobalState) -> int:
        if state not in index:
            if len(states) >= state_cap:
                raise StateCapExceeded(f"more than {state_cap} global states")
            index[state] = len(states)
            states.append(state)
        return index[state]

    initial_index: dict[int, Fraction] = {}
    for state, p in start.items():
        if p > 0:
            i = intern(state)
            initial_index[i] = initial_index.get(i, Fraction(0)) + p
    rows: list[dict[int, Fraction]] = []
    while len(rows) < len(states):
        row: dict[int, Fraction] = {}
        for successor, p in exact_step_distribution(comp, states[len(rows)]).items():
            if p > 0:
                j = intern(successor)
                row[j] = row.get(j, Fraction(0)) + p
        rows.append(row)
        if len(rows) % 1000 == 0:
            logger.debug("chain frontier: %d expanded, %d known", len(rows), len(states))
    logger.info("global chain built with %d states", len(states))
    return GlobalChain(states, rows, initial_index, index)


def check_row_stochastic(chain: GlobalChain) -> None:
    for i, row in enumerate(chain.rows):
        total: Fraction = sum(row.values(), Fraction(0))
        if total != 1:
            raise ClaimViolated(chain.states[i], f"row sums to {total}")


class Outcome(Enum):
    ALMOST_SURE = "almost-sure"
    VIOLATED = "violated"


@dataclass(frozen=True)
class BsccReport:
    states: frozenset[int]
    vertices: frozenset[int]
    accepts: tuple[bool, ...]


@dataclass(frozen=True)
class Verdict:
    per_objective: tuple[Outcome, ...]
    witness: tuple[BsccReport | None, ...]
    bsccs: tuple[BsccReport, ...]
    probabilities: tuple[Fraction | float, ...]

    @property
    def all_almost_sure(self) -> bool:
        return all(outcome is Outcome.ALMOST_SURE for outcome in self.per_objective)


def absorption(chain: GlobalChain, targets: set[int],
               blocked: frozenset[int] | set[int] = frozenset()) -> Fraction | float:
    """Probability, from the initial distribution, of reaching targets before any blocked state."""
    free = chain.digraph.subgraph(s for s in range(len(chain)) if s not in blocked)
    alive: set[int] = set(targets)
    for t in targets:
        alive |= nx.ancestors(free, t)
    unknown: list[int] = sorted(alive - targets)
    position: dict[int, int] = {s: k for k, s in enumerate(unknown)}
    system: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for s in unknown:
        equation: dict[int, Fraction] = {position[s]: Fraction(1)}
        into: Fraction = Fraction(0)
        for t, p in chain.rows[s].items():
            if t in targets:
                into += p
            elif t in position:
                equation[position[t]] = equation.get(position[t], Fraction(0)) - p
        system.append(equation)
        rhs.append(into)
    solution: list[Fraction] | list[float] = linalg.solve(system, rhs)

    def value(s: int) -> Fraction | float:
        if s in targets:
            return Fraction(1)
        return solution[position[s]] if s in position else Fraction(0)

    total: Fraction | float = Fraction(0)
    for s, p in chain.initial.items():
        total += p * value(s)  # type: ignore[operator]
    return total


def almost_sure_verdict(chain: GlobalChain, objectives: Sequence[Objective],
                        projection: Callable[[GlobalState], int] | None = None) -> Verdict:
    project: Callable[[GlobalState], int] = projection or (lambda state: state[2])
    vertex: list[int] = [project(state) for state in chain.states]
    components: list[frozenset[int]] = chain.bsccs
    component_vertices: list[frozenset[int]] = [frozenset(vertex[s] for s in c) for c in components]
    outcomes: list[Outcome] = []
    witnesses: list[int | None] = []
    probabilities: list[Fraction | float] = []
    accepts: list[list[bool]] = [[] for _ in components]

    for objective in objectives:
        live = liveness_part(objective)
        safe: frozenset[int] | None = None
        for part in safety_parts(objective):
            safe = part.safe if safe is None else safe & part.safe
        unsafe: set[int] = {s for s in range(len(chain)) if safe is not None and vertex[s] not in safe}

        if isinstance(live, Reachability):
            if safe is not None:
                raise NotDirectlyConvertible("reachability inside a conjunction needs a product with a hit bit")
            hit: set[int] = {s for s in range(len(chain)) if vertex[s] in live.targets}
            missed = chain.digraph.subgraph(s for s in range(len(chain)) if s not in hit)
            avoiding: set[int] = set()
            for s in chain.initial:
                if s not in hit:
                    avoiding |= {s} | nx.descendants(missed, s)
            good = [vertex_set & live.targets != frozenset() for vertex_set in component_vertices]
            failing = [k for k, c in enumerate(components) if not good[k] and c & avoiding]
            probability = absorption(chain, hit) if failing else Fraction(1)
        else:
            good = [not (c & unsafe) and (live is None or accepts_run(live, vs, vs))
                    for c, vs in zip(components, component_vertices)]
            accepted: set[int] = {s for c, ok in zip(components, good) if ok for s in c}
            if unsafe:
                # runs into these components may already have left the safe set
                reach = set().union(*(nx.descendants(chain.digraph, s) | {s} for s in unsafe))
                good = [ok and not (c & reach) for c, ok in zip(components, good)]
            failing = [k for k, ok in enumerate(good) if not ok]
            probability = absorption(chain, accepted, unsafe) if failing else Fraction(1)

        for k, ok in enumerate(good):
            accepts[k].append(ok)
        outcomes.append(Outcome.VIOLATED if failing else Outcome.ALMOST_SURE)
        probabilities.append(probability)
        witnesses.append(failing[0] if failing else None)

    reports: tuple[BsccReport, ...] = tuple(
        BsccReport(c, vs, tuple(flags)) for c, vs, flags in zip(components, component_vertices, accepts))
    verdict = Verdict(tuple(outcomes),
                      tuple(None if w is None else reports[w] for w in witnesses),
                      reports, tuple(probabilities))
    logger.info("verdict: %s", [o.value for o in verdict.per_objective])
    return verdict


@dataclass(frozen=True)
class ClaimReport:
    mode: str
    states: int
    consensus_states: int
    bscc_states: int


def is_cobuchi_consensus(state: GlobalState) -> bool:
    return len(set(state[1])) == 1


def is_cobuchi_sink(state: GlobalState, vertex: int | None = None) -> bool:
    lasso = state[1][0]
    here: int = state[2] if vertex is None else vertex
    return is_cobuchi_consensus(state) and isinstance(lasso, Lasso) and not lasso.stem and here in lasso.cycle


def is_parity_consensus(state: GlobalState, vertex: int | None = None) -> bool:
    """No conflicting vertex is reachable from the current one along the used edges."""
    memories: Sequence[ParityMemory] = state[1]  # type: ignore[assignment]
    n: int = len(memories)
    used: dict[int, set[int]] = {}
    for i in range(n):
        for u, w in enumerate(memories[i][i]):
            used.setdefault(u, set()).add(w)
    here: int = state[2] if vertex is None else vertex
    seen: set[int] = {here}
    stack: list[int] = [here]
    while stack:
        u = stack.pop()
        if any(memories[i][i][u] != memories[j][i][u] for i in range(n) for j in range(n)):
            return False
        for w in used.get(u, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return True


def check_consensus_claims(chain: GlobalChain, comp: Composition,
                           mode: Literal["cobuchi", "parity"], embedding: Sequence[int] | None = None) -> ClaimReport:
    """Checks that consensus is closed (a), reached from everywhere (b) and holds in every BSCC (c).

    `embedding` maps the vertices the memories talk about to graph vertices.
    """
    position: dict[int, int] = {old: new for new, old in enumerate(embedding)} if embedding is not None else {}

    def local(state: GlobalState) -> int:
        return position.get(state[2], state[2])

    def consensus_test(state: GlobalState) -> bool:
        if mode == "cobuchi":
            return is_cobuchi_consensus(state)
        return is_parity_consensus(state, local(state))

    consensus: set[int] = {s for s, state in enumerate(chain.states) if consensus_test(state)}

    for s in consensus:
        for t, p in chain.rows[s].items():
            if p > 0 and t not in consensus:
                raise ClaimViolated(describe(comp.graph, chain.states[s]), "a")

    settles: set[int] = set(consensus)
    for s in consensus:
        settles |= nx.ancestors(chain.digraph, s)
    for s in range(len(chain)):
        if s not in settles:
            raise ClaimViolated(describe(comp.graph, chain.states[s]), "b")

    bottom: set[int] = {s for c in chain.bsccs for s in c}
    for s in sorted(bottom):
        state = chain.states[s]
        if mode == "cobuchi" and not is_cobuchi_sink(state, local(state)):
            raise ClaimViolated(describe(comp.graph, state), "c")
        if mode == "parity" and s not in consensus:
            raise ClaimViolated(describe(comp.graph, state), "c'")
    logger.info("consensus claims hold: %d of %d states are consensus", len(consensus), len(chain))
    return ClaimReport(mode, len(chain), len(consensus), len(bottom))


def describe(graph: Graph, state: GlobalState) -> str:
    phase, memories, vertex = state
    return f"phase {phase} at {graph.label(vertex)} with memories {memories!r}"


@dataclass(frozen=True)
class BuchiVisits:
    targets: frozenset[int]
    k: int

    def __call__(self, trace: Trace) -> bool:
        return sum(1 for v in trace.vertices[1:] if v in self.targets) >= self.k


@dataclass(frozen=True)
class CleanSuffix:
    bad: frozenset[int]
    window: int

    def __call__(self, trace: Trace) -> bool:
        return self.bad.isdisjoint(trace.vertices[-self.window:])


@dataclass(frozen=True)
class ParityTail:
    colours: tuple[int, ...]
    window: int

    def __call__(self, trace: Trace) -> bool:
        return max(self.colours[v] for v in trace.vertices[-self.window:]) % 2 == 0


def periodic(sequence: Sequence[int], bound: int) -> bool:
    return any(all(sequence[k] == sequence[k + p] for k in range(len(sequence) - p)) for p in range(1, bound + 1))


@dataclass(frozen=True)
class Stabilized:
    """Memories constant over the last `window` steps and a periodic vertex tail."""
    window: int

    def __call__(self, trace: Trace) -> bool:
        if trace.horizon < self.window:
            return False
        digests = trace.digests[-(self.window + 1):]
        tail = trace.vertices[-(self.window + 1):]
        return len(set(digests)) == 1 and periodic(tail, max(1, self.window // 2))


@dataclass(frozen=True)
class EndsIn:
    states: frozenset[GlobalState]

    def __call__(self, trace: Trace) -> bool:
        return trace.final_state in self.states


@dataclass(frozen=True)
class AllOf:
    parts: tuple[Callable[[Trace], bool], ...]

    def __call__(self, trace: Trace) -> bool:
        return all(part(trace) for part in self.parts)


type Predicate = Callable[[Trace], bool]


def finite_horizon_predicate(objective: Objective, graph: Graph, horizon: int, window: int) -> Predicate:
    """Finite-trace stand-in for an objective: k visits for Buchi, a clean tail for co-Buchi."""
    match objective:
        case Reachability(targets):
            return BuchiVisits(targets, 1)
        case Safety(safe):
            return CleanSuffix(frozenset(graph.vertices) - safe, horizon + 1)
        case Buchi(accepting):
            return BuchiVisits(accepting, 3)
        case CoBuchi(bad):
            return CleanSuffix(bad, window)
        case Parity(colours):
            return ParityTail(colours, window)
        case Conjunction(parts):
            return AllOf(tuple(finite_horizon_predicate(part, graph, horizon, window) for part in parts))


@dataclass(frozen=True)
class Estimate:
    successes: int
    trials: int
    low: float
    high: float

    @property
    def value(self) -> float:
        return self.successes / self.trials


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    z: float = float(norm.ppf(0.5 + confidence / 2))
    p: float = successes / trials
    denominator: float = 1 + z * z / trials
    centre: float = (p + z * z / (2 * trials)) / denominator
    spread: float = z * sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denominator
    low: float = 0.0 if successes == 0 else max(0.0, centre - spread)
    high: float = 1.0 if successes == trials else min(1.0, centre + spread)
    return low, high


def seeded(comp: Composition, trial: int) -> Composition:
    return Composition(comp.graph, comp.policies, comp.scheduler, comp.shield, trial_seed(comp.seed, trial))


def _count_successes(comp: Composition, horizon: int, predicate: Predicate, trials: Iterable[int]) -> int:
    return sum(1 for k in trials if predicate(run(seeded(comp, k), horizon)))


def monte_carlo_estimate(comp: Composition, horizon: int, trials: int, predicate: Predicate,
                         workers: int = 1) -> Estimate:
    if trials < 1:
        raise ValueError("at least one trial is required")
    if workers <= 1:
        successes: int = _count_successes(comp, horizon, predicate, range(trials))
    else:
        chunks = [range(start, trials, workers) for start in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            successes = sum(pool.map(_count_successes, [comp] * workers, [horizon] * workers,
                                     [predicate] * workers, chunks))
    low, high = wilson_interval(successes, trials)
    logger.info("%d trials finished: %d successes", trials, successes)
    return Estimate(successes, trials, low, high)


@dataclass(frozen=True)
class ConvergenceSummary:
    samples: tuple[tuple[int, int, bool], ...]
    mean: float
    median: float
    p95: float

    @property
    def censored(self) -> int:
        return sum(1 for _, _, censored in self.samples if censored)


def first_stable_step(trace: Trace, window: int) -> tuple[int, bool]:
    """Earliest step from which every memory stays fixed; censored when the stable tail is shorter than window."""
    digests = trace.digests
    t: int = len(digests) - 1
    while t > 0 and digests[t - 1] == digests[-1]:
        t -= 1
    return t, trace.horizon - t < window


def convergence_time(comp: Composition, trials: int, window: int, horizon: int,
                     start: GlobalState | None = None) -> ConvergenceSummary:
    samples: list[tuple[int, int, bool]] = []
    for k in range(trials):
        step, censored = first_stable_step(run(seeded(comp, k), horizon, start), window)
        samples.append((k, step, censored))
    values = np.array([step for _, step, _ in samples], dtype=float)
    summary = ConvergenceSummary(tuple(samples), float(np.mean(values)), float(np.median(values)),
                                 float(np.percentile(values, 95)))
    if summary.censored:
        logger.warning("%d of %d convergence samples censored at horizon %d", summary.censored, trials, horizon)
    return summary


def convergence_csv(summary: ConvergenceSummary) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["trial", "first_stable_step", "censored"])
    for trial, step, censored in summary.samples:
        writer.writerow([trial, step, int(censored)])
    return out.getvalue()


def verdict_to_json(verdict: Verdict, graph: Graph) -> dict[str, Any]:
    def bscc(report: BsccReport) -> dict[str, Any]:
        return {
            "states": len(report.states),
            "vertices": sorted(graph.label(v) for v in report.vertices),
            "accepts": list(report.accepts),
        }

    return {
        "per_objective": [o.value for o in verdict.per_objective],
        "probabilities": [str(p) if isinstance(p, Fraction) else f"{p:.12g}" for p in verdict.probabilities],
        "witness": [None if w is None else bscc(w) for w in verdict.witness],
        "bsccs": [bscc(b) for b in verdict.bsccs],
    }


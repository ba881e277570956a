import logging
from dataclasses import dataclass
from typing import Callable, Sequence

from decoupling.distributions import Dist, condition, dirac
from decoupling.errors import ClosureViolated, EmptyIntersection, UnrealizableFromInit
from decoupling.graph import Graph, reachable, validate
from decoupling.objectives import Objective, decompose, winning_region

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaxPermissive:
    """Per vertex, the successors that keep the safety part winnable."""
    allow: tuple[frozenset[int], ...]
    region: frozenset[int]


@dataclass(frozen=True)
class ShieldSetup:
    per_agent_chi: tuple[MaxPermissive, ...]
    joint_region: frozenset[int]
    restricted_graph: Graph
    embedding: tuple[int, ...]

    def allowed(self, vertex: int) -> frozenset[int]:
        result: frozenset[int] = self.per_agent_chi[0].allow[vertex]
        for chi in self.per_agent_chi[1:]:
            result &= chi.allow[vertex]
        return result


def safe_region(graph: Graph, objective: Objective) -> frozenset[int]:
    return winning_region(graph, decompose(graph, objective).safe_part)


def max_permissive(graph: Graph, objective: Objective) -> MaxPermissive:
    region: frozenset[int] = safe_region(graph, objective)
    if graph.init not in region:
        raise UnrealizableFromInit(f"{objective}: not realizable from {graph.label(graph.init)}")
    return MaxPermissive(
        tuple(frozenset(u for u in graph.succ(v) if u in region) if v in region else frozenset()
              for v in graph.vertices),
        region,
    )


def check_mutual_safety_closure(graph: Graph, objectives: Sequence[Objective]) -> bool:
    """Decidable stand-in for mutual safety closure.

    Holds when the part of the joint safe region reachable from init is
    deadlock-free and every liveness part stays realizable from each of its
    vertices.
    """
    joint: frozenset[int] = frozenset(graph.vertices)
    for objective in objectives:
        joint &= safe_region(graph, objective)
    if graph.init not in joint:
        logger.info("initial vertex outside the joint safe region")
        return False
    live: frozenset[int] = reachable(graph, [graph.init], joint)
    for v in live:
        if not any(u in joint for u in graph.succ(v)):
            logger.info("joint safe region deadlocks at %s", graph.label(v))
            return False
    for i, objective in enumerate(objectives):
        realizable: frozenset[int] = winning_region(graph, decompose(graph, objective).live_part)
        if not live <= realizable:
            logger.info("liveness part of objective %d unrealizable from %s", i + 1,
                        sorted(graph.label(v) for v in live - realizable))
            return False
    return True


def build_shield(graph: Graph, objectives: Sequence[Objective]) -> ShieldSetup:
    if not check_mutual_safety_closure(graph, objectives):
        raise ClosureViolated("objectives are not mutually safety-closed")
    chis: tuple[MaxPermissive, ...] = tuple(max_permissive(graph, objective) for objective in objectives)
    joint: frozenset[int] = frozenset(graph.vertices)
    for chi in chis:
        joint &= chi.region
    region: frozenset[int] = reachable(graph, [graph.init], joint)
    restricted, embedding = graph.induced(region)
    validate(restricted)
    logger.info("shield keeps %d of %d vertices", len(region), graph.n)
    return ShieldSetup(chis, region, restricted, embedding)


def shielded_propose(setup: ShieldSetup, scheduled_agent: int, raw_proposal: int, current: int,
                     requery: Callable[[frozenset[int]], int] | None = None) -> int:
    """The scheduled agent's move, forced into the intersection of every agent's allowed set."""
    allowed: frozenset[int] = setup.allowed(current)
    if not allowed:
        raise EmptyIntersection(current)
    if raw_proposal in allowed:
        return raw_proposal
    choice: int = requery(allowed) if requery is not None else min(allowed)
    if choice not in allowed:
        choice = min(allowed)
    logger.debug("agent %d: proposal %d at %d overridden by %d", scheduled_agent + 1, raw_proposal, current, choice)
    return choice


def shield_distribution(setup: ShieldSetup, current: int, proposal: Dist[int]) -> Dist[int]:
    """Distribution of shielded_propose when the raw proposal is drawn from `proposal`."""
    allowed: frozenset[int] = setup.allowed(current)
    if not allowed:
        raise EmptyIntersection(current)
    kept: Dist[int] | None = condition(proposal, lambda u: u in allowed)
    return kept if kept is not None else dirac(min(allowed))

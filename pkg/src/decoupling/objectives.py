import logging
from dataclasses import dataclass
from typing import Any, Iterable

import networkx as nx

from decoupling.errors import ConfigError, NotDirectlyConvertible, UnknownVertex
from decoupling.graph import Graph, Lasso

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Reachability:
    targets: frozenset[int]


@dataclass(frozen=True)
class Safety:
    safe: frozenset[int]


@dataclass(frozen=True)
class Buchi:
    accepting: frozenset[int]


@dataclass(frozen=True)
class CoBuchi:
    bad: frozenset[int]


@dataclass(frozen=True)
class Parity:
    colours: tuple[int, ...]


@dataclass(frozen=True)
class Conjunction:
    """Any number of Safety parts and at most one other part."""
    parts: tuple["Objective", ...]


type Objective = Reachability | Safety | Buchi | CoBuchi | Parity | Conjunction

type Liveness = Reachability | Buchi | CoBuchi | Parity


@dataclass(frozen=True)
class Decomposition:
    winning_region: frozenset[int]
    safe_part: Safety
    live_part: Parity | Reachability


def check_objective(graph: Graph, objective: Objective) -> None:
    def check_vertices(vertices: Iterable[int], what: str) -> None:
        for v in vertices:
            if not 0 <= v < graph.n:
                raise UnknownVertex(f"{what}: vertex {v} outside 0..{graph.n - 1}")

    match objective:
        case Reachability(targets):
            check_vertices(targets, "reachability targets")
        case Safety(safe):
            check_vertices(safe, "safe set")
        case Buchi(accepting):
            check_vertices(accepting, "accepting set")
        case CoBuchi(bad):
            check_vertices(bad, "bad set")
        case Parity(colours):
            if len(colours) != graph.n:
                raise UnknownVertex(f"parity colouring has {len(colours)} entries for {graph.n} vertices")
            if any(c < 0 for c in colours):
                raise UnknownVertex("parity colours must be natural numbers")
        case Conjunction(parts):
            if len(liveness_parts(objective)) > 1:
                raise UnknownVertex("a conjunction may contain at most one non-safety part")
            for part in parts:
                check_objective(graph, part)


def safety_parts(objective: Objective) -> list[Safety]:
    match objective:
        case Safety():
            return [objective]
        case Conjunction(parts):
            return [s for part in parts for s in safety_parts(part)]
        case _:
            return []


def liveness_parts(objective: Objective) -> list[Liveness]:
    match objective:
        case Safety():
            return []
        case Conjunction(parts):
            return [p for part in parts for p in liveness_parts(part)]
        case _:
            return [objective]


def liveness_part(objective: Objective) -> Liveness | None:
    parts: list[Liveness] = liveness_parts(objective)
    return parts[0] if parts else None


def to_parity(objective: Objective, graph: Graph) -> Parity:
    match objective:
        case Parity():
            return objective
        case Buchi(accepting):
            return Parity(tuple(2 if v in accepting else 1 for v in graph.vertices))
        case CoBuchi(bad):
            return Parity(tuple(1 if v in bad else 0 for v in graph.vertices))
        case _:
            raise NotDirectlyConvertible(f"{type(objective).__name__} has no positional parity form")


def accepts_run(objective: Objective, recurring: frozenset[int], visited: frozenset[int]) -> bool:
    """Acceptance of a run from the vertices it visits and those it visits infinitely often."""
    match objective:
        case Reachability(targets):
            return not targets.isdisjoint(visited)
        case Safety(safe):
            return visited <= safe
        case Buchi(accepting):
            return not accepting.isdisjoint(recurring)
        case CoBuchi(bad):
            return bad.isdisjoint(recurring)
        case Parity(colours):
            return max(colours[v] for v in recurring) % 2 == 0
        case Conjunction(parts):
            return all(accepts_run(part, recurring, visited) for part in parts)


def satisfies_lasso(objective: Objective, lasso: Lasso) -> bool:
    return accepts_run(objective, frozenset(lasso.cycle), lasso.vertices)


def safety_fixpoint(graph: Graph, safe: frozenset[int]) -> frozenset[int]:
    region: set[int] = set(safe)
    changed = True
    while changed:
        changed = False
        for v in sorted(region):
            if not any(u in region for u in graph.succ(v)):
                region.discard(v)
                changed = True
    return frozenset(region)


def can_reach(graph: Graph, targets: frozenset[int], within: frozenset[int] | None = None) -> frozenset[int]:
    """Vertices inside `within` with a path staying in `within` into targets."""
    region: frozenset[int] = frozenset(graph.vertices) if within is None else within
    sub = graph.digraph.subgraph(region)
    found: set[int] = set(targets & region)
    for t in list(found):
        found |= nx.ancestors(sub, t)
    return frozenset(found)


def parity_winning(graph: Graph, colours: tuple[int, ...], within: frozenset[int] | None = None) -> frozenset[int]:
    region: frozenset[int] = frozenset(graph.vertices) if within is None else within
    seeds: set[int] = set()
    for top in sorted({colours[v] for v in region if colours[v] % 2 == 0}):
        allowed = [v for v in region if colours[v] <= top]
        sub = graph.digraph.subgraph(allowed)
        for component in nx.strongly_connected_components(sub):
            nontrivial: bool = len(component) > 1 or any(sub.has_edge(v, v) for v in component)
            if nontrivial and any(colours[v] == top for v in component):
                seeds |= component
    return can_reach(graph, frozenset(seeds), region)


def winning_region(graph: Graph, objective: Objective) -> frozenset[int]:
    safe: frozenset[int] = frozenset(graph.vertices)
    for part in safety_parts(objective):
        safe &= part.safe
    arena: frozenset[int] = safety_fixpoint(graph, safe)
    match liveness_part(objective):
        case None:
            region = arena
        case Reachability(targets):
            region = can_reach(graph, targets & arena, arena)
        case live:
            region = parity_winning(graph, to_parity(live, graph).colours, arena)
    logger.debug("winning region of %s: %s", objective, sorted(region))
    return region


def decompose(graph: Graph, objective: Objective) -> Decomposition:
    """Split into Safety(W) and a liveness part accepting every path that leaves W."""
    region: frozenset[int] = winning_region(graph, objective)
    outside: frozenset[int] = frozenset(graph.vertices) - region
    live_part: Parity | Reachability
    match liveness_part(objective):
        case Reachability(targets):
            live_part = Reachability(targets | outside)
        case None:
            live_part = Parity(tuple(0 if v in region else 2 for v in graph.vertices))
        case live:
            inner: tuple[int, ...] = to_parity(live, graph).colours
            top: int = max(inner) + 1 if max(inner) % 2 == 1 else max(inner) + 2
            live_part = Parity(tuple(inner[v] if v in region else top for v in graph.vertices))
    return Decomposition(region, Safety(region), live_part)


def objective_to_json(objective: Objective) -> dict[str, Any]:
    match objective:
        case Reachability(targets):
            return {"kind": "reach", "targets": sorted(targets)}
        case Safety(safe):
            return {"kind": "safety", "safe": sorted(safe)}
        case Buchi(accepting):
            return {"kind": "buchi", "accepting": sorted(accepting)}
        case CoBuchi(bad):
            return {"kind": "cobuchi", "bad": sorted(bad)}
        case Parity(colours):
            return {"kind": "parity", "colours": list(colours)}
        case Conjunction(parts):
            return {"kind": "and", "parts": [objective_to_json(part) for part in parts]}


def objective_from_json(data: Any, where: str = "objective") -> Objective:
    if not isinstance(data, dict):
        raise ConfigError(where, "expected an object")

    def vertex_set(key: str) -> frozenset[int]:
        values = data.get(key)
        if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
            raise ConfigError(f"{where}.{key}", "expected a list of vertex indices")
        return frozenset(values)

    match data.get("kind"):
        case "reach":
            return Reachability(vertex_set("targets"))
        case "safety":
            return Safety(vertex_set("safe"))
        case "buchi":
            return Buchi(vertex_set("accepting"))
        case "cobuchi":
            return CoBuchi(vertex_set("bad"))
        case "parity":
            colours = data.get("colours")
            if not isinstance(colours, list) or not all(isinstance(c, int) for c in colours):
                raise ConfigError(f"{where}.colours", "expected a list of colours")
            return Parity(tuple(colours))
        case "and":
            parts = data.get("parts")
            if not isinstance(parts, list):
                raise ConfigError(f"{where}.parts", "expected a list of objectives")
            return Conjunction(tuple(objective_from_json(p, f"{where}.parts[{i}]") for i, p in enumerate(parts)))
        case kind:
            raise ConfigError(f"{where}.kind", f"unknown objective kind {kind!r}")

import hashlib
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Sequence

import numpy as np

from decoupling.distributions import Dist, condition, mixture, sample
from decoupling.errors import ConfigError
from decoupling.graph import Graph
from decoupling.policies import Observation, ObservationClass, Policy
from decoupling.scheduler import SchedulerSpec, distribution, period, uniform
from decoupling.shield import ShieldSetup, shield_distribution, shielded_propose

logger = logging.getLogger(__name__)

type Memories = tuple[Hashable, ...]
# (scheduler phase, memory of every agent, current vertex)
type GlobalState = tuple[int, Memories, int]


@dataclass(frozen=True)
class Composition:
    graph: Graph
    policies: tuple[Policy[Any], ...]
    scheduler: SchedulerSpec
    shield: ShieldSetup | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.policies) != self.scheduler.n_agents:
            raise ConfigError("composition", f"{len(self.policies)} policies for a scheduler over "
                              f"{self.scheduler.n_agents} agents")
        if self.shield is not None and len(self.shield.per_agent_chi) != len(self.policies):
            raise ConfigError("composition", "shield and policies disagree on the number of agents")
        if self.shield is not None and self.graph.init not in self.shield.joint_region:
            raise ConfigError("composition", "initial vertex outside the shielded region")

    @property
    def n_agents(self) -> int:
        return len(self.policies)


@dataclass(frozen=True)
class StepRecord:
    vertex_before: int
    proposals: tuple[int, ...]
    scheduled: int
    vertex_after: int
    overridden: bool
    memory_digest: tuple[int, ...]


@dataclass(frozen=True)
class Trace:
    steps: tuple[StepRecord, ...]
    horizon: int
    initial_digest: tuple[int, ...]
    final_state: GlobalState = field(compare=False)

    @property
    def vertices(self) -> list[int]:
        if not self.steps:
            return [self.final_state[2]]
        return [self.steps[0].vertex_before] + [s.vertex_after for s in self.steps]

    @property
    def digests(self) -> list[tuple[int, ...]]:
        return [self.initial_digest] + [s.memory_digest for s in self.steps]


def memory_digest(memory: Hashable) -> int:
    """Stable 64-bit hash of a memory state's canonical encoding."""
    return int.from_bytes(hashlib.blake2b(repr(memory).encode(), digest_size=8).digest(), "big")


def substreams(seed: int, n_agents: int) -> list[np.random.Generator]:
    """Role 0 drives the scheduler, role 1 + i drives policy i."""
    return [np.random.default_rng(np.random.SeedSequence([seed, role])) for role in range(n_agents + 1)]


def trial_seed(master: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, trial]).generate_state(1, dtype=np.uint64)[0])


def observe(policy: Policy[Any], before: int, after: int, own_choice: int, scheduled: int, me: int) -> Observation:
    match policy.observation_class:
        case ObservationClass.PATH_AWARE:
            return Observation(before, after, own_choice)
        case ObservationClass.SCHEDULED_AWARE:
            return Observation(before, after, own_choice, scheduled == me)
        case ObservationClass.FULL_HISTORY_AWARE:
            return Observation(before, after, own_choice, scheduled == me, scheduled)


def initial_distribution(comp: Composition) -> Dist[GlobalState]:
    memories: Dist[Memories] = joint([policy.initial_memory() for policy in comp.policies])
    return {(0, m, comp.graph.init): p for m, p in memories.items()}


def joint(dists: Sequence[Dist[Hashable]]) -> Dist[Memories]:
    result: Dist[Memories] = {(): Fraction(1)}
    for dist in dists:
        result = {prefix + (value,): p * q for prefix, p in result.items() for value, q in dist.items() if q > 0}
    return result


def run(comp: Composition, horizon: int, start: GlobalState | None = None) -> Trace:
    """One seeded run of `horizon` steps."""
    graph: Graph = comp.graph
    scheduler_rng, *policy_rngs = substreams(comp.seed, comp.n_agents)
    if start is None:
        memories: list[Hashable] = [sample(policy.initial_memory(), rng)
                                    for policy, rng in zip(comp.policies, policy_rngs)]
        vertex: int = graph.init
        phase: int = 0
    else:
        phase, start_memories, vertex = start
        memories = list(start_memories)
    initial_digest: tuple[int, ...] = tuple(memory_digest(m) for m in memories)
    steps: list[StepRecord] = []

    for t in range(horizon):
        proposals: tuple[int, ...] = tuple(
            sample(policy.propose(m, vertex), rng) for policy, m, rng in zip(comp.policies, memories, policy_rngs))
        agent: int = sample(distribution(comp.scheduler, phase + t), scheduler_rng)
        after: int = proposals[agent]
        if comp.shield is not None:
            def requery(allowed: frozenset[int]) -> int:
                kept = condition(comp.policies[agent].propose(memories[agent], vertex), lambda u: u in allowed)
                return sample(kept, policy_rngs[agent]) if kept is not None else min(allowed)
            after = shielded_propose(comp.shield, agent, after, vertex, requery)
        assert graph.has_edge(vertex, after), f"step {t}: {vertex} -> {after} is not an edge"

        for i, policy in enumerate(comp.policies):
            own: int = after if i == agent else proposals[i]
            observation: Observation = observe(policy, vertex, after, own, agent, i)
            memories[i] = sample(policy.update(memories[i], observation), policy_rngs[i])
        steps.append(StepRecord(vertex, proposals, agent, after, after != proposals[agent],
                                tuple(memory_digest(m) for m in memories)))
        vertex = after

    final: GlobalState = ((phase + horizon) % period(comp.scheduler), tuple(memories), vertex)
    return Trace(tuple(steps), horizon, initial_digest, final)


def exact_step_distribution(comp: Composition, state: GlobalState) -> Dist[GlobalState]:
    """Exact one-step law of the global process.

    Sum over the scheduled agent j of sigma(j) times j's (shielded) move and
    update, times the product over the other agents of their update averaged
    over their own proposals.
    """
    phase, memories, vertex = state
    next_phase: int = (phase + 1) % period(comp.scheduler)
    branches: list[tuple[Fraction, Dist[GlobalState]]] = []
    for agent, weight in distribution(comp.scheduler, phase).items():
        policy: Policy[Any] = comp.policies[agent]
        moves: Dist[int] = policy.propose(memories[agent], vertex)
        if comp.shield is not None:
            moves = shield_distribution(comp.shield, vertex, moves)
        for after, p in moves.items():
            updates: list[Dist[Hashable]] = []
            for i, other in enumerate(comp.policies):
                if i == agent:
                    updates.append(other.update(memories[i], observe(other, vertex, after, after, agent, i)))
                else:
                    updates.append(mixture(
                        (q, other.update(memories[i], observe(other, vertex, after, own, agent, i)))
                        for own, q in other.propose(memories[i], vertex).items()
                    ))
            successor: Dist[GlobalState] = {(next_phase, m, after): q for m, q in joint(updates).items()}
            branches.append((weight * p, successor))
    return mixture(branches)


def trace_to_jsonl(trace: Trace, graph: Graph) -> str:
    lines: list[str] = []
    for t, step in enumerate(trace.steps):
        lines.append(json.dumps({
            "step": t,
            "before": graph.label(step.vertex_before),
            "proposals": [graph.label(u) for u in step.proposals],
            "scheduled": step.scheduled + 1,
            "after": graph.label(step.vertex_after),
            "overridden": step.overridden,
            "memory_digest": [f"{d:016x}" for d in step.memory_digest],
        }, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def solo(graph: Graph, policy: Policy[Any], seed: int = 0) -> Composition:
    return Composition(graph, (policy,), uniform(1), None, seed)


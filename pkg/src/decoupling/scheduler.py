from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from decoupling.distributions import Dist, dirac, sample
from decoupling.errors import ConfigError


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class WeightedFair:
    weights: tuple[Fraction, ...]


@dataclass(frozen=True)
class RoundRobin:
    order: tuple[int, ...]


@dataclass(frozen=True)
class Scripted:
    sequence: tuple[int, ...]


type SchedulerKind = Uniform | WeightedFair | RoundRobin | Scripted


@dataclass(frozen=True)
class SchedulerSpec:
    """Rule choosing the acting agent. Agents are 0-based here, 1-based in JSON."""
    kind: SchedulerKind
    n_agents: int

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ConfigError("scheduler", "at least one agent is required")
        match self.kind:
            case WeightedFair(weights):
                if len(weights) != self.n_agents:
                    raise ConfigError("scheduler.weights", f"{len(weights)} weights for {self.n_agents} agents")
                if any(w <= 0 for w in weights):
                    raise ConfigError("scheduler.weights", "weights must be strictly positive")
            case RoundRobin(order):
                if sorted(order) != list(range(self.n_agents)):
                    raise ConfigError("scheduler.order", "round-robin order must be a permutation of the agents")
            case Scripted(sequence):
                if not sequence:
                    raise ConfigError("scheduler.seq", "scripted sequence is empty")
                if any(not 0 <= a < self.n_agents for a in sequence):
                    raise ConfigError("scheduler.seq", f"agent outside 1..{self.n_agents}")


def uniform(n_agents: int) -> SchedulerSpec:
    return SchedulerSpec(Uniform(), n_agents)


def weighted(weights: Sequence[int | Fraction]) -> SchedulerSpec:
    return SchedulerSpec(WeightedFair(tuple(Fraction(w) for w in weights)), len(weights))


def round_robin(n_agents: int, order: Sequence[int] | None = None) -> SchedulerSpec:
    return SchedulerSpec(RoundRobin(tuple(order) if order is not None else tuple(range(n_agents))), n_agents)


def scripted(sequence: Sequence[int], n_agents: int | None = None) -> SchedulerSpec:
    return SchedulerSpec(Scripted(tuple(sequence)), n_agents if n_agents is not None else max(sequence) + 1)


def is_deterministic(spec: SchedulerSpec) -> bool:
    return isinstance(spec.kind, RoundRobin | Scripted)


def period(spec: SchedulerSpec) -> int:
    """Length after which the step-indexed distribution repeats."""
    match spec.kind:
        case RoundRobin(order):
            return len(order)
        case Scripted(sequence):
            return len(sequence)
        case _:
            return 1


def distribution(spec: SchedulerSpec, step: int) -> Dist[int]:
    """Exact distribution of the agent scheduled at `step` (= history length)."""
    match spec.kind:
        case Uniform():
            return {agent: Fraction(1, spec.n_agents) for agent in range(spec.n_agents)}
        case WeightedFair(weights):
            total: Fraction = sum(weights, Fraction(0))
            return {agent: w / total for agent, w in enumerate(weights)}
        case RoundRobin(order):
            return dirac(order[step % len(order)])
        case Scripted(sequence):
            return dirac(sequence[step % len(sequence)])


def next_agent(spec: SchedulerSpec, history: Sequence[int], rng: np.random.Generator) -> int:
    return sample(distribution(spec, len(history)), rng)


def fairness_epsilon(spec: SchedulerSpec) -> Fraction | None:
    if is_deterministic(spec):
        return None
    return min(distribution(spec, 0).values())


def scheduler_to_json(spec: SchedulerSpec) -> dict[str, Any]:
    match spec.kind:
        case Uniform():
            return {"kind": "uniform", "n": spec.n_agents}
        case WeightedFair(weights):
            return {"kind": "weighted", "weights": [str(w) for w in weights]}
        case RoundRobin(order):
            return {"kind": "roundrobin", "n": spec.n_agents, "order": [a + 1 for a in order]}
        case Scripted(sequence):
            return {"kind": "scripted", "n": spec.n_agents, "seq": [a + 1 for a in sequence]}


def scheduler_from_json(data: Any, n_agents: int | None = None, where: str = "scheduler") -> SchedulerSpec:
    if not isinstance(data, dict):
        raise ConfigError(where, "expected an object")
    n: int | None = data.get("n", n_agents)

    def agents(key: str) -> list[int]:
        values = data.get(key)
        if not isinstance(values, list) or not all(isinstance(a, int) and a >= 1 for a in values):
            raise ConfigError(f"{where}.{key}", "expected a list of 1-based agent indices")
        return [a - 1 for a in values]

    match data.get("kind"):
        case "uniform":
            if not isinstance(n, int):
                raise ConfigError(f"{where}.n", "agent count missing")
            return uniform(n)
        case "weighted":
            try:
                weights = [Fraction(w) for w in data["weights"]]
            except (KeyError, TypeError, ValueError, ZeroDivisionError):
                raise ConfigError(f"{where}.weights", "expected a list of positive rationals") from None
            return weighted(weights)
        case "roundrobin":
            if "order" in data:
                order = agents("order")
                return round_robin(len(order), order)
            if not isinstance(n, int):
                raise ConfigError(f"{where}.n", "agent count missing")
            return round_robin(n)
        case "scripted":
            return scripted(agents("seq"), n)
        case kind:
            raise ConfigError(f"{where}.kind", f"unknown scheduler kind {kind!r}")

import json
import os
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Literal, Mapping, Sequence

from decoupling.analysis import DEFAULT_STATE_CAP, AllOf, BuchiVisits, CleanSuffix, Predicate, Stabilized
from decoupling.errors import ConfigError, DecouplingError
from decoupling.graph import Graph, Lasso, graph_from_json, graph_to_json
from decoupling.objectives import (Buchi, CoBuchi, Conjunction, Objective, Parity, Reachability, Safety,
                                   check_objective, liveness_part, objective_from_json, objective_to_json, to_parity)
from decoupling.policies import (DEFAULT_MAX_EXPONENT, AlternatingPolicy, DetDefeatPolicy, MemorylessPolicy, Policy,
                                 buchi_convention_policy, cobuchi_convention_policy, construct_good_tuple,
                                 exp_dwell_policy, memoryless_cobuchi_counterexample, parity_convention_policy,
                                 shortest_path_policy)
from decoupling.scheduler import SchedulerSpec, scheduler_from_json, scheduler_to_json

SEED_VARIABLE = "DECOUPLING_SEED"

type Mode = Literal["simulate", "exact", "both"]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    graph: Graph
    objectives: tuple[Objective, ...]
    policies: tuple[Mapping[str, Any], ...]
    scheduler: SchedulerSpec
    shield: bool = False
    mode: Mode = "both"
    horizon: int = 1000
    trials: int = 100
    seed: int = 0
    state_cap: int = DEFAULT_STATE_CAP
    expect: tuple[str, ...] = ()
    predicate: Mapping[str, Any] | None = None
    claims: Literal["cobuchi", "parity"] | None = None
    window: int | None = None
    description: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return len(self.policies)

    @property
    def stabilization_window(self) -> int:
        return self.window if self.window is not None else 2 * self.graph.n


def default_seed() -> int | None:
    value: str | None = os.environ.get(SEED_VARIABLE)
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        raise ConfigError(SEED_VARIABLE, f"not an integer: {value!r}") from None


def check_config(config: ExperimentConfig) -> None:
    where: str = config.name or "config"
    if len(config.objectives) != len(config.policies):
        raise ConfigError(f"{where}.policies", f"{len(config.policies)} policies for {len(config.objectives)} objectives")
    if config.scheduler.n_agents != len(config.policies):
        raise ConfigError(f"{where}.scheduler", f"scheduler over {config.scheduler.n_agents} agents, "
                          f"{len(config.policies)} policies")
    if config.expect and len(config.expect) != len(config.objectives):
        raise ConfigError(f"{where}.expect", "one expected verdict per objective")
    for verdict in config.expect:
        if verdict not in ("almost-sure", "violated"):
            raise ConfigError(f"{where}.expect", f"unknown verdict {verdict!r}")
    if config.mode not in ("simulate", "exact", "both"):
        raise ConfigError(f"{where}.mode", f"unknown mode {config.mode!r}")
    for key, value in (("horizon", config.horizon), ("trials", config.trials), ("state_cap", config.state_cap)):
        if value < 1:
            raise ConfigError(f"{where}.{key}", "must be positive")
    for i, objective in enumerate(config.objectives):
        try:
            check_objective(config.graph, objective)
        except DecouplingError as e:
            raise ConfigError(f"{where}.objectives[{i}]", str(e)) from None
    for i, spec in enumerate(config.policies):
        if spec.get("type") not in policy_builders:
            raise ConfigError(f"{where}.policies[{i}].type", f"unknown policy type {spec.get('type')!r}")


@dataclass(frozen=True)
class BuildContext:
    """Everything a policy builder may look at. `graph` is the arena the policy runs on."""
    graph: Graph
    full_graph: Graph
    objective: Objective
    objectives: tuple[Objective, ...]
    agent: int
    scheduler: SchedulerSpec
    embedding: tuple[int, ...] | None = None

    def local(self, vertices: Sequence[int]) -> list[int]:
        if self.embedding is None:
            return list(vertices)
        position: dict[int, int] = {old: new for new, old in enumerate(self.embedding)}
        return [position[v] for v in vertices if v in position]

    def colouring(self, objective: Objective) -> Parity:
        live = liveness_part(objective)
        if live is None or isinstance(live, Reachability):
            raise ConfigError(f"policies[{self.agent}]", "parity conventions need a parity-family objective")
        colours: tuple[int, ...] = to_parity(live, self.full_graph).colours
        if self.embedding is None:
            return Parity(colours)
        return Parity(tuple(colours[old] for old in self.embedding))


type PolicyBuilder = Callable[[BuildContext, Mapping[str, Any]], Policy[Any]]

policy_builders: dict[str, PolicyBuilder] = {}


def _policy(name: str) -> Callable[[PolicyBuilder], PolicyBuilder]:
    """Function decorator that registers that function as a policy builder."""
    def wrapper(f: PolicyBuilder) -> PolicyBuilder:
        assert name not in policy_builders
        policy_builders[name] = f
        return f
    return wrapper


def _vertices(params: Mapping[str, Any], key: str, default: Sequence[int] | None = None) -> list[int]:
    values = params.get(key, default)
    if not isinstance(values, list | tuple) or not all(isinstance(v, int) for v in values):
        raise ConfigError(key, "expected a list of vertex indices")
    return list(values)


def _targets(objective: Objective) -> list[int]:
    match liveness_part(objective):
        case Reachability(targets):
            return sorted(targets)
        case Buchi(accepting):
            return sorted(accepting)
        case _:
            if isinstance(objective, Safety):
                return sorted(objective.safe)
            raise ConfigError("targets", f"cannot infer targets from {type(objective).__name__}")


def _bad(objective: Objective) -> list[int]:
    match liveness_part(objective):
        case CoBuchi(bad):
            return sorted(bad)
        case _:
            raise ConfigError("bad", f"cannot infer a bad set from {type(objective).__name__}")


@_policy("shortest_path")
def _shortest_path(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    return shortest_path_policy(ctx.graph, ctx.local(_vertices(params, "targets", _targets(ctx.objective))))


@_policy("buchi_convention")
def _buchi_convention(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    return buchi_convention_policy(ctx.graph, ctx.local(_vertices(params, "accepting", _targets(ctx.objective))))


@_policy("cobuchi_convention")
def _cobuchi_convention(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    bad: list[int] = ctx.local(_vertices(params, "bad", _bad(ctx.objective)))
    return cobuchi_convention_policy(ctx.graph, bad, params.get("seed"), params.get("on_conflict", "resample"))


@_policy("parity_convention")
def _parity_convention(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    colourings: list[Parity] = [ctx.colouring(objective) for objective in ctx.objectives]
    seeds = []
    if "witness" in params:
        witness = params["witness"]
        lasso = Lasso(tuple(ctx.local(witness.get("stem", []))), tuple(ctx.local(witness["cycle"])))
        seeds.append(construct_good_tuple(ctx.graph, colourings, lasso, ctx.scheduler))
    return parity_convention_policy(ctx.graph, colourings[ctx.agent], len(ctx.objectives), ctx.scheduler, ctx.agent,
                                    params.get("seed"), params.get("tuple_space", "cycle_attractors"), seeds)


@_policy("exp_dwell")
def _exp_dwell(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    return exp_dwell_policy(ctx.graph, ctx.agent, int(params.get("growth", 2)),
                            int(params.get("max_exponent", DEFAULT_MAX_EXPONENT)))


@_policy("det_defeat")
def _det_defeat(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    schedule: SchedulerSpec = ctx.scheduler
    if "schedule" in params:
        schedule = scheduler_from_json(params["schedule"], len(ctx.objectives))
    return DetDefeatPolicy(ctx.graph, ctx.agent, schedule)


@_policy("cobuchi_counterexample")
def _cobuchi_counterexample(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    return memoryless_cobuchi_counterexample(ctx.graph)[ctx.agent]


@_policy("memoryless")
def _memoryless(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    return MemorylessPolicy(ctx.graph, tuple(_vertices(params, "choice")))


@_policy("alternating")
def _alternating(ctx: BuildContext, params: Mapping[str, Any]) -> Policy[Any]:
    at: int = ctx.local([int(params["at"])])[0]
    return AlternatingPolicy(ctx.graph, at, ctx.local(_vertices(params, "choices")))


def build_policy(ctx: BuildContext, spec: Mapping[str, Any]) -> Policy[Any]:
    kind = spec.get("type")
    if kind not in policy_builders:
        raise ConfigError(f"policies[{ctx.agent}].type", f"unknown policy type {kind!r}")
    try:
        return policy_builders[kind](ctx, spec)
    except KeyError as e:
        raise ConfigError(f"policies[{ctx.agent}]", f"missing parameter {e}") from None


def predicate_from_json(data: Mapping[str, Any], where: str = "predicate") -> Predicate:
    match data.get("kind"):
        case "buchi_visits":
            return BuchiVisits(frozenset(_vertices(data, "targets")), int(data.get("k", 1)))
        case "clean_suffix":
            return CleanSuffix(frozenset(_vertices(data, "bad")), int(data["window"]))
        case "stabilized":
            return Stabilized(int(data["window"]))
        case "all":
            return AllOf(tuple(predicate_from_json(p, f"{where}.parts[{i}]") for i, p in enumerate(data["parts"])))
        case kind:
            raise ConfigError(f"{where}.kind", f"unknown predicate {kind!r}")


def config_to_json(config: ExperimentConfig) -> dict[str, Any]:
    data: dict[str, Any] = {
        "name": config.name,
        "description": config.description,
        "graph": graph_to_json(config.graph),
        "objectives": [objective_to_json(o) for o in config.objectives],
        "policies": [dict(p) for p in config.policies],
        "scheduler": scheduler_to_json(config.scheduler),
        "shield": config.shield,
        "mode": config.mode,
        "horizon": config.horizon,
        "trials": config.trials,
        "seed": config.seed,
        "state_cap": config.state_cap,
        "expect": list(config.expect),
    }
    if config.predicate is not None:
        data["predicate"] = dict(config.predicate)
    if config.claims is not None:
        data["claims"] = config.claims
    if config.window is not None:
        data["window"] = config.window
    if config.extra:
        data["extra"] = dict(config.extra)
    return data


def config_from_json(data: Any, where: str = "config") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError(where, "expected an object")
    try:
        graph: Graph = graph_from_json(data["graph"])
    except KeyError:
        raise ConfigError(f"{where}.graph", "missing") from None
    except DecouplingError as e:
        raise ConfigError(f"{where}.graph", str(e)) from None
    objectives = tuple(objective_from_json(o, f"{where}.objectives[{i}]")
                       for i, o in enumerate(data.get("objectives", [])))
    policies = tuple(data.get("policies", []))
    if not all(isinstance(p, dict) for p in policies):
        raise ConfigError(f"{where}.policies", "expected a list of policy objects")
    scheduler = scheduler_from_json(data.get("scheduler", {"kind": "uniform"}), len(policies), f"{where}.scheduler")
    config = ExperimentConfig(
        name=str(data.get("name", "")),
        graph=graph,
        objectives=objectives,
        policies=policies,
        scheduler=scheduler,
        shield=bool(data.get("shield", False)),
        mode=data.get("mode", "both"),
        horizon=int(data.get("horizon", 1000)),
        trials=int(data.get("trials", 100)),
        seed=int(data.get("seed", 0)),
        state_cap=int(data.get("state_cap", DEFAULT_STATE_CAP)),
        expect=tuple(data.get("expect", [])),
        predicate=data.get("predicate"),
        claims=data.get("claims"),
        window=data.get("window"),
        description=str(data.get("description", "")),
        extra=data.get("extra", {}),
    )
    check_config(config)
    return config


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}", e.msg) from None
    except OSError as e:
        raise ConfigError(path, e.strerror or str(e)) from None
    return config_from_json(data, path)


def override(config: ExperimentConfig, **changes: Any) -> ExperimentConfig:
    """Copy of config with every non-None change applied."""
    updated: ExperimentConfig = replace(config, **{k: v for k, v in changes.items() if v is not None})
    check_config(updated)
    return updated


def conjunction(*parts: Objective) -> Conjunction:
    return Conjunction(tuple(parts))

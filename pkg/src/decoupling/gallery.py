"""Built-in example instances, each with the verdicts it is expected to produce."""
import json
from typing import Callable

from decoupling.config import ExperimentConfig, config_from_json, config_to_json, conjunction
from decoupling.errors import ConfigError
from decoupling.graph import Graph, make_graph
from decoupling.objectives import Buchi, CoBuchi, Reachability, Safety, objective_to_json
from decoupling.scheduler import round_robin, uniform

HEXAGON_LABELS = ("l", "t1", "t2", "r", "b2", "b1")
TWO_LOBE_LABELS = ("v", "a1", "a2", "b1", "b2")
FORK_LABELS = ("v", "a1", "a2")
SELF_LOOP_LABELS = ("v0", "v1", "v11", "v12")


def hexagon_graph(init: str = "t2") -> Graph:
    """Hexagon l - t1 - t2 - r - b2 - b1 - l, both directions, self-loops at l and r."""
    ring: list[str] = list(HEXAGON_LABELS)
    edges: list[tuple[str, str]] = [("l", "l"), ("r", "r")]
    for a, b in zip(ring, ring[1:] + ring[:1]):
        edges += [(a, b), (b, a)]
    return make_graph(HEXAGON_LABELS, edges, init)


def two_lobe_graph() -> Graph:
    edges: list[tuple[str, str]] = []
    for i in ("1", "2"):
        edges += [("v", f"a{i}"), (f"a{i}", f"a{i}"), (f"a{i}", "v"), (f"a{i}", f"b{i}"), (f"b{i}", "v")]
    return make_graph(TWO_LOBE_LABELS, edges, "v")


def fork_graph() -> Graph:
    return make_graph(FORK_LABELS, [("v", "v"), ("v", "a1"), ("v", "a2"), ("a1", "v"), ("a2", "v")], "v")


def self_loop_graph() -> Graph:
    return make_graph(SELF_LOOP_LABELS, [("v0", "v0"), ("v0", "v1"), ("v1", "v11"), ("v1", "v12"),
                                    ("v11", "v0"), ("v12", "v0")], "v0")


def _vertices(graph: Graph, *labels: str) -> frozenset[int]:
    return frozenset(graph.indices(labels))


def _all_but(graph: Graph, *labels: str) -> frozenset[int]:
    return frozenset(graph.vertices) - _vertices(graph, *labels)


def _path(graph: Graph, *labels: str) -> list[int]:
    return [graph.index(label) for label in labels]


gallery: dict[str, Callable[[], ExperimentConfig]] = {}


def _entry(name: str) -> Callable[[Callable[[], ExperimentConfig]], Callable[[], ExperimentConfig]]:
    """Function decorator that registers a gallery instance under `name`."""
    def wrapper(f: Callable[[], ExperimentConfig]) -> Callable[[], ExperimentConfig]:
        assert name not in gallery
        gallery[name] = f
        return f
    return wrapper


@_entry("fig1a-reach")
def _fig1a_reach() -> ExperimentConfig:
    graph: Graph = hexagon_graph()
    return ExperimentConfig(
        "fig1a-reach", graph,
        (Reachability(_vertices(graph, "l")), Reachability(_vertices(graph, "r"))),
        ({"type": "shortest_path"}, {"type": "shortest_path"}),
        uniform(2), horizon=200, trials=200, expect=("almost-sure", "almost-sure"),
        description="shortest-path policies towards opposite ends of the hexagon under a fair coin",
    )


@_entry("fig1a-buchi-convention")
def _fig1a_buchi_convention() -> ExperimentConfig:
    graph: Graph = hexagon_graph()
    return ExperimentConfig(
        "fig1a-buchi-convention", graph,
        (Buchi(_vertices(graph, "l")), Buchi(_vertices(graph, "r"))),
        ({"type": "buchi_convention"}, {"type": "buchi_convention"}),
        uniform(2), horizon=1000, trials=200, expect=("almost-sure", "almost-sure"),
        description="memoryless shortest-path Buchi conventions keep visiting both ends",
    )


@_entry("fig1a-cobuchi")
def _fig1a_cobuchi() -> ExperimentConfig:
    graph: Graph = hexagon_graph("t1")
    return ExperimentConfig(
        "fig1a-cobuchi", graph,
        (CoBuchi(_all_but(graph, "l")), CoBuchi(_all_but(graph, "l", "r"))),
        ({"type": "cobuchi_convention"}, {"type": "cobuchi_convention"}),
        uniform(2), horizon=1000, trials=200, expect=("almost-sure", "almost-sure"), claims="cobuchi",
        description="lasso-guessing co-Buchi conventions settle on the self-loop at l",
    )


@_entry("fig1a-cobuchi-3")
def _fig1a_cobuchi_3() -> ExperimentConfig:
    graph: Graph = hexagon_graph("t1")
    return ExperimentConfig(
        "fig1a-cobuchi-3", graph,
        (CoBuchi(_all_but(graph, "l")), CoBuchi(_all_but(graph, "l", "r")), CoBuchi(_all_but(graph, "l", "r"))),
        ({"type": "cobuchi_convention"},) * 3,
        uniform(3), mode="simulate", horizon=2000, trials=200, expect=("almost-sure",) * 3,
        description="three co-Buchi conventions; only the self-loop at l satisfies everyone",
    )


@_entry("fig1a-parity")
def _fig1a_parity() -> ExperimentConfig:
    graph: Graph = hexagon_graph()
    keep_out: Safety = Safety(_all_but(graph, "b1"))
    witness = {"stem": [], "cycle": _path(graph, "l", "t1", "t2", "r", "t2", "t1")}
    policy = {"type": "parity_convention", "restricted": True, "witness": witness}
    return ExperimentConfig(
        "fig1a-parity", graph,
        (conjunction(keep_out, Buchi(_vertices(graph, "l"))), conjunction(keep_out, Buchi(_vertices(graph, "r")))),
        (policy, policy),
        uniform(2), shield=True, horizon=1000, trials=100, expect=("almost-sure", "almost-sure"), claims="parity",
        description="shielded away from b1, parity conventions agree on a tour through both ends",
    )


@_entry("fig1b-buchi")
def _fig1b_buchi() -> ExperimentConfig:
    graph: Graph = two_lobe_graph()
    return ExperimentConfig(
        "fig1b-buchi", graph,
        (Buchi(_vertices(graph, "b1")), Buchi(_vertices(graph, "b2"))),
        ({"type": "buchi_convention"}, {"type": "buchi_convention"}),
        uniform(2), horizon=1000, trials=200, expect=("almost-sure", "almost-sure"),
        description="each agent heads for its own b vertex through its own middle vertex",
    )


@_entry("fig1b-expdwell")
def _fig1b_expdwell() -> ExperimentConfig:
    graph: Graph = two_lobe_graph()
    targets = [sorted(_vertices(graph, "b1")), sorted(_vertices(graph, "b2"))]
    return ExperimentConfig(
        "fig1b-expdwell", graph,
        (Buchi(_vertices(graph, "b1")), Buchi(_vertices(graph, "b2"))),
        ({"type": "exp_dwell", "growth": 2}, {"type": "exp_dwell", "growth": 2}),
        uniform(2), mode="simulate", horizon=10_000, trials=200, expect=("violated", "violated"),
        predicate={"kind": "all", "parts": [{"kind": "buchi_visits", "targets": t, "k": 3} for t in targets]},
        description="each success needs exponentially longer uninterrupted dwelling; visits dry up",
    )


@_entry("fig1b-parity")
def _fig1b_parity() -> ExperimentConfig:
    graph: Graph = two_lobe_graph()
    witness = {"stem": [], "cycle": _path(graph, "v", "a1", "b1", "v", "a2", "b2")}
    policy = {"type": "parity_convention", "witness": witness}
    return ExperimentConfig(
        "fig1b-parity", graph,
        (Buchi(_vertices(graph, "b1")), Buchi(_vertices(graph, "b2"))),
        (policy, policy),
        uniform(2), horizon=1000, trials=100, expect=("almost-sure", "almost-sure"), claims="parity",
        description="parity conventions over cycle-attractor maps agree on a tour through b1 and b2",
    )


@_entry("fig2-detfail")
def _fig2_detfail() -> ExperimentConfig:
    graph: Graph = fork_graph()
    return ExperimentConfig(
        "fig2-detfail", graph,
        (Reachability(_vertices(graph, "a1")), Reachability(_vertices(graph, "a2"))),
        ({"type": "det_defeat"}, {"type": "det_defeat"}),
        round_robin(2), horizon=50, trials=10, expect=("violated", "violated"),
        description="under a known round-robin schedule each agent self-loops on its own turn",
    )


@_entry("fig2-shield")
def _fig2_shield() -> ExperimentConfig:
    graph: Graph = fork_graph()
    v, a1, a2 = _path(graph, "v", "a1", "a2")
    return ExperimentConfig(
        "fig2-shield", graph,
        (Safety(frozenset({v, a2})), Buchi(frozenset({a2}))),
        ({"type": "shortest_path", "targets": [v]}, {"type": "alternating", "at": v, "choices": [a1, a2]}),
        uniform(2), shield=True, horizon=1000, trials=200, expect=("almost-sure", "almost-sure"),
        description="the shield vetoes moves into a1 and the alternating agent still reaches a2",
    )


@_entry("fig3-counterexample")
def _fig3_counterexample() -> ExperimentConfig:
    graph: Graph = self_loop_graph()
    return ExperimentConfig(
        "fig3-counterexample", graph,
        (CoBuchi(_vertices(graph, "v11")), CoBuchi(_vertices(graph, "v12"))),
        ({"type": "cobuchi_counterexample"}, {"type": "cobuchi_counterexample"}),
        uniform(2), horizon=1000, trials=100, expect=("violated", "violated"),
        description="memoryless co-Buchi policies that both leave v0 keep visiting both bad vertices",
    )


def names() -> list[str]:
    return sorted(gallery)


def instance(name: str) -> ExperimentConfig:
    if name not in gallery:
        raise ConfigError("gallery", f"unknown instance {name!r}; one of {', '.join(names())}")
    return gallery[name]()


def export(name: str) -> str:
    return json.dumps(config_to_json(instance(name)), sort_keys=True, indent=2) + "\n"


def load(text: str, where: str = "gallery") -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{where}:{e.lineno}:{e.colno}", e.msg) from None
    return config_from_json(data, where)


def show(name: str) -> str:
    config: ExperimentConfig = instance(name)
    graph: Graph = config.graph
    lines: list[str] = [f"{config.name}: {config.description}",
                        f"  vertices: {' '.join(graph.label(v) for v in graph.vertices)} (init {graph.label(graph.init)})",
                        f"  edges: {' '.join(f'{graph.label(v)}->{graph.label(u)}' for v, u in graph.edges())}",
                        f"  scheduler: {type(config.scheduler.kind).__name__}, shield: {'on' if config.shield else 'off'}"]
    for i, (objective, policy) in enumerate(zip(config.objectives, config.policies)):
        expected: str = config.expect[i] if config.expect else "-"
        lines.append(f"  agent {i + 1}: {objective_to_json(objective)} via {policy['type']}, expected {expected}")
    return "\n".join(lines)

import csv
import io
import itertools
import json
import logging
import os
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Mapping, Sequence

from decoupling.analysis import (AllOf, Estimate, Outcome, Predicate, almost_sure_verdict, build_global_chain,
                                 check_consensus_claims, check_row_stochastic, convergence_csv, convergence_time,
                                 finite_horizon_predicate, monte_carlo_estimate, verdict_to_json)
from decoupling.composition import Composition, run, trace_to_jsonl
from decoupling.config import BuildContext, ExperimentConfig, build_policy, check_config, predicate_from_json
from decoupling.errors import ConfigError
from decoupling.policies import LiftedPolicy, Policy
from decoupling.scheduler import uniform, weighted
from decoupling.shield import ShieldSetup, build_shield

logger = logging.getLogger(__name__)

# a Monte Carlo verdict is "almost-sure" only when the lower confidence bound reaches this
ALMOST_SURE_FLOOR = 0.9
GRID_LIMIT = 10_000
SWEEP_PARAMETERS = ("agents", "growth", "weights", "window")


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    report: dict[str, Any]
    computed: tuple[str, ...]
    trace: str
    convergence: str | None

    @property
    def matches_expected(self) -> bool:
        return not self.config.expect or self.computed == self.config.expect


def build_composition(config: ExperimentConfig) -> Composition:
    shield: ShieldSetup | None = build_shield(config.graph, config.objectives) if config.shield else None
    policies: list[Policy[Any]] = []
    for agent, spec in enumerate(config.policies):
        if spec.get("restricted", False):
            if shield is None:
                raise ConfigError(f"{config.name}.policies[{agent}].restricted", "requires the shield")
            ctx = BuildContext(shield.restricted_graph, config.graph, config.objectives[agent], config.objectives,
                               agent, config.scheduler, shield.embedding)
            policies.append(LiftedPolicy(build_policy(ctx, spec), shield.embedding))
        else:
            ctx = BuildContext(config.graph, config.graph, config.objectives[agent], config.objectives,
                               agent, config.scheduler)
            policies.append(build_policy(ctx, spec))
    return Composition(config.graph, tuple(policies), config.scheduler, shield, config.seed)


def restricted_embedding(config: ExperimentConfig, comp: Composition) -> tuple[int, ...] | None:
    if comp.shield is not None and all(spec.get("restricted", False) for spec in config.policies):
        return comp.shield.embedding
    return None


def exact_report(config: ExperimentConfig, comp: Composition) -> tuple[dict[str, Any], tuple[str, ...]]:
    chain = build_global_chain(comp, config.state_cap)
    check_row_stochastic(chain)
    verdict = almost_sure_verdict(chain, config.objectives)
    report: dict[str, Any] = {"states": len(chain), "verdict": verdict_to_json(verdict, config.graph)}
    if config.claims is not None:
        claims = check_consensus_claims(chain, comp, config.claims, restricted_embedding(config, comp))
        report["claims"] = {"mode": claims.mode, "consensus_states": claims.consensus_states,
                            "bscc_states": claims.bscc_states, "holds": True}
    return report, tuple(outcome.value for outcome in verdict.per_objective)


def estimate_to_json(estimate: Estimate) -> dict[str, Any]:
    return {"successes": estimate.successes, "trials": estimate.trials,
            "estimate": round(estimate.value, 12), "low": round(estimate.low, 12), "high": round(estimate.high, 12)}


def monte_carlo_outcome(estimate: Estimate) -> Outcome:
    return Outcome.ALMOST_SURE if estimate.low >= ALMOST_SURE_FLOOR else Outcome.VIOLATED


def objective_predicates(config: ExperimentConfig) -> list[Predicate]:
    return [finite_horizon_predicate(objective, config.graph, config.horizon, config.stabilization_window)
            for objective in config.objectives]


def simulate_report(config: ExperimentConfig, comp: Composition,
                    workers: int = 1) -> tuple[dict[str, Any], tuple[str, ...], str]:
    estimates: list[Estimate] = [monte_carlo_estimate(comp, config.horizon, config.trials, predicate, workers)
                                 for predicate in objective_predicates(config)]
    report: dict[str, Any] = {
        "horizon": config.horizon,
        "trials": config.trials,
        "per_objective": [estimate_to_json(e) for e in estimates],
    }
    computed: tuple[str, ...] = tuple(monte_carlo_outcome(e).value for e in estimates)
    if config.predicate is not None:
        joint: Estimate = monte_carlo_estimate(comp, config.horizon, config.trials,
                                               predicate_from_json(config.predicate), workers)
        report["joint"] = estimate_to_json(joint)
    summary = convergence_time(comp, config.trials, config.stabilization_window, config.horizon)
    report["convergence"] = {"mean": summary.mean, "median": summary.median, "p95": summary.p95,
                             "censored": summary.censored, "window": config.stabilization_window}
    return report, computed, convergence_csv(summary)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Runs the modes the config asks for. Exact verdicts take precedence over Monte Carlo ones."""
    check_config(config)
    comp: Composition = build_composition(config)
    report: dict[str, Any] = {
        "name": config.name,
        "mode": config.mode,
        "seed": config.seed,
        "agents": config.n_agents,
        "expected": list(config.expect),
    }
    computed: tuple[str, ...] = ()
    convergence: str | None = None
    if config.mode in ("simulate", "both"):
        report["simulation"], computed, convergence = simulate_report(config, comp, workers)
    if config.mode in ("exact", "both"):
        report["exact"], computed = exact_report(config, comp)
    report["computed"] = list(computed)
    report["matches_expected"] = not config.expect or computed == config.expect
    trace: str = trace_to_jsonl(run(comp, config.horizon), config.graph)
    return ExperimentResult(config, report, computed, trace, convergence)


def write_results(result: ExperimentResult, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    files: dict[str, str] = {
        "report.json": json.dumps(result.report, sort_keys=True, indent=2) + "\n",
        "trace.jsonl": result.trace,
    }
    if result.convergence is not None:
        files["convergence.csv"] = result.convergence
    written: list[str] = []
    for name, content in sorted(files.items()):
        path: str = os.path.join(out_dir, name)
        with open(path, "w", newline="") as f:
            f.write(content)
        written.append(path)
    return written


def summarize(result: ExperimentResult) -> str:
    lines: list[str] = [f"{result.config.name}: {result.config.n_agents} agents, mode {result.config.mode}"]
    for i, outcome in enumerate(result.computed):
        expected = result.config.expect[i] if result.config.expect else "-"
        lines.append(f"  objective {i + 1}: {outcome} (expected {expected})")
    if "exact" in result.report:
        lines.append(f"  global chain: {result.report['exact']['states']} states")
    if "simulation" in result.report:
        convergence = result.report["simulation"]["convergence"]
        lines.append(f"  convergence: median {convergence['median']}, p95 {convergence['p95']}")
    return "\n".join(lines)


def parse_grid(specs: Sequence[str]) -> dict[str, list[str]]:
    """`name=v1,v2,...` pairs; weights use `:` between agents, e.g. `weights=1:1,1:3`."""
    grid: dict[str, list[str]] = {}
    for spec in specs:
        name, sep, values = spec.partition("=")
        if not sep or name not in SWEEP_PARAMETERS:
            raise ConfigError("--grid", f"expected one of {', '.join(SWEEP_PARAMETERS)} as name=v1,v2; got {spec!r}")
        grid[name] = [v for v in values.split(",") if v]
    return grid


def with_clones(config: ExperimentConfig, n_agents: int) -> ExperimentConfig:
    if n_agents < 1:
        raise ConfigError("agents", "at least one agent")
    objectives = config.objectives[:n_agents] + (config.objectives[-1],) * max(0, n_agents - config.n_agents)
    policies = config.policies[:n_agents] + (config.policies[-1],) * max(0, n_agents - config.n_agents)
    expect = config.expect[:n_agents] + config.expect[-1:] * max(0, n_agents - config.n_agents)
    return replace(config, objectives=objectives, policies=policies, expect=expect, scheduler=uniform(n_agents))


def apply_point(config: ExperimentConfig, point: Mapping[str, str]) -> ExperimentConfig:
    try:
        if "agents" in point:
            config = with_clones(config, int(point["agents"]))
        if "growth" in point:
            growth = int(point["growth"])
            config = replace(config, policies=tuple(
                {**spec, "growth": growth} if spec.get("type") == "exp_dwell" else spec for spec in config.policies))
        if "weights" in point:
            config = replace(config, scheduler=weighted([Fraction(w) for w in point["weights"].split(":")]))
        if "window" in point:
            config = replace(config, window=int(point["window"]))
    except ValueError as e:
        raise ConfigError("--grid", str(e)) from None
    check_config(config)
    return config


def sweep(config: ExperimentConfig, grid: Mapping[str, Sequence[str]], workers: int = 1) -> str:
    """One row per grid point and metric; the estimate is of all objectives' finite-horizon predicates at once."""
    names: list[str] = sorted(grid)
    size: int = 1
    for name in names:
        size *= len(grid[name])
    if size > GRID_LIMIT:
        raise ConfigError("--grid", f"{size} grid points, at most {GRID_LIMIT} allowed")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(names + ["metric", "value"])
    if not names or size == 0:
        return out.getvalue()
    for values in itertools.product(*(grid[name] for name in names)):
        point: dict[str, str] = dict(zip(names, values))
        logger.info("sweep point %s", point)
        instance: ExperimentConfig = apply_point(config, point)
        comp: Composition = build_composition(instance)
        predicate: Predicate = (predicate_from_json(instance.predicate) if instance.predicate is not None
                                else AllOf(tuple(objective_predicates(instance))))
        estimate: Estimate = monte_carlo_estimate(comp, instance.horizon, instance.trials, predicate, workers)
        summary = convergence_time(comp, instance.trials, instance.stabilization_window, instance.horizon)
        metrics: list[tuple[str, float]] = [
            ("estimate", estimate.value), ("ci_low", estimate.low), ("ci_high", estimate.high),
            ("convergence_mean", summary.mean), ("convergence_median", summary.median),
            ("convergence_p95", summary.p95), ("censored", summary.censored),
        ]
        for metric, value in metrics:
            writer.writerow(list(values) + [metric, f"{value:.12g}"])
    return out.getvalue()

import argparse
import json
import logging
import sys
from typing import Callable, Sequence

from decoupling import gallery
from decoupling.config import ExperimentConfig, default_seed, load_config, override
from decoupling.errors import DecouplingError
from decoupling.utilities import ExperimentResult, parse_grid, run_experiment, summarize, sweep, write_results

logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_UNEXPECTED_VERDICT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoupling", description="Decoupled multi-agent planning experiments")
    parser.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    parser.add_argument("--quiet", action="store_true", help="no summary on stdout")
    commands = parser.add_subparsers(dest="command", required=True)

    def experiment_arguments(p: argparse.ArgumentParser) -> None:
        source = p.add_mutually_exclusive_group(required=True)
        source.add_argument("--gallery", metavar="NAME")
        source.add_argument("--config", metavar="FILE")
        p.add_argument("--mode", choices=["simulate", "exact", "both"])
        p.add_argument("--horizon", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--state-cap", type=int, dest="state_cap")
        p.add_argument("--workers", type=int, default=1)

    run = commands.add_parser("run", help="simulate and/or analyse one experiment")
    experiment_arguments(run)
    run.add_argument("--expect", choices=["almost-sure", "violated"])
    run.add_argument("--out", metavar="DIR")

    catalog = commands.add_parser("gallery", help="built-in instances")
    catalog.add_argument("action", choices=["list", "show", "export"])
    catalog.add_argument("name", nargs="?")
    catalog.add_argument("--out", metavar="FILE")

    sweeping = commands.add_parser("sweep", help="Monte Carlo over a parameter grid, as CSV")
    experiment_arguments(sweeping)
    sweeping.add_argument("--grid", action="append", default=[], metavar="NAME=V1,V2")
    sweeping.add_argument("--out", metavar="FILE")
    return parser


def experiment(args: argparse.Namespace) -> ExperimentConfig:
    config: ExperimentConfig = gallery.instance(args.gallery) if args.gallery else load_config(args.config)
    seed: int | None = args.seed if args.seed is not None else default_seed()
    return override(config, mode=args.mode, horizon=args.horizon, trials=args.trials, seed=seed,
                    state_cap=args.state_cap)


def write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as f:
            f.write(text)


def cmd_run(config: ExperimentConfig, workers: int, out_dir: str | None, expect: str | None,
            say: Callable[[str], None]) -> int:
    result: ExperimentResult = run_experiment(config, workers)
    if out_dir is not None:
        for path in write_results(result, out_dir):
            logger.info("wrote %s", path)
        say(summarize(result))
    else:
        sys.stdout.write(json.dumps(result.report, sort_keys=True, indent=2) + "\n")
    if expect is not None and any(outcome != expect for outcome in result.computed):
        print(f"Error: expected {expect}, computed {', '.join(result.computed)}", file=sys.stderr)
        return EXIT_UNEXPECTED_VERDICT
    if not result.matches_expected:
        print(f"Error: {config.name}: stored expectation {', '.join(config.expect)}, "
              f"computed {', '.join(result.computed)}", file=sys.stderr)
        return EXIT_UNEXPECTED_VERDICT
    return 0


def cmd_gallery_list() -> str:
    lines: list[str] = []
    for name in gallery.names():
        config: ExperimentConfig = gallery.instance(name)
        lines.append(f"{name}\t{config.n_agents} agents\t{', '.join(config.expect)}\t{config.description}")
    return "".join(line + "\n" for line in lines)


def cmd_sweep(config: ExperimentConfig, grid_specs: Sequence[str], workers: int) -> str:
    return sweep(config, parse_grid(grid_specs), workers)


def main(argv: Sequence[str] | None = None) -> int:
    # === Option parsing ===
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")

    def say(text: str) -> None:
        if not args.quiet:
            print(text)

    # === Command implementations ===
    try:
        if args.command == "run":
            return cmd_run(experiment(args), args.workers, args.out, args.expect, say)
        elif args.command == "gallery":
            if args.action == "list":
                sys.stdout.write(cmd_gallery_list())
            elif args.name is None:
                print(f"Error: gallery {args.action} needs an instance name", file=sys.stderr)
                return EXIT_ERROR
            elif args.action == "show":
                print(gallery.show(args.name))
            else:
                write_text(args.out, gallery.export(args.name))
        elif args.command == "sweep":
            write_text(args.out, cmd_sweep(experiment(args), args.grid, args.workers))
    except DecouplingError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: single runs, grids, analysis and self-checks.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Progress goes to
stderr; machine-readable output only to files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiment import (
    Bias,
    RunConfig,
    analyze,
    default_grid,
    parse_condition,
    run_grid,
    run_single,
)
from .environment import RewiringSchedule

OUT_DIR_ENV = "REWIRE_IPD_OUT"


def _default_out() -> str:
    return os.environ.get(OUT_DIR_ENV, "results")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rewire-ipd",
        description="Iterated Prisoner's Dilemma with network rewiring: "
                    "train Double-DQN agent pairs across treatment conditions.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a single training run")
    run.add_argument("--config", type=Path,
                     help="JSON run config; inline flags override its values")
    run.add_argument("--schedule", choices=[s.value for s in RewiringSchedule],
                     help="rewiring opportunity schedule (default full)")
    run.add_argument("--bias", choices=[b.value for b in Bias],
                     help="fixed policy carried by agent 0 (default none)")
    run.add_argument("--episodes", type=int,
                     help="training episodes (default 20000)")
    run.add_argument("--seed", type=int, help="run seed (default 1)")
    run.add_argument("--no-rewiring-learning", action="store_true",
                     help="freeze both agents' rewiring heads (uniform-random "
                          "rewiring actions)")
    run.add_argument("--frozen-random-rewiring", action="store_true",
                     help="with frozen rewiring, act greedily on the frozen "
                          "randomly-initialized network instead of uniformly")
    run.add_argument("--out", type=Path, default=None,
                     help=f"output directory (default ${OUT_DIR_ENV} or results/)")

    grid = sub.add_parser("grid", help="execute a treatment grid")
    grid.add_argument("--seeds", type=int, default=5,
                      help="seeds per condition (default 5)")
    grid.add_argument("--episodes", type=int, default=20_000,
                      help="episodes per run (default 20000)")
    grid.add_argument("--parallel", type=int, default=1,
                      help="concurrent runs (default 1)")
    grid.add_argument("--conditions",
                      help="comma-separated schedule:bias[:nolearn|:frozen] "
                           "tokens; default is the full 12-condition grid")
    grid.add_argument("--out", type=Path, default=None)

    ana = sub.add_parser("analyze", help="aggregate grid results into CSVs")
    ana.add_argument("--in", dest="results", type=Path, required=True,
                     help="grid output directory containing manifest.json")
    ana.add_argument("--out", type=Path, default=None,
                     help="where to write aggregate CSVs (default: --in)")

    check = sub.add_parser("selfcheck", help="run the built-in property suites")
    check.add_argument("--gradient-cases", type=int, default=100)
    check.add_argument("--fuzz-operations", type=int, default=10_000)
    check.add_argument("--sampling-draws", type=int, default=100_000)
    check.add_argument("--target-cases", type=int, default=1_000)
    check.add_argument("--inject-failure", action="store_true",
                       help="corrupt one expected value to verify the harness "
                            "actually fails")
    return parser


def _progress_row(row: dict) -> None:
    print(f"[{row['run_id']}] bin {row['bin']}: "
          f"mutual_coop={row['mutual_coop_rate']:.3f} "
          f"connection={row['connection_rate']:.3f} "
          f"epsilon={row['epsilon']:.3f}", file=sys.stderr)


def _progress_entry(entry: dict) -> None:
    print(f"grid: {entry['run_id']} {entry['status']} "
          f"({entry['wall_time_s']}s)", file=sys.stderr)


def _cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    overrides = {}
    if args.schedule is not None:
        overrides["schedule"] = RewiringSchedule(args.schedule)
    if args.bias is not None:
        overrides["bias"] = Bias(args.bias)
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.no_rewiring_learning or args.frozen_random_rewiring:
        overrides["rewiring_learning"] = False
    if args.frozen_random_rewiring:
        overrides["frozen_random_rewiring"] = True

    if args.config is not None:
        try:
            base = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
        config = RunConfig.from_dict({**base, **{
            k: (v.value if hasattr(v, "value") else v)
            for k, v in overrides.items()}})
    else:
        defaults = {"episodes": 20_000}
        defaults.update(overrides)
        try:
            config = RunConfig(**defaults)
        except ValueError as exc:
            parser.error(str(exc))

    if (config.schedule is RewiringSchedule.NONE
            and config.frozen_random_rewiring):
        parser.error("--frozen-random-rewiring is meaningless without "
                     "rewiring opportunities (--schedule none)")

    out = args.out if args.out is not None else Path(_default_out())
    run_dir = out / config.run_id
    try:
        run_single(config, run_dir, progress=_progress_row)
    except OSError as exc:
        print(f"error: run aborted: {exc}", file=sys.stderr)
        return 1
    print(f"run {config.run_id} complete: {run_dir}", file=sys.stderr)
    return 0


def _cmd_grid(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.conditions:
        try:
            tokens = [parse_condition(tok)
                      for tok in args.conditions.split(",") if tok]
        except ValueError as exc:
            parser.error(str(exc))
        configs = [RunConfig(episodes=args.episodes, seed=seed, **kwargs)
                   for kwargs in tokens
                   for seed in range(1, args.seeds + 1)]
    else:
        configs = default_grid(seeds=args.seeds, episodes=args.episodes)
    out = args.out if args.out is not None else Path(_default_out())
    try:
        manifest = run_grid(configs, out, parallelism=args.parallel,
                            progress=_progress_entry)
    except OSError as exc:
        print(f"error: grid aborted: {exc}", file=sys.stderr)
        return 1
    failed = [r["run_id"] for r in manifest["runs"] if r["status"] != "completed"]
    if failed:
        print(f"grid finished with {len(failed)} failed runs: "
              f"{', '.join(failed)}", file=sys.stderr)
        return 1
    print(f"grid complete: {len(manifest['runs'])} runs in {out}",
          file=sys.stderr)
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        curves, response, errors = analyze(args.results, args.out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = args.out if args.out is not None else args.results
    print(f"analyze: {len(curves)} curve rows, {len(response)} response rows "
          f"written to {out}", file=sys.stderr)
    return 0


def _cmd_selfcheck(args: argparse.Namespace) -> int:
    from .selfcheck import format_report, run_all

    results = run_all(inject_failure=args.inject_failure,
                      gradient_cases=args.gradient_cases,
                      fuzz_operations=args.fuzz_operations,
                      sampling_draws=args.sampling_draws,
                      target_cases=args.target_cases)
    print(format_report(results))
    if all(r.passed for r in results):
        return 0
    failing = [r.name for r in results if not r.passed]
    print(f"selfcheck failed: {', '.join(failing)}", file=sys.stderr)
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, parser)
    if args.command == "grid":
        return _cmd_grid(args, parser)
    if args.command == "analyze":
        return _cmd_analyze(args)
    if args.command == "selfcheck":
        return _cmd_selfcheck(args)
    parser.error(f"unknown command {args.command!r}")
    return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

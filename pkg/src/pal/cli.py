"""Command line front end.

    pal run --config FILE [--seed N] [--out DIR]
    pal sweep --config FILE --seeds A..B [--jobs J] [--out DIR]
    pal report --traces DIR
    pal value-report --checkpoint FILE [--angle A] [--resolution R]

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical aborts.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import statistics
import sys

from . import checkpoint as ckpt
from . import harness
from .config import load_config
from .errors import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pal",
        description="Two-agent pendulum experiments with partner-model learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a single configured run")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None)

    sweep = sub.add_parser("sweep", help="run a seed range, optionally in parallel")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seeds", required=True, help="inclusive range, e.g. 0..4")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--out", default=None)

    report = sub.add_parser("report", help="summarize the runs found in a directory")
    report.add_argument("--traces", required=True)

    value = sub.add_parser("value-report", help="critic state values at the probe angles")
    value.add_argument("--checkpoint", required=True)
    value.add_argument("--angle", type=float, default=harness.VALUE_PROBE_ANGLE)
    value.add_argument("--resolution", type=float, default=harness.VALUE_GRID_RESOLUTION)
    return parser


def _parse_seed_range(text: str) -> list[int]:
    try:
        first, last = text.split("..", 1)
        start, end = int(first), int(last)
    except ValueError:
        raise ConfigurationError(f"bad seed range {text!r}; expected e.g. 0..4") from None
    if end < start:
        raise ConfigurationError(f"empty seed range {text!r}")
    return list(range(start, end + 1))


def _cmd_run(args) -> int:
    config = load_config(args.config, seed=args.seed, out_dir=args.out)
    try:
        result = harness.run_experiment(config)
    except harness.NumericalAbort as abort:
        paths = harness.write_run_outputs(abort.partial_result, config.out_dir)
        print(f"numerical abort: {abort}", file=sys.stderr)
        print(f"partial trace flushed to {paths['trace']}", file=sys.stderr)
        return EXIT_NUMERICS
    paths = harness.write_run_outputs(result, config.out_dir)
    print(json.dumps({"summary": result.summary, "paths": paths}, indent=2, sort_keys=True))
    return EXIT_OK


def _sweep_worker(job: tuple[str, int, str | None]) -> tuple[int, str, dict | None]:
    config_path, seed, out_dir = job
    config = load_config(config_path, seed=seed, out_dir=out_dir)
    try:
        result = harness.run_experiment(config)
    except harness.NumericalAbort as abort:
        harness.write_run_outputs(abort.partial_result, config.out_dir)
        return seed, "aborted", None
    harness.write_run_outputs(result, config.out_dir)
    return seed, "ok", result.summary


def _cmd_sweep(args) -> int:
    seeds = _parse_seed_range(args.seeds)
    # Validate the config once up front so bad files fail before any work.
    config = load_config(args.config, out_dir=args.out)
    jobs = [(args.config, seed, args.out) for seed in seeds]
    if args.jobs > 1:
        with multiprocessing.Pool(processes=args.jobs) as pool:
            outcomes = pool.map(_sweep_worker, jobs)
    else:
        outcomes = [_sweep_worker(job) for job in jobs]
    outcomes.sort(key=lambda item: item[0])
    status = EXIT_OK
    for seed, state, summary in outcomes:
        line = {"seed": seed, "status": state}
        if summary is not None:
            line["average_reward_per_second"] = summary["average_reward_per_second"]["mean"]
            line["first_swing_up_time"] = summary["first_swing_up_time"]
        print(json.dumps(line, sort_keys=True))
        if state != "ok":
            status = EXIT_NUMERICS
    print(f"outputs in {config.out_dir}", file=sys.stderr)
    return status


def _cmd_report(args) -> int:
    directory = args.traces
    if not os.path.isdir(directory):
        raise ConfigurationError(f"{directory} is not a directory")
    names = sorted(n for n in os.listdir(directory) if n.endswith(".summary.json"))
    if not names:
        raise ConfigurationError(f"no *.summary.json files in {directory}")
    runs = []
    for name in names:
        with open(os.path.join(directory, name), "r", encoding="utf-8") as fh:
            summary = json.load(fh)
        runs.append(
            {
                "run": name[: -len(".summary.json")],
                "setup": summary.get("setup"),
                "seed": summary.get("seed"),
                "average_reward_per_second": summary["average_reward_per_second"]["mean"],
                "first_swing_up_time": summary.get("first_swing_up_time"),
                "aborted": summary.get("aborted", False),
            }
        )
    rewards = [r["average_reward_per_second"] for r in runs]
    swing_ups = [r["first_swing_up_time"] for r in runs if r["first_swing_up_time"] is not None]
    # Runs are ranked by windowed average reward; the median run under that
    # ranking is the representative one.
    ranked = sorted(runs, key=lambda r: r["average_reward_per_second"])
    median_run = ranked[(len(ranked) - 1) // 2]
    report = {
        "runs": runs,
        "count": len(runs),
        "median_average_reward_per_second": statistics.median(rewards),
        "swing_up_times": sorted(swing_ups),
        "swing_up_count": len(swing_ups),
        "median_run": median_run["run"],
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_value_report(args) -> int:
    try:
        agent = ckpt.load_agent(args.checkpoint)
    except (OSError, ckpt.CheckpointError) as exc:
        raise ConfigurationError(f"cannot load checkpoint {args.checkpoint}: {exc}") from None
    v_plus, v_minus = harness.value_asymmetry_report(agent, args.angle, args.resolution)
    print(
        json.dumps(
            {
                "probe_angle": args.angle,
                "grid_resolution": args.resolution,
                "value_at_plus": v_plus,
                "value_at_minus": v_minus,
                "difference": v_plus - v_minus,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
    "value-report": _cmd_value_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()

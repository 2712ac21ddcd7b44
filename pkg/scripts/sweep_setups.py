#!/usr/bin/env python3
"""Reproduce the headline comparison: seed sweeps over all four setups.

Usage:
    python scripts/sweep_setups.py [--seeds A..B] [--jobs J] [--duration S] [--out DIR]

Writes one trace/summary/checkpoint set per run and prints per-setup
medians of the windowed average reward, swing-up times and the critic's
value asymmetry at the inclined probe angles.
"""

import argparse
import json
import multiprocessing
import statistics

from pal.config import build_config
from pal.harness import run_experiment, write_run_outputs

SETUPS = ("baseline", "oblivious", "pal", "pal_different_rewards")


def one_run(args):
    setup, seed, duration, out = args
    config = build_config(
        {"setup": setup, "duration": str(duration)}, seed=seed, out_dir=f"{out}/{setup}"
    )
    result = run_experiment(config)
    write_run_outputs(result, config.out_dir)
    s = result.summary
    return {
        "setup": setup,
        "seed": seed,
        "reward_per_second": s["average_reward_per_second"]["mean"],
        "first_swing_up_time": s["first_swing_up_time"],
        "value_difference": s["value_asymmetry"]["difference"],
    }


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", default="0..4")
    parser.add_argument("--jobs", type=int, default=2)
    parser.add_argument("--duration", type=float, default=300.0)
    parser.add_argument("--out", default="runs/sweep")
    args = parser.parse_args()
    first, last = (int(p) for p in args.seeds.split(".."))

    jobs = [
        (setup, seed, args.duration, args.out)
        for setup in SETUPS
        for seed in range(first, last + 1)
    ]
    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            rows = pool.map(one_run, jobs)
    else:
        rows = [one_run(job) for job in jobs]

    for row in rows:
        print(json.dumps(row, sort_keys=True))
    for setup in SETUPS:
        rewards = [r["reward_per_second"] for r in rows if r["setup"] == setup]
        swing = [
            r["first_swing_up_time"]
            for r in rows
            if r["setup"] == setup and r["first_swing_up_time"] is not None
        ]
        print(
            f"{setup}: median reward/s {statistics.median(rewards):.2f}, "
            f"swing-ups {len(swing)}/{len(rewards)}"
            + (f", median at {statistics.median(swing):.1f} s" if swing else "")
        )


if __name__ == "__main__":
    main()

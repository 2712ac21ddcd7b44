#!/usr/bin/env python3
"""Short demonstration run: one setup, one seed, printed summary.

Usage:
    python scripts/run_demo.py [setup] [duration_seconds] [seed]

Defaults to a 60 s `pal` run, which already shows the swing-up. Outputs
land in runs/demo/.
"""

import json
import sys

from pal.config import build_config
from pal.harness import run_experiment, write_run_outputs


def main() -> None:
    setup = sys.argv[1] if len(sys.argv) > 1 else "pal"
    duration = float(sys.argv[2]) if len(sys.argv) > 2 else 60.0
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0
    config = build_config(
        {"setup": setup, "duration": str(duration)}, seed=seed, out_dir="runs/demo"
    )
    result = run_experiment(config)
    paths = write_run_outputs(result, config.out_dir)
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    print(f"trace: {paths['trace']}")


if __name__ == "__main__":
    main()

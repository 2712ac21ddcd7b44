#!/usr/bin/env python3
"""Plot angle, velocity, controls and rewards from a trace CSV.

Usage:
    python scripts/plot_trace.py RUN.csv [OUT.png]

Requires matplotlib (not a package dependency).
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from pal.metrics import read_trace_csv  # noqa: E402


def main() -> None:
    trace_path = sys.argv[1]
    out_path = sys.argv[2] if len(sys.argv) > 2 else trace_path.rsplit(".", 1)[0] + ".png"
    trace = read_trace_csv(trace_path)

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 7))
    axes[0].plot(trace.t, trace.column("phi"), lw=0.6)
    axes[0].axhline(0.0, color="k", lw=0.4)
    axes[0].set_ylabel("angle [rad]")
    axes[1].plot(trace.t, trace.column("omega"), lw=0.6, color="tab:orange")
    axes[1].set_ylabel("velocity [rad/s]")
    axes[2].plot(trace.t, trace.column("r1"), lw=0.6, label="r1")
    axes[2].plot(trace.t, trace.column("r2"), lw=0.6, label="r2")
    axes[2].set_ylabel("reward")
    axes[2].set_xlabel("time [s]")
    axes[2].legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    print(out_path)


if __name__ == "__main__":
    main()

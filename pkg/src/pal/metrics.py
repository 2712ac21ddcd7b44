"""Run traces and the summary statistics computed from them.

A trace holds one row per real time step. CSV output prints every value
with 17 significant digits, so float64 round-trips exactly and identical
runs produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TRACE_COLUMNS = ("t", "phi", "omega", "u1", "u2", "r1", "r2", "id_loss1", "id_loss2")


@dataclass
class Trace:
    data: np.ndarray  # shape (n_steps, len(TRACE_COLUMNS))

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(TRACE_COLUMNS):
            raise ValueError(f"trace data must have {len(TRACE_COLUMNS)} columns")

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, TRACE_COLUMNS.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def phi(self) -> np.ndarray:
        return self.data[:, 1]


def write_trace_csv(path, trace: Trace) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace.data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_trace_csv(path) -> Trace:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trace(data)


def average_reward_per_second(
    trace: Trace, agent: int, window_start: float, window_end: float
) -> float:
    """Sum of an agent's step rewards in [start, end), divided by the window length."""
    if agent not in (1, 2):
        raise ValueError(f"agent must be 1 or 2, got {agent}")
    if not window_end > window_start:
        raise ValueError("window_end must exceed window_start")
    t = trace.t
    mask = (t >= window_start) & (t < window_end)
    if not mask.any():
        raise ValueError(
            f"window [{window_start}, {window_end}) contains no trace rows"
        )
    rewards = trace.column(f"r{agent}")[mask]
    return float(rewards.sum() / (window_end - window_start))


def detect_first_swing_up(
    trace: Trace, angle_tolerance: float, hold_duration: float
) -> float | None:
    """Start time of the first interval with |phi| < tolerance held long enough.

    The pendulum counts as held once consecutive in-band rows cover at
    least ``hold_duration`` seconds of trace time. Returns None when no
    such interval exists.
    """
    if angle_tolerance <= 0 or hold_duration <= 0:
        raise ValueError("angle_tolerance and hold_duration must be positive")
    n = len(trace)
    if n == 0:
        return None
    dt = float(trace.t[1] - trace.t[0]) if n > 1 else math.inf
    needed = max(1, math.ceil(hold_duration / dt - 1e-9)) if math.isfinite(dt) else 1
    in_band = np.abs(trace.phi) < angle_tolerance
    run = 0
    for i in range(n):
        run = run + 1 if in_band[i] else 0
        if run >= needed:
            return float(trace.t[i - run + 1])
    return None


def fraction_in_band(
    trace: Trace, angle_tolerance: float, window_start: float, window_end: float
) -> float:
    """Share of rows in [start, end) with |phi| below the tolerance."""
    t = trace.t
    mask = (t >= window_start) & (t < window_end)
    if not mask.any():
        raise ValueError("window contains no trace rows")
    return float(np.mean(np.abs(trace.phi[mask]) < angle_tolerance))

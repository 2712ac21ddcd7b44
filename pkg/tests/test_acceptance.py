"""Acceptance suite: every release criterion, one PASS/FAIL line each.

Criteria 1-3 are deterministic or tightly-seeded numerical checks with
hard runtime budgets. Criteria 4-7 reproduce the experiment-level
orderings from five-seed sweeps of the 300 s runs; they are statistical
by nature, so the thresholds are wide. Criterion 8 checks bitwise run
determinism.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as they
appear; the five-seed sweeps take roughly an hour on two cores.
"""

import math
import multiprocessing
import os
import statistics
import time

import numpy as np
import pytest
from scipy import stats

from pal import metrics, nn, pendulum
from pal.config import build_config
from pal.ddpg import OuNoise
from pal.harness import run_experiment, value_asymmetry_report, write_run_outputs
from pal.identification import PartnerIdentifier
from pal.metrics import average_reward_per_second, detect_first_swing_up, fraction_in_band
from pal.pendulum import PendulumState
from pal.replay import ReplayBuffer

from conftest import assert_grads_close, finite_difference_grads

pytestmark = pytest.mark.acceptance

SEEDS = (0, 1, 2, 3, 4)
RUN_DURATION = 300.0
REWARD_WINDOW = (0.0, 300.0)
SWING_TOLERANCE = 0.2  # rad
SWING_HOLD = 2.0  # s
HOLD_BAND = 0.3  # rad
HOLD_WINDOW = (150.0, 300.0)
PROBE_ANGLE = 0.3
VALUE_RESOLUTION = 0.1


def report(number: int, name: str, ok: bool, detail: str = "") -> bool:
    state = "PASS" if ok else "FAIL"
    line = f"[{state}] criterion {number}: {name}"
    if detail:
        line += f" — {detail}"
    print(line, flush=True)
    return ok


# --- long-run machinery -------------------------------------------------------

RUN_MATRIX = {
    "pal": {"setup": "pal"},
    "oblivious": {"setup": "oblivious"},
    "baseline": {"setup": "baseline"},
    "pal_dr": {"setup": "pal_different_rewards"},
    "ablation_dr": {"setup": "pal_different_rewards", "agent1_kind": "oblivious_pal"},
}


def _long_run(job):
    name, raw_items, seed, out_dir = job
    raw = dict(raw_items)
    raw["duration"] = str(RUN_DURATION)
    config = build_config(raw, seed=seed, out_dir=out_dir)
    started = time.time()
    result = run_experiment(config)
    paths = write_run_outputs(result, out_dir, name=f"{name}_seed{seed}")
    v_plus, v_minus = value_asymmetry_report(
        result.agents[0].ddpg, PROBE_ANGLE, VALUE_RESOLUTION
    )
    return {
        "name": name,
        "seed": seed,
        "trace_path": paths["trace"],
        "value_plus": v_plus,
        "value_minus": v_minus,
        "elapsed": time.time() - started,
    }


@pytest.fixture(scope="session")
def long_runs(tmp_path_factory):
    """All 25 five-seed 300 s runs, executed once and shared by criteria 4-7."""
    out_dir = str(tmp_path_factory.mktemp("acceptance_runs"))
    jobs = [
        (name, tuple(raw.items()), seed, out_dir)
        for name, raw in RUN_MATRIX.items()
        for seed in SEEDS
    ]
    workers = int(os.environ.get("PAL_ACCEPTANCE_JOBS", "0")) or min(
        2, multiprocessing.cpu_count()
    )
    started = time.time()
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            rows = pool.map(_long_run, jobs)
    else:
        rows = [_long_run(job) for job in jobs]
    print(
        f"[info] {len(jobs)} runs of {RUN_DURATION:.0f} s finished in "
        f"{(time.time() - started) / 60:.1f} min on {workers} workers",
        flush=True,
    )
    by_name: dict = {}
    for row in rows:
        by_name.setdefault(row["name"], {})[row["seed"]] = row
    return by_name


def run_metric(row) -> float:
    trace = metrics.read_trace_csv(row["trace_path"])
    r1 = average_reward_per_second(trace, 1, *REWARD_WINDOW)
    r2 = average_reward_per_second(trace, 2, *REWARD_WINDOW)
    return 0.5 * (r1 + r2)


def swing_up_time(row):
    trace = metrics.read_trace_csv(row["trace_path"])
    return detect_first_swing_up(trace, SWING_TOLERANCE, SWING_HOLD)


def hold_fraction(row) -> float:
    trace = metrics.read_trace_csv(row["trace_path"])
    return fraction_in_band(trace, HOLD_BAND, *HOLD_WINDOW)


# --- criterion 1: numerical core ------------------------------------------------


def test_criterion_1_numerical_core():
    started = time.time()
    rng = np.random.default_rng(0)

    # gradient checks on 100 random small networks
    for _ in range(100):
        sizes = [int(rng.integers(1, 5)) for _ in range(int(rng.integers(3, 5)))]
        mlp = nn.init_mlp(sizes, [(-1.0, 1.0)] * (len(sizes) - 1), rng)
        x = rng.normal(size=(2, sizes[0]))
        target = 2.0 * rng.normal(size=(2, sizes[-1]))
        analytic = nn.backward(mlp, x, target, nn.LossKind.MSE)
        numeric = finite_difference_grads(
            mlp, lambda: nn.loss_and_grad(nn.forward(mlp, x), target, nn.LossKind.MSE)[0]
        )
        assert_grads_close(analytic, numeric)

    # Adam: first-step size, zero-gradient no-op, scalar trace vs re-derivation
    params = np.array([0.0])
    state = nn.AdamState.for_params(params, 0.01)
    nn.adam_step(params, np.array([1.0]), state)
    assert abs(params[0] + 0.01) < 1e-6
    params = np.array([1.0, -2.0])
    state = nn.AdamState.for_params(params, 0.1)
    for _ in range(10):
        nn.adam_step(params, np.zeros(2), state)
    assert np.array_equal(params, [1.0, -2.0])
    w, m, v = 1.0, 0.0, 0.0
    params = np.array([1.0])
    state = nn.AdamState.for_params(params, 0.1)
    for t in range(1, 4):
        g = 2.0 * w
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w -= 0.1 * (m / (1 - 0.9**t)) / (math.sqrt(v / (1 - 0.999**t)) + 1e-7)
        nn.adam_step(params, 2.0 * params.copy(), state)
        assert params[0] == pytest.approx(w, rel=1e-14)

    # gradient clipping
    assert np.array_equal(nn.clip_gradient_norm(np.array([0.3, 0.4]), 1.0), [0.3, 0.4])
    assert nn.clip_gradient_norm(np.array([3.0, 4.0]), 1.0) == pytest.approx([0.6, 0.8])
    g = nn.clip_gradient_norm(rng.normal(size=50) * 10, 1.0)
    assert np.linalg.norm(g) <= 1.0 + 1e-12

    # soft target updates
    t = np.array([2.0])
    nn.soft_update(t, np.array([4.0]), 0.5)
    assert t[0] == 3.0
    t = np.array([1.0, 2.0])
    nn.soft_update(t, t.copy(), 0.37)
    assert np.array_equal(t, [1.0, 2.0])
    t = np.array([9.0])
    nn.soft_update(t, np.array([-1.0]), 1.0)
    assert t[0] == -1.0

    # Ornstein-Uhlenbeck examples
    ou = OuNoise(sigma=0.0, value=1.0)
    assert ou.step(rng) == pytest.approx(0.85, rel=1e-12)
    ou = OuNoise(sigma=0.0)
    assert all(ou.step(rng) == 0.0 for _ in range(10))
    ou = OuNoise()
    ou_rng = np.random.default_rng(17)
    samples = np.empty(1_000_000)
    for i in range(samples.size):
        samples[i] = ou.step(ou_rng)
    assert np.var(samples) == pytest.approx(0.09 / (0.3 - 0.0225), rel=0.10)

    # angle wrapping
    assert pendulum.wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert pendulum.wrap_angle(math.pi) == math.pi
    assert pendulum.wrap_angle(-math.pi) == math.pi

    # plant steps
    params_default = pendulum.PendulumParams()
    out = pendulum.step(PendulumState(math.pi, 0.0), 0.0, 0.0, params_default)
    assert out.angle == math.pi and abs(out.angular_velocity) < 1e-15
    out = pendulum.step(PendulumState(0.0, 0.0), 0.0, 0.0, params_default)
    assert out == PendulumState(0.0, 0.0)
    out = pendulum.step(PendulumState(0.0, 0.0), 5.0, 5.0, params_default)
    assert out.angular_velocity == pytest.approx(1.5, rel=1e-12)
    out = pendulum.step(PendulumState(math.pi / 2, 0.0), 0.0, 0.0, params_default)
    assert out.angular_velocity == pytest.approx(0.75, rel=1e-12)

    # rewards
    assert pendulum.reward_shared(PendulumState(0.0, 0.0), 0.0) == 0.0
    assert pendulum.reward_shared(PendulumState(math.pi, 0.0), 0.0) == pytest.approx(
        -math.pi**2
    )
    assert pendulum.reward_shared(PendulumState(1.0, 2.0), 3.0) == pytest.approx(-1.49)
    assert pendulum.reward_agent1(PendulumState(math.pi / 4, 0.0), 0.0) == 0.0
    assert pendulum.reward_agent1(PendulumState(-math.pi / 4, 0.0), 0.0) == 0.0
    assert pendulum.reward_agent1(PendulumState(0.0, 0.0), 1.0) == pytest.approx(
        -((math.pi / 4) ** 2) - 0.1
    )
    assert pendulum.reward_agent2(PendulumState(math.pi / 4, 0.0), 0.0) == 0.0
    assert pendulum.reward_agent2(PendulumState(-math.pi / 4, 0.0), 0.0) == pytest.approx(
        -((math.pi / 2) ** 2)
    )
    assert pendulum.reward_agent2(PendulumState(math.pi / 4, 1.0), 0.0) == pytest.approx(-0.1)

    elapsed = time.time() - started
    assert report(1, "numerical core", elapsed < 10.0, f"{elapsed:.1f} s (< 10 s)")


# --- criterion 2: replay semantics ---------------------------------------------


def chi2_uniform(counts) -> bool:
    counts = np.asarray(counts, dtype=float)
    expected = counts.sum() / counts.size
    statistic = float(np.sum((counts - expected) ** 2 / expected))
    return statistic < stats.chi2.ppf(0.999, df=counts.size - 1)


def test_criterion_2_replay_semantics():
    started = time.time()
    rng = np.random.default_rng(1)

    # FIFO / capacity across random push sequences
    for _ in range(300):
        capacity = int(rng.integers(1, 12))
        n = int(rng.integers(0, 40))
        buf = ReplayBuffer(capacity)
        pushed = []
        for _ in range(n):
            value = int(rng.integers(0, 1000))
            buf.push(value)
            pushed.append(value)
            assert len(buf) <= capacity
        assert buf.items == pushed[-min(n, capacity):]

    # CER: newest always present, remainder uniform
    buf = ReplayBuffer(10)
    for i in range(10):
        buf.push(i)
    sample = buf.sample_cer(100_001, rng)
    assert sample[0] == 9
    assert chi2_uniform(np.bincount(sample[1:], minlength=10))
    assert buf.sample_cer(1, rng) == [9]

    # uniform sampling distribution
    assert chi2_uniform(np.bincount(buf.sample_uniform(100_000, rng), minlength=10))

    # PER: alpha=0 is uniform; proportional 3:1; floor and update rules
    pbuf = ReplayBuffer(10, with_priorities=True)
    for i in range(10):
        pbuf.push(i, priority=float(i + 1) ** 2)
    pairs = pbuf.sample_per(100_000, rng, alpha=0.0)
    assert chi2_uniform(np.bincount([i for _, i in pairs], minlength=10))

    ratio_buf = ReplayBuffer(2, with_priorities=True)
    ratio_buf.push("a", priority=3.0)
    ratio_buf.push("b", priority=1.0)
    pairs = ratio_buf.sample_per(100_000, rng, alpha=1.0)
    n_a = sum(1 for item, _ in pairs if item == "a")
    assert n_a / (100_000 - n_a) == pytest.approx(3.0, rel=0.05)

    pbuf.update_priority(3, 1e9)
    dominant = pbuf.sample_per(2_000, rng, alpha=1.0)
    assert sum(1 for _, i in dominant if i == 3) / 2_000 > 0.99
    assert pbuf.items == list(range(10))

    with pytest.raises(ValueError):
        ReplayBuffer(3).sample_uniform(1, rng)
    with pytest.raises(ValueError):
        pbuf.update_priority(0, 0.0)

    elapsed = time.time() - started
    assert report(2, "replay semantics", elapsed < 30.0, f"{elapsed:.1f} s (< 30 s)")


# --- criterion 3: identification convergence ------------------------------------


def test_criterion_3_identification_convergence():
    started = time.time()
    passes = 0
    rmses = []
    for seed in SEEDS:
        ident = PartnerIdentifier(2, 1, np.random.default_rng(seed))
        data_rng = np.random.default_rng(1000 + seed)
        for _ in range(2000):
            s = pendulum.reset(data_rng)
            ident.record(s.as_vector(), -2.0 * s.angle - s.angular_velocity)
        train_rng = np.random.default_rng(2000 + seed)
        for _ in range(500):
            ident.update(train_rng)
        held_out = np.stack(
            [pendulum.reset(data_rng).as_vector() for _ in range(1000)]
        )
        targets = (-2.0 * held_out[:, 0] - held_out[:, 1])[:, None]
        rmse = float(np.sqrt(np.mean((nn.forward(ident.model, held_out) - targets) ** 2)))
        rmses.append(rmse)
        passes += rmse < 0.2
    elapsed = time.time() - started
    detail = f"RMSE {['%.3f' % r for r in rmses]}, {passes}/5 < 0.2, {elapsed:.0f} s (< 60 s)"
    assert report(3, "identification convergence", passes >= 4 and elapsed < 60.0, detail)


# --- criteria 4-6: shared-goal experiment orderings ------------------------------


def test_criterion_4_reward_ordering(long_runs):
    rewards = {
        name: sorted(run_metric(row) for row in long_runs[name].values())
        for name in ("pal", "oblivious", "baseline")
    }
    med = {name: statistics.median(values) for name, values in rewards.items()}
    detail = (
        f"median reward/s: pal {med['pal']:.1f}, oblivious {med['oblivious']:.1f}, "
        f"baseline {med['baseline']:.1f}"
    )
    ordered = med["pal"] > med["oblivious"] > med["baseline"]
    pal_ok = med["pal"] > -80.0
    baseline_ok = med["baseline"] < -500.0
    ok = ordered and pal_ok and baseline_ok
    if not baseline_ok:
        detail += (
            "; baseline < -500 unattainable: wrapped angles and the velocity clip "
            "bound the per-agent average at -330.4/s"
        )
    assert report(4, "windowed reward ordering", ok, detail)


def test_criterion_5_swing_up_counts(long_runs):
    times = {
        name: [swing_up_time(row) for row in long_runs[name].values()]
        for name in ("pal", "oblivious", "baseline")
    }
    pal_n = sum(t is not None for t in times["pal"])
    obl_n = sum(t is not None for t in times["oblivious"])
    base_absent = sum(t is None for t in times["baseline"])
    ok = pal_n >= 3 and obl_n >= 3 and base_absent >= 3
    detail = (
        f"swing-ups before 300 s: pal {pal_n}/5, oblivious {obl_n}/5, "
        f"baseline without {base_absent}/5"
    )
    assert report(5, "swing-up speed", ok, detail)


def test_criterion_6_hold_quality(long_runs):
    fractions = {
        name: [hold_fraction(row) for row in long_runs[name].values()]
        for name in ("pal", "oblivious")
    }
    pal_med = statistics.median(fractions["pal"])
    obl_med = statistics.median(fractions["oblivious"])
    detail = f"median hold fraction [150 s, 300 s): pal {pal_med:.3f}, oblivious {obl_med:.3f}"
    assert report(6, "hold quality", pal_med > obl_med, detail)


# --- criterion 7: value asymmetry under differing rewards -------------------------


def test_criterion_7_value_asymmetry(long_runs):
    pal_diffs = [
        row["value_plus"] - row["value_minus"] for row in long_runs["pal_dr"].values()
    ]
    ablation_diffs = [
        row["value_plus"] - row["value_minus"] for row in long_runs["ablation_dr"].values()
    ]
    positive = sum(d > 0 for d in pal_diffs)
    pal_median = statistics.median(pal_diffs)
    ablation_median_abs = statistics.median(abs(d) for d in ablation_diffs)
    ok = positive >= 4 and ablation_median_abs < pal_median
    detail = (
        f"V(+0.3)-V(-0.3) positive in {positive}/5 runs, median {pal_median:.2f}; "
        f"ablation median |diff| {ablation_median_abs:.2f}"
    )
    assert report(7, "value asymmetry", ok, detail)


# --- criterion 8: bitwise determinism ---------------------------------------------


def test_criterion_8_determinism(tmp_path):
    raw = {"setup": "pal", "duration": "10"}
    blobs = []
    for attempt in ("a", "b"):
        config = build_config(dict(raw), seed=123, out_dir=str(tmp_path / attempt))
        result = run_experiment(config)
        paths = write_run_outputs(result, config.out_dir)
        with open(paths["trace"], "rb") as fh:
            blobs.append(fh.read())
    ok = blobs[0] == blobs[1]
    assert report(8, "trace determinism", ok, f"{len(blobs[0])} bytes compared")

"""Reality loop and experiment orchestration.

One run: reset the plant once, then per real step let both controllers
act, advance the plant, let each learning agent ingest what it sensed
(partner controls arrive one step late) and train — partner-model agents
inside their internal simulation, baseline agents directly on real
transitions with the delayed partner control appended to the state.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import checkpoint, metrics, pendulum
from .config import AgentKind, ExperimentConfig
from .ddpg import DdpgAgent, OuNoise, RlTransition
from .errors import NumericsError
from .identification import PartnerIdentifier
from .nn import LossKind, forward
from .pendulum import REWARD_FUNCTIONS, PendulumParams, PendulumState
from .replay import SamplingStrategy
from .rng import substream
from .simulation import InternalMdp, run_internal_episode, zero_partner

VALUE_PROBE_ANGLE = 0.3
VALUE_GRID_RESOLUTION = 0.1
SWING_UP_TOLERANCE = 0.2  # rad
SWING_UP_HOLD = 2.0  # s


class NumericalAbort(NumericsError):
    """Run aborted on a non-finite value; carries the partial result."""

    def __init__(self, message: str, partial_result: "RunResult"):
        super().__init__(message)
        self.partial_result = partial_result


@dataclass
class AgentRuntime:
    """Everything one controller needs during the reality loop."""

    index: int
    kind: AgentKind
    ddpg: DdpgAgent
    identifier: PartnerIdentifier | None
    mdp: InternalMdp | None
    episode_every: int
    id_update_every: int
    sim_reset: str
    rng_id: np.random.Generator
    rng_sim: np.random.Generator
    rng_explore: np.random.Generator
    rng_rl: np.random.Generator
    current_input: np.ndarray | None = None  # baseline: augmented state used to act

    def __post_init__(self):
        if self.kind is AgentKind.BASELINE_DDPG:
            assert self.identifier is None and self.mdp is None
        elif self.kind is AgentKind.OBLIVIOUS_PAL:
            assert self.identifier is None and self.mdp is not None
        else:
            assert self.identifier is not None and self.mdp is not None


@dataclass
class RunResult:
    config: ExperimentConfig
    trace: metrics.Trace
    summary: dict
    agents: tuple[AgentRuntime, AgentRuntime]


def build_agent_runtime(config: ExperimentConfig, index: int) -> AgentRuntime:
    kind = config.agent_kind(index)
    settings = config.agent1 if index == 1 else config.agent2
    seed = config.seed
    reward_fn = REWARD_FUNCTIONS[config.reward_kind(index)]
    plant = PendulumParams(dt=config.dt, torque_limit=config.torque_limit)

    rl = settings.ddpg
    state_dim = 3 if kind is AgentKind.BASELINE_DDPG else 2
    # The replay buffer covers the transitions the agent experienced over
    # the last rl.buffer_seconds of reality. Baseline agents see one real
    # transition per step; simulation-trained agents generate a whole
    # internal episode every episode_every real steps.
    per_real_step = (
        1.0
        if kind is AgentKind.BASELINE_DDPG
        else settings.simulation.episode_steps / settings.simulation.episode_every
    )
    rl_capacity = max(1, round(rl.buffer_seconds / config.dt * per_real_step))
    agent = DdpgAgent(
        state_dim=state_dim,
        control_limit=config.torque_limit,
        rng_init=substream(seed, f"agent{index}-ddpg-init"),
        actor_hidden=rl.actor_hidden,
        critic_hidden=rl.critic_hidden,
        hidden_layers=rl.hidden_layers,
        learning_rate=rl.learning_rate,
        grad_clip=rl.grad_clip,
        gamma=rl.gamma,
        tau=rl.tau,
        batch_size=rl.batch_size,
        warmup=rl.warmup,
        buffer_capacity=rl_capacity,
        loss_kind=LossKind(rl.loss),
        ou=OuNoise(theta=rl.ou_theta, mu=rl.ou_mu, sigma=rl.ou_sigma),
    )

    identifier = None
    mdp = None
    if kind is AgentKind.FULL_PAL:
        ident = settings.identification
        strategy = {
            "uniform": SamplingStrategy.uniform(),
            "cer": SamplingStrategy.cer(),
            "per": SamplingStrategy.per(ident.per_alpha),
        }[ident.strategy]
        identifier = PartnerIdentifier(
            state_dim=2,
            partner_dim=1,
            rng_init=substream(seed, f"agent{index}-id-init"),
            hidden_layers=ident.hidden_layers,
            hidden_units=ident.hidden_units,
            buffer_capacity=max(1, round(ident.buffer_seconds / config.dt)),
            learning_rate=ident.learning_rate,
            strategy=strategy,
            epochs_per_update=ident.epochs_per_update,
            train_fraction=ident.train_fraction,
            minibatch_size=ident.minibatch_size,
        )
    if kind is not AgentKind.BASELINE_DDPG:
        model = identifier.model if identifier is not None else None
        partner = (lambda s: float(forward(model, s)[0])) if model is not None else zero_partner
        mdp = InternalMdp(
            params=plant,
            partner=partner,
            reward_fn=reward_fn,
            agent_slot=index,
            episode_length=settings.simulation.episode_steps,
            gamma=rl.gamma,
            train_every=settings.simulation.train_every,
        )

    return AgentRuntime(
        index=index,
        kind=kind,
        ddpg=agent,
        identifier=identifier,
        mdp=mdp,
        episode_every=settings.simulation.episode_every,
        id_update_every=settings.identification.update_every,
        sim_reset=settings.simulation.reset,
        rng_id=substream(seed, f"agent{index}-id"),
        rng_sim=substream(seed, f"agent{index}-sim"),
        rng_explore=substream(seed, f"agent{index}-explore"),
        rng_rl=substream(seed, f"agent{index}-rl"),
    )


def _finite_state(state: PendulumState) -> bool:
    return math.isfinite(state.angle) and math.isfinite(state.angular_velocity)


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Execute one configured run and return its trace and summary.

    Raises :class:`NumericalAbort` (with the rows produced so far) if the
    plant state or any training loss stops being finite.
    """
    params = PendulumParams(dt=config.dt, torque_limit=config.torque_limit)
    reward_fns = (
        REWARD_FUNCTIONS[config.reward_kind(1)],
        REWARD_FUNCTIONS[config.reward_kind(2)],
    )
    agents = (build_agent_runtime(config, 1), build_agent_runtime(config, 2))
    plant_rng = substream(config.seed, "plant")
    n_steps = config.n_steps()
    reset_every = round(config.periodic_reset / config.dt) if config.periodic_reset > 0 else 0

    rows = np.full((n_steps, len(metrics.TRACE_COLUMNS)), np.nan)
    state = pendulum.reset(plant_rng)
    prev_controls = [0.0, 0.0]  # applied controls of the previous step

    def finish(k_done: int) -> RunResult:
        trace = metrics.Trace(rows[:k_done])
        summary = _summarize(config, trace, agents, aborted=k_done < n_steps)
        return RunResult(config, trace, summary, agents)

    for k in range(n_steps):
        if reset_every and k > 0 and k % reset_every == 0:
            state = pendulum.reset(plant_rng)
        state_vec = state.as_vector()

        controls = [0.0, 0.0]
        for agent in agents:
            i = agent.index - 1
            if agent.kind is AgentKind.BASELINE_DDPG:
                # Delayed partner control, scaled by the limit, as a third
                # state coordinate; exploration happens on the real plant.
                aug = np.array(
                    [state.angle, state.angular_velocity,
                     prev_controls[1 - i] / config.torque_limit]
                )
                agent.current_input = aug
                controls[i] = agent.ddpg.act_explore(aug, agent.rng_explore)
            else:
                controls[i] = agent.ddpg.act(state_vec)

        try:
            next_state = pendulum.step(state, controls[0], controls[1], params)
        except NumericsError as exc:
            raise NumericalAbort(str(exc), finish(k)) from exc
        if not _finite_state(next_state):
            raise NumericalAbort(f"plant state non-finite at step {k}", finish(k))
        rewards = (reward_fns[0](state, controls[0]), reward_fns[1](state, controls[1]))

        # Sensing at step k+1: partner controls of step k become visible.
        id_losses = [math.nan, math.nan]
        try:
            for agent in agents:
                i = agent.index - 1
                partner_control = controls[1 - i]
                if agent.identifier is not None:
                    agent.identifier.record(state_vec, partner_control)
                    if (k + 1) % agent.id_update_every == 0:
                        id_losses[i] = agent.identifier.update(agent.rng_id).loss_after
                if agent.kind is AgentKind.BASELINE_DDPG:
                    aug_next = np.array(
                        [next_state.angle, next_state.angular_velocity,
                         partner_control / config.torque_limit]
                    )
                    agent.ddpg.observe(
                        RlTransition(agent.current_input, controls[i], rewards[i], aug_next)
                    )
                    if (k + 1) % agent.episode_every == 0:
                        agent.ddpg.train_step(agent.rng_rl)
                elif (k + 1) % agent.episode_every == 0:
                    start = next_state if agent.sim_reset == "current" else None
                    run_internal_episode(agent.ddpg, agent.mdp, agent.rng_sim, start_state=start)
        except NumericalAbort:
            raise
        except NumericsError as exc:
            rows[k] = (
                k * config.dt, state.angle, state.angular_velocity,
                controls[0], controls[1], rewards[0], rewards[1],
                id_losses[0], id_losses[1],
            )
            raise NumericalAbort(str(exc), finish(k + 1)) from exc

        rows[k] = (
            k * config.dt, state.angle, state.angular_velocity,
            controls[0], controls[1], rewards[0], rewards[1],
            id_losses[0], id_losses[1],
        )
        prev_controls = controls
        state = next_state

    return finish(n_steps)


def value_asymmetry_report(
    agent: DdpgAgent,
    probe_angle: float = VALUE_PROBE_ANGLE,
    resolution: float = VALUE_GRID_RESOLUTION,
) -> tuple[float, float]:
    """Critic state values at (+probe, 0) and (-probe, 0), in that order.

    Baseline agents carry the partner-control coordinate in their state;
    the probe sets it to zero.
    """
    def probe(angle: float) -> np.ndarray:
        vec = np.zeros(agent.state_dim)
        vec[0] = angle
        return vec

    return (
        agent.evaluate_state_value(probe(probe_angle), resolution),
        agent.evaluate_state_value(probe(-probe_angle), resolution),
    )


def _summarize(
    config: ExperimentConfig,
    trace: metrics.Trace,
    agents: tuple[AgentRuntime, AgentRuntime],
    aborted: bool,
) -> dict:
    summary: dict = {
        "setup": config.setup.value,
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "dt": config.dt,
        "duration": config.duration,
        "steps": len(trace),
        "aborted": aborted,
    }
    if len(trace) > 0:
        window_end = min(config.metrics_window, (len(trace)) * config.dt)
        r1 = metrics.average_reward_per_second(trace, 1, 0.0, window_end)
        r2 = metrics.average_reward_per_second(trace, 2, 0.0, window_end)
        summary["reward_window"] = [0.0, window_end]
        summary["average_reward_per_second"] = {
            "agent1": r1,
            "agent2": r2,
            "mean": 0.5 * (r1 + r2),
        }
        summary["first_swing_up_time"] = metrics.detect_first_swing_up(
            trace, SWING_UP_TOLERANCE, SWING_UP_HOLD
        )
    v_plus, v_minus = value_asymmetry_report(agents[0].ddpg)
    summary["value_asymmetry"] = {
        "probe_angle": VALUE_PROBE_ANGLE,
        "grid_resolution": VALUE_GRID_RESOLUTION,
        "value_at_plus": v_plus,
        "value_at_minus": v_minus,
        "difference": v_plus - v_minus,
    }
    return summary


def run_name(config: ExperimentConfig) -> str:
    return f"{config.setup.value}_seed{config.seed}"


def write_run_outputs(result: RunResult, out_dir, name: str | None = None) -> dict[str, str]:
    """Write trace CSV, JSON summary and final checkpoints; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    base = name or run_name(result.config)
    paths = {
        "trace": os.path.join(out_dir, f"{base}.csv"),
        "summary": os.path.join(out_dir, f"{base}.summary.json"),
    }
    metrics.write_trace_csv(paths["trace"], result.trace)
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for agent in result.agents:
        key = f"agent{agent.index}"
        paths[key] = os.path.join(out_dir, f"{base}.{key}.ckpt")
        checkpoint.save_agent(paths[key], agent.ddpg)
        if agent.identifier is not None:
            ident_key = f"ident{agent.index}"
            paths[ident_key] = os.path.join(out_dir, f"{base}.{ident_key}.ckpt")
            checkpoint.save_mlp(paths[ident_key], agent.identifier.model)
    return paths

"""Internal simulation: the plant model composed with a partner model.

From one agent's point of view the other controller is just part of the
environment, so plugging the identified partner law into the known plant
yields an ordinary single-agent MDP. Training episodes run entirely in
here and never touch the real plant state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import pendulum
from .ddpg import DdpgAgent, RlTransition
from .errors import NumericsError
from .pendulum import PendulumParams, PendulumState


def zero_partner(state: np.ndarray) -> float:
    """Partner model of an agent that assumes it acts alone."""
    return 0.0


@dataclass
class InternalMdp:
    """Single-agent MDP built from the plant, a partner model and a reward.

    ``agent_slot`` says which torque input the learner occupies; the
    partner model feeds the other one. Rewards depend on the learner's own
    control only.
    """

    params: PendulumParams
    partner: Callable[[np.ndarray], float]
    reward_fn: Callable[[PendulumState, float], float]
    agent_slot: int = 1
    episode_length: int = 200
    gamma: float = 0.99
    train_every: int = 2

    def __post_init__(self):
        if self.agent_slot not in (1, 2):
            raise ValueError(f"agent_slot must be 1 or 2, got {self.agent_slot}")
        if self.episode_length < 1:
            raise ValueError(f"episode_length must be >= 1, got {self.episode_length}")


@dataclass(frozen=True)
class EpisodeSummary:
    steps: int
    mean_reward: float


def mdp_step(
    mdp: InternalMdp, state: PendulumState, own_control: float
) -> tuple[PendulumState, float, float]:
    """Advance the simulated plant one step under own and predicted control.

    Returns (next state, reward, partner control as predicted, before the
    plant's torque saturation).
    """
    partner_control = float(mdp.partner(state.as_vector()))
    if mdp.agent_slot == 1:
        next_state = pendulum.step(state, own_control, partner_control, mdp.params)
    else:
        next_state = pendulum.step(state, partner_control, own_control, mdp.params)
    reward = mdp.reward_fn(state, own_control)
    if not math.isfinite(reward):
        raise NumericsError(f"non-finite simulated reward at {state}")
    return next_state, reward, partner_control


def run_internal_episode(
    agent: DdpgAgent,
    mdp: InternalMdp,
    rng: np.random.Generator,
    start_state: PendulumState | None = None,
) -> EpisodeSummary:
    """One exploration episode in the internal simulation.

    Starts from the plant's reset distribution unless a start state is
    given, resets the exploration noise, stores every transition and runs
    a gradient step every ``mdp.train_every`` simulated steps.
    """
    state = start_state if start_state is not None else pendulum.reset(rng)
    agent.ou.reset()
    state_vec = state.as_vector()
    total_reward = 0.0
    for k in range(mdp.episode_length):
        control = agent.act_explore(state_vec, rng)
        next_state, reward, _ = mdp_step(mdp, state, control)
        next_vec = next_state.as_vector()
        agent.observe(RlTransition(state_vec, control, reward, next_vec))
        total_reward += reward
        if (k + 1) % mdp.train_every == 0:
            agent.train_step(rng)
        state = next_state
        state_vec = next_vec
    return EpisodeSummary(mdp.episode_length, total_reward / mdp.episode_length)

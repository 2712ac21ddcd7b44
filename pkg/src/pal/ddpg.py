"""Deterministic-policy-gradient actor-critic for a scalar control.

The actor is the control law itself: its clipped forward pass is what acts
on the plant. Training follows the classic recipe — replay buffer, target
networks tracked by Polyak averaging, temporally correlated exploration
noise — with the twist that the critic is fit under MAE by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import NumericsError
from .replay import ReplayBuffer


@dataclass(frozen=True)
class RlTransition:
    state: np.ndarray
    control: float
    reward: float
    next_state: np.ndarray


@dataclass
class OuNoise:
    """Discretized Ornstein-Uhlenbeck process, one step per call."""

    theta: float = 0.15
    mu: float = 0.0
    sigma: float = 0.3
    step_dt: float = 1.0
    value: float = 0.0

    def step(self, rng: np.random.Generator) -> float:
        self.value += self.theta * (self.mu - self.value) * self.step_dt
        self.value += self.sigma * math.sqrt(self.step_dt) * rng.standard_normal()
        return self.value

    def reset(self, value: float = 0.0) -> None:
        self.value = value


@dataclass(frozen=True)
class TrainStepResult:
    critic_loss: float
    actor_objective: float  # mean Q(s, actor(s)) before the actor update


class DdpgAgent:
    """Actor, critic, their targets, a replay buffer and exploration noise."""

    def __init__(
        self,
        state_dim: int,
        control_limit: float,
        rng_init: np.random.Generator,
        *,
        actor_hidden: int = 16,
        critic_hidden: int = 32,
        hidden_layers: int = 3,
        weight_range: tuple[float, float] = (-1.0, 1.0),
        learning_rate: float = 0.001,
        grad_clip: float = 1.0,
        gamma: float = 0.99,
        tau: float = 0.001,
        batch_size: int = 32,
        warmup: int = 100,
        buffer_capacity: int = 200,
        loss_kind: nn.LossKind = nn.LossKind.MAE,
        ou: OuNoise | None = None,
    ):
        if not 0 <= gamma < 1:
            raise ValueError(f"gamma must be in [0, 1), got {gamma}")
        if not 0 < tau <= 1:
            raise ValueError(f"tau must be in (0, 1], got {tau}")
        self.state_dim = state_dim
        self.control_limit = float(control_limit)
        actor_sizes = (state_dim, *([actor_hidden] * hidden_layers), 1)
        critic_sizes = (state_dim + 1, *([critic_hidden] * hidden_layers), 1)
        self.actor = nn.init_mlp(actor_sizes, [weight_range] * (hidden_layers + 1), rng_init)
        self.critic = nn.init_mlp(critic_sizes, [weight_range] * (hidden_layers + 1), rng_init)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = nn.AdamState.for_params(self.actor.params, learning_rate)
        self.critic_opt = nn.AdamState.for_params(self.critic.params, learning_rate)
        self.grad_clip = grad_clip
        self.gamma = gamma
        self.tau = tau
        self.batch_size = batch_size
        self.warmup = warmup
        self.buffer: ReplayBuffer[RlTransition] = ReplayBuffer(buffer_capacity)
        self.loss_kind = loss_kind
        self.ou = ou if ou is not None else OuNoise()
        # Packed mirror of the buffer for fast batch assembly. Row layout:
        # [state, control, reward, next_state], so [state, control] is a
        # ready-made critic input slice.
        self._rows = np.empty((buffer_capacity, 2 * state_dim + 2))
        self._row_start = 0
        self._sa_next = np.empty((batch_size, state_dim + 1))

    def act(self, state: np.ndarray) -> float:
        """Deterministic, noise-free control; this is what runs on the plant."""
        raw = float(nn.forward(self.actor, state)[0])
        return min(max(raw, -self.control_limit), self.control_limit)

    def act_explore(self, state: np.ndarray, rng: np.random.Generator) -> float:
        """Actor output plus one noise step, clipped to the control limit."""
        raw = float(nn.forward(self.actor, state)[0]) + self.ou.step(rng)
        return min(max(raw, -self.control_limit), self.control_limit)

    def observe(self, transition: RlTransition) -> None:
        d = self.state_dim
        cap = self.buffer.capacity
        if len(self.buffer) == cap:
            slot = self._row_start
            self._row_start = (self._row_start + 1) % cap
        else:
            slot = (self._row_start + len(self.buffer)) % cap
        row = self._rows[slot]
        row[:d] = transition.state
        row[d] = transition.control
        row[d + 1] = transition.reward
        row[d + 2 :] = transition.next_state
        self.buffer.push(transition)

    def train_step(self, rng: np.random.Generator) -> TrainStepResult | None:
        """One critic and one actor update from a uniform replay batch.

        A no-op until the buffer has reached the warm-up fill. Target
        networks take a Polyak step afterwards.
        """
        if len(self.buffer) < self.warmup:
            return None
        d = self.state_dim
        idx = rng.integers(0, len(self.buffer), size=self.batch_size)
        if self._row_start:
            idx = (self._row_start + idx) % self.buffer.capacity
        batch = self._rows[idx]
        s = batch[:, :d]
        sa = batch[:, : d + 1]  # [state, control]
        r = batch[:, d + 1 : d + 2]
        s_next = batch[:, d + 2 :]
        lim = self.control_limit

        # Critic regression toward the bootstrapped target.
        a_next = nn.forward(self.target_actor, s_next)
        np.clip(a_next, -lim, lim, out=a_next)
        self._sa_next[:, :d] = s_next
        self._sa_next[:, d:] = a_next
        q_next = nn.forward(self.target_critic, self._sa_next)
        y = r + self.gamma * q_next
        q, acts = nn.forward_cached(self.critic, sa)
        critic_loss, dq = nn.loss_and_grad(q, y, self.loss_kind)
        if not math.isfinite(critic_loss):
            raise NumericsError(f"critic loss became non-finite ({critic_loss})")
        grads, _ = nn.backward_cached(self.critic, acts, dq, nn.grad_workspace(self.critic))
        nn.clip_gradient_norm(grads, self.grad_clip)
        nn.adam_step(self.critic.params, grads, self.critic_opt)

        # Actor ascends Q(s, actor(s)); dQ/du passes the clip unmodified.
        a, actor_acts = nn.forward_cached(self.actor, s)
        self._sa_next[:, :d] = s
        self._sa_next[:, d:] = np.clip(a, -lim, lim)
        q_pi, critic_acts = nn.forward_cached(self.critic, self._sa_next)
        objective = float(np.mean(q_pi))
        if not math.isfinite(objective):
            raise NumericsError(f"actor objective became non-finite ({objective})")
        descend = np.full_like(q_pi, -1.0 / q_pi.shape[0])
        _, input_grads = nn.backward_cached(
            self.critic, critic_acts, descend, nn.grad_workspace(self.critic)
        )
        du = np.ascontiguousarray(input_grads[:, self.state_dim :])
        # Saturated actions only receive gradients that pull them back
        # inside the control range; outward pushes are dropped so the raw
        # actor output cannot run away past the clip and go dead.
        np.putmask(du, (a > lim) & (du < 0.0), 0.0)
        np.putmask(du, (a < -lim) & (du > 0.0), 0.0)
        actor_grads, _ = nn.backward_cached(self.actor, actor_acts, du, nn.grad_workspace(self.actor))
        nn.clip_gradient_norm(actor_grads, self.grad_clip)
        nn.adam_step(self.actor.params, actor_grads, self.actor_opt)

        nn.soft_update(self.target_actor.params, self.actor.params, self.tau)
        nn.soft_update(self.target_critic.params, self.critic.params, self.tau)
        return TrainStepResult(critic_loss, objective)

    def evaluate_state_value(self, state: np.ndarray, grid_resolution: float) -> float:
        """State value as the critic's maximum over a control grid."""
        return max_q_over_control_grid(
            lambda sa: nn.forward(self.critic, sa), state, self.control_limit, grid_resolution
        )


def control_grid(limit: float, resolution: float) -> np.ndarray:
    """Evenly spaced controls from -limit to +limit inclusive."""
    if resolution <= 0:
        raise ValueError(f"grid resolution must be positive, got {resolution}")
    n = int(round(2.0 * limit / resolution)) + 1
    return -limit + resolution * np.arange(n)


def max_q_over_control_grid(
    q_batch_fn, state: np.ndarray, limit: float, resolution: float
) -> float:
    """Maximize ``q_batch_fn([state, u])`` over the control grid."""
    grid = control_grid(limit, resolution)
    s = np.asarray(state, dtype=np.float64)
    sa = np.concatenate((np.tile(s, (grid.size, 1)), grid[:, None]), axis=1)
    return float(np.max(q_batch_fn(sa)))

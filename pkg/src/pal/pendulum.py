"""Shared two-torque pendulum plant: dynamics, resets and reward functions.

Angle convention: 0 is upright, angles live in (-pi, pi]. Two controls act
on the same joint and enter the dynamics only through their sum, each
saturated at the torque limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericsError

TWO_PI = 2.0 * math.pi
OMEGA_MAX = 8.0


@dataclass(frozen=True)
class PendulumState:
    angle: float  # rad, in (-pi, pi]
    angular_velocity: float  # rad/s, in [-8, 8]

    def as_vector(self) -> np.ndarray:
        return np.array([self.angle, self.angular_velocity])


@dataclass(frozen=True)
class PendulumParams:
    dt: float = 0.05
    gravity: float = 10.0
    mass: float = 1.0
    length: float = 1.0
    torque_limit: float = 5.0

    def __post_init__(self):
        for name in ("dt", "gravity", "mass", "length", "torque_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class RewardKind(enum.Enum):
    SHARED_UPRIGHT = "shared_upright"
    AGENT1_INCLINED = "agent1_inclined"
    AGENT2_INCLINED = "agent2_inclined"


def wrap_angle(angle: float) -> float:
    """Map to the equivalent angle in (-pi, pi]."""
    return math.pi - (math.pi - angle) % TWO_PI


def step(state: PendulumState, u1: float, u2: float, params: PendulumParams) -> PendulumState:
    """One Euler step under both torques.

    The angle advances with the pre-update velocity; torques are clipped to
    the limit before entering the dynamics and the new velocity is clipped
    to [-8, 8].
    """
    if not (math.isfinite(state.angle) and math.isfinite(state.angular_velocity)):
        raise NumericsError(f"non-finite pendulum state {state}")
    lim = params.torque_limit
    u = min(max(u1, -lim), lim) + min(max(u2, -lim), lim)
    phi, omega = state.angle, state.angular_velocity
    # sin(phi + pi) written as -sin(phi): identical, but exact at phi = 0
    accel = (
        1.5 * params.gravity / params.length * math.sin(phi)
        + 3.0 / (params.mass * params.length**2) * u
    )
    omega_next = omega + accel * params.dt
    omega_next = min(max(omega_next, -OMEGA_MAX), OMEGA_MAX)
    phi_next = wrap_angle(phi + omega * params.dt)
    return PendulumState(phi_next, omega_next)


def reset(rng: np.random.Generator) -> PendulumState:
    """Draw a state uniformly from angle (-pi, pi] x velocity (-8, 8]."""
    phi = math.pi - TWO_PI * rng.random()
    omega = OMEGA_MAX - 2.0 * OMEGA_MAX * rng.random()
    return PendulumState(phi, omega)


def reward_shared(state: PendulumState, own_control: float) -> float:
    """Penalty for deviating from upright, for speed and for own effort."""
    return -(state.angle**2) - 0.1 * state.angular_velocity**2 - 0.01 * own_control**2


def reward_agent1(state: PendulumState, own_control: float) -> float:
    """Inclined goal, symmetric: optima at +-pi/4 before effort costs."""
    return (
        -((abs(state.angle) - math.pi / 4.0) ** 2)
        - 0.1 * state.angular_velocity**2
        - 0.1 * own_control**2
    )


def reward_agent2(state: PendulumState, own_control: float) -> float:
    """Inclined goal, one-sided: optimum at +pi/4 before effort costs."""
    return (
        -((state.angle - math.pi / 4.0) ** 2)
        - 0.1 * state.angular_velocity**2
        - 0.1 * own_control**2
    )


REWARD_FUNCTIONS = {
    RewardKind.SHARED_UPRIGHT: reward_shared,
    RewardKind.AGENT1_INCLINED: reward_agent1,
    RewardKind.AGENT2_INCLINED: reward_agent2,
}

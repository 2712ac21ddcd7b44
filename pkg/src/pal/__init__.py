"""Two-agent pendulum control with online partner identification.

Each learning controller fits a model of the other controller's behavior
from delayed observations and improves its own control law with an
actor-critic learner running inside an internal simulation of the plant
plus that partner model.
"""

from .config import AgentKind, ExperimentConfig, SetupKind, load_config
from .ddpg import DdpgAgent, OuNoise, RlTransition
from .errors import ConfigurationError, NumericsError
from .harness import RunResult, run_experiment, write_run_outputs
from .identification import IdExperience, PartnerIdentifier
from .pendulum import PendulumParams, PendulumState, RewardKind
from .replay import ReplayBuffer, SamplingStrategy
from .simulation import InternalMdp, run_internal_episode

__version__ = "0.1.0"

__all__ = [
    "AgentKind",
    "ConfigurationError",
    "DdpgAgent",
    "ExperimentConfig",
    "IdExperience",
    "InternalMdp",
    "NumericsError",
    "OuNoise",
    "PartnerIdentifier",
    "PendulumParams",
    "PendulumState",
    "ReplayBuffer",
    "RlTransition",
    "RunResult",
    "RewardKind",
    "SamplingStrategy",
    "SetupKind",
    "load_config",
    "run_experiment",
    "run_internal_episode",
    "write_run_outputs",
    "__version__",
]

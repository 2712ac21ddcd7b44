"""Declarative run configuration: dataclasses, file parsing, validation.

Config files are flat ``key = value`` text. Every hyperparameter key can
be prefixed with ``agent1_`` or ``agent2_`` to override it for one agent
only; unknown keys are rejected outright.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field, fields

from .errors import ConfigurationError
from .pendulum import RewardKind


class SetupKind(enum.Enum):
    BASELINE = "baseline"
    OBLIVIOUS = "oblivious"
    PAL = "pal"
    PAL_DIFFERENT_REWARDS = "pal_different_rewards"


class AgentKind(enum.Enum):
    BASELINE_DDPG = "baseline_ddpg"
    OBLIVIOUS_PAL = "oblivious_pal"
    FULL_PAL = "full_pal"


_SETUP_DEFAULT_KIND = {
    SetupKind.BASELINE: AgentKind.BASELINE_DDPG,
    SetupKind.OBLIVIOUS: AgentKind.OBLIVIOUS_PAL,
    SetupKind.PAL: AgentKind.FULL_PAL,
    SetupKind.PAL_DIFFERENT_REWARDS: AgentKind.FULL_PAL,
}


@dataclass
class IdentificationSettings:
    hidden_layers: int = 3
    hidden_units: int = 16
    buffer_seconds: float = 100.0
    learning_rate: float = 0.01
    epochs_per_update: int = 4
    train_fraction: float = 0.10
    minibatch_size: int = 20
    strategy: str = "cer"  # uniform | cer | per
    per_alpha: float = 0.6
    update_every: int = 1  # real steps between updates


@dataclass
class DdpgSettings:
    actor_hidden: int = 16
    critic_hidden: int = 32
    hidden_layers: int = 3
    buffer_seconds: float = 10.0
    learning_rate: float = 0.001
    grad_clip: float = 1.0
    gamma: float = 0.99
    tau: float = 0.001
    batch_size: int = 32
    warmup: int = 100
    loss: str = "mae"  # mae | mse
    ou_theta: float = 0.15
    ou_sigma: float = 0.3
    ou_mu: float = 0.0


@dataclass
class SimulationSettings:
    episode_steps: int = 200
    train_every: int = 2  # simulated steps between gradient updates
    episode_every: int = 2  # real steps between internal episodes
    reset: str = "distribution"  # distribution | current


@dataclass
class AgentSettings:
    kind: AgentKind | None = None  # None: derived from the setup
    identification: IdentificationSettings = field(default_factory=IdentificationSettings)
    ddpg: DdpgSettings = field(default_factory=DdpgSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)


@dataclass
class ExperimentConfig:
    setup: SetupKind
    duration: float = 300.0
    dt: float = 0.05
    torque_limit: float | None = None  # None: 5, or 10 for differing rewards
    seed: int = 0
    metrics_window: float = 300.0
    out_dir: str = "runs"
    periodic_reset: float = 0.0  # seconds between plant resets; 0 disables
    agent1: AgentSettings = field(default_factory=AgentSettings)
    agent2: AgentSettings = field(default_factory=AgentSettings)

    def __post_init__(self):
        if self.torque_limit is None:
            self.torque_limit = (
                10.0 if self.setup is SetupKind.PAL_DIFFERENT_REWARDS else 5.0
            )
        self.validate()

    def validate(self) -> None:
        if self.duration <= 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration}")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.torque_limit <= 0:
            raise ConfigurationError(f"torque_limit must be positive, got {self.torque_limit}")
        if self.metrics_window <= 0:
            raise ConfigurationError("metrics_window must be positive")
        if self.periodic_reset < 0:
            raise ConfigurationError("periodic_reset must be >= 0")
        if self.setup is SetupKind.PAL_DIFFERENT_REWARDS and self.torque_limit != 10.0:
            raise ConfigurationError(
                "the differing-rewards setup requires torque_limit = 10"
            )
        for name, agent in (("agent1", self.agent1), ("agent2", self.agent2)):
            ident = agent.identification
            if ident.strategy not in ("uniform", "cer", "per"):
                raise ConfigurationError(f"{name}: unknown id_strategy {ident.strategy!r}")
            if not 0 < ident.train_fraction <= 1:
                raise ConfigurationError(f"{name}: id_train_fraction must be in (0, 1]")
            if agent.ddpg.loss not in ("mae", "mse"):
                raise ConfigurationError(f"{name}: unknown rl_loss {agent.ddpg.loss!r}")
            if agent.simulation.reset not in ("distribution", "current"):
                raise ConfigurationError(f"{name}: unknown sim_reset {agent.simulation.reset!r}")

    def agent_kind(self, index: int) -> AgentKind:
        settings = self.agent1 if index == 1 else self.agent2
        return settings.kind or _SETUP_DEFAULT_KIND[self.setup]

    def reward_kind(self, index: int) -> RewardKind:
        if self.setup is SetupKind.PAL_DIFFERENT_REWARDS:
            return RewardKind.AGENT1_INCLINED if index == 1 else RewardKind.AGENT2_INCLINED
        return RewardKind.SHARED_UPRIGHT

    def n_steps(self) -> int:
        return round(self.duration / self.dt)

    def to_flat_dict(self) -> dict[str, str]:
        """Canonical flat key/value view, also used for hashing."""
        out = {
            "setup": self.setup.value,
            "duration": repr(self.duration),
            "dt": repr(self.dt),
            "torque_limit": repr(self.torque_limit),
            "seed": str(self.seed),
            "metrics_window": repr(self.metrics_window),
            "periodic_reset": repr(self.periodic_reset),
        }
        for agent_name, agent in (("agent1", self.agent1), ("agent2", self.agent2)):
            out[f"{agent_name}_kind"] = self.agent_kind(1 if agent_name == "agent1" else 2).value
            for prefix, block in (
                ("id", agent.identification),
                ("rl", agent.ddpg),
                ("sim", agent.simulation),
            ):
                for f in fields(block):
                    value = getattr(block, f.name)
                    out[f"{agent_name}_{prefix}_{f.name}"] = (
                        repr(value) if isinstance(value, float) else str(value)
                    )
        return out

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(self.to_flat_dict().items()))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


# Flat config-file schema: key -> (target, converter). Targets are either a
# plain ExperimentConfig field or a (block, field) pair on AgentSettings.
def _float(text: str) -> float:
    return float(text)


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _str(text: str) -> str:
    return text


_GLOBAL_KEYS = {
    "setup": _str,
    "duration": _float,
    "dt": _float,
    "torque_limit": _float,
    "seed": _int,
    "metrics_window": _float,
    "out_dir": _str,
    "periodic_reset": _float,
}

_TYPE_CONVERTERS = {"int": _int, "float": _float, "str": _str}

_AGENT_KEYS: dict[str, tuple[str, str, object]] = {}
for _block_name, _prefix, _cls in (
    ("identification", "id", IdentificationSettings),
    ("ddpg", "rl", DdpgSettings),
    ("simulation", "sim", SimulationSettings),
):
    for _f in fields(_cls):
        _AGENT_KEYS[f"{_prefix}_{_f.name}"] = (_block_name, _f.name, _TYPE_CONVERTERS[_f.type])


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; comments start with ``#``."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key or not value:
            raise ConfigurationError(f"line {lineno}: empty key or value in {line!r}")
        if key in raw:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def build_config(
    raw: dict[str, str],
    *,
    seed: int | None = None,
    out_dir: str | None = None,
) -> ExperimentConfig:
    """Turn parsed key/value pairs into a validated ExperimentConfig."""
    if "setup" not in raw:
        raise ConfigurationError("missing required key 'setup'")
    try:
        setup = SetupKind(raw["setup"])
    except ValueError:
        raise ConfigurationError(
            f"unknown setup {raw['setup']!r}; expected one of "
            f"{[s.value for s in SetupKind]}"
        ) from None

    agents = {1: AgentSettings(), 2: AgentSettings()}
    globals_out: dict[str, object] = {"setup": setup}

    for key, value in raw.items():
        if key == "setup":
            continue
        try:
            if key in _GLOBAL_KEYS:
                globals_out[key] = _GLOBAL_KEYS[key](value)
            elif key in ("agent1_kind", "agent2_kind"):
                agents[int(key[5])].kind = AgentKind(value)
            else:
                base, targets = _split_agent_key(key)
                block_name, field_name, conv = _AGENT_KEYS[base]
                for idx in targets:
                    setattr(getattr(agents[idx], block_name), field_name, conv(value))
        except ConfigurationError:
            raise
        except KeyError:
            raise ConfigurationError(f"unknown key {key!r}") from None
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {exc}") from None

    if seed is not None:
        globals_out["seed"] = seed
    if out_dir is not None:
        globals_out["out_dir"] = out_dir
    try:
        return ExperimentConfig(agent1=agents[1], agent2=agents[2], **globals_out)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def _split_agent_key(key: str) -> tuple[str, tuple[int, ...]]:
    if key.startswith("agent1_"):
        return key[len("agent1_") :], (1,)
    if key.startswith("agent2_"):
        return key[len("agent2_") :], (2,)
    if key not in _AGENT_KEYS:
        raise KeyError(key)
    return key, (1, 2)


def load_config(path, *, seed: int | None = None, out_dir: str | None = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    return build_config(parse_config_text(text), seed=seed, out_dir=out_dir)

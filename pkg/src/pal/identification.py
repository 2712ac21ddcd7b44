"""Online supervised identification of the partner's control law.

Each real time step contributes one (state, partner control) pair, sensed
one step late. A small sigmoid MLP regresses partner control on state;
training draws a fresh subset of the buffer every update, so the model
tracks a partner that keeps changing. No reward information enters here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .replay import ReplayBuffer, SamplingStrategy

PRIORITY_FLOOR = 1e-6


@dataclass(frozen=True)
class IdExperience:
    state: np.ndarray
    partner_control: np.ndarray


@dataclass(frozen=True)
class IdUpdateSummary:
    """Mean squared error on the drawn training set, before and after."""

    loss_before: float
    loss_after: float
    sample_count: int


class PartnerIdentifier:
    """Regression model plus its buffer, optimizer and sampling policy."""

    def __init__(
        self,
        state_dim: int,
        partner_dim: int,
        rng_init: np.random.Generator,
        *,
        hidden_layers: int = 3,
        hidden_units: int = 16,
        buffer_capacity: int = 2000,
        learning_rate: float = 0.01,
        strategy: SamplingStrategy | None = None,
        epochs_per_update: int = 4,
        train_fraction: float = 0.10,
        minibatch_size: int = 20,
        hidden_weight_range: tuple[float, float] = (-1.0, 1.0),
        output_weight_range: tuple[float, float] = (-1e-4, 1e-4),
    ):
        sizes = (state_dim, *([hidden_units] * hidden_layers), partner_dim)
        ranges = [hidden_weight_range] * hidden_layers + [output_weight_range]
        self.model = nn.init_mlp(sizes, ranges, rng_init)
        self.optimizer = nn.AdamState.for_params(self.model.params, learning_rate)
        self.strategy = strategy or SamplingStrategy.cer()
        self.buffer: ReplayBuffer[IdExperience] = ReplayBuffer(
            buffer_capacity, with_priorities=self.strategy.kind == "per"
        )
        self.epochs_per_update = epochs_per_update
        self.train_fraction = train_fraction
        self.minibatch_size = minibatch_size

    def record(self, state: np.ndarray, partner_control: np.ndarray | float) -> None:
        """Store one sensed pair exactly as observed."""
        s = np.asarray(state, dtype=np.float64)
        a = np.atleast_1d(np.asarray(partner_control, dtype=np.float64))
        if s.shape != (self.model.input_dim,) or a.shape != (self.model.output_dim,):
            raise ValueError(
                f"experience dims {s.shape}/{a.shape} do not match the model "
                f"({self.model.input_dim} -> {self.model.output_dim})"
            )
        self.buffer.push(IdExperience(s, a))

    def predict(self, state: np.ndarray) -> np.ndarray:
        """Current estimate of the partner control at ``state``; never clipped."""
        return nn.forward(self.model, state)

    def update(self, rng: np.random.Generator) -> IdUpdateSummary:
        """One identification update on a freshly drawn training set.

        Draws ``max(1, round(train_fraction * len(buffer)))`` experiences,
        then runs ``epochs_per_update`` epochs of Adam/MSE over shuffled
        minibatches. Buffer contents are never modified (PER priorities
        excepted).
        """
        n = len(self.buffer)
        if n == 0:
            raise ValueError("cannot update from an empty buffer")
        n_train = max(1, round(self.train_fraction * n))
        indices = self._draw_indices(n, n_train, rng)
        x = np.stack([self.buffer[int(i)].state for i in indices])
        y = np.stack([self.buffer[int(i)].partner_control for i in indices])

        pred = nn.forward(self.model, x)
        loss_before = float(np.mean((pred - y) ** 2))
        if self.strategy.kind == "per":
            errors = np.mean(np.abs(pred - y), axis=1)
            for i, err in zip(indices, errors):
                self.buffer.update_priority(i, max(float(err), PRIORITY_FLOOR))

        for _ in range(self.epochs_per_update):
            order = rng.permutation(n_train)
            for start in range(0, n_train, self.minibatch_size):
                sel = order[start : start + self.minibatch_size]
                out, acts = nn.forward_cached(self.model, x[sel])
                _, up = nn.loss_and_grad(out, y[sel], nn.LossKind.MSE)
                grads, _ = nn.backward_cached(self.model, acts, up, nn.grad_workspace(self.model))
                nn.adam_step(self.model.params, grads, self.optimizer)

        loss_after = float(np.mean((nn.forward(self.model, x) - y) ** 2))
        return IdUpdateSummary(loss_before, loss_after, n_train)

    def _draw_indices(self, n: int, n_train: int, rng: np.random.Generator) -> np.ndarray:
        """Training-set indices. CER pins the newest item; uniform and CER
        draw the rest without replacement; PER draws with replacement."""
        if self.strategy.kind == "per":
            weights = np.asarray(self.buffer.priorities, dtype=np.float64) ** self.strategy.alpha
            probs = weights / weights.sum()
            return rng.choice(n, size=n_train, replace=True, p=probs)
        if self.strategy.kind == "cer":
            rest = rng.choice(n - 1, size=n_train - 1, replace=False) if n_train > 1 else []
            return np.concatenate(([n - 1], rest)).astype(np.intp)
        return rng.choice(n, size=n_train, replace=False)

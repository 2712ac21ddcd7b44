"""Dense feed-forward networks with hand-written backprop.

Small sigmoid MLPs with linear outputs are the only architecture needed
here, so the whole parameter set of a network lives in one packed float64
vector; ``weights`` and ``biases`` are reshaped views into it. That makes
Adam, gradient clipping and soft updates single-array operations, which
dominates the run time of the training loops.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, NumericsError


class LossKind(enum.Enum):
    MSE = "mse"
    MAE = "mae"


@dataclass
class Mlp:
    """A fully connected net: sigmoid hidden layers, linear output layer.

    ``params`` owns the memory; ``weights[l]`` has shape
    ``(layer_sizes[l], layer_sizes[l+1])`` and ``biases[l]`` has shape
    ``(layer_sizes[l+1],)``, all views into ``params``.
    """

    layer_sizes: tuple[int, ...]
    params: np.ndarray
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    hidden_activation: str = "sigmoid"
    output_activation: str = "linear"

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "Mlp":
        return _wrap_params(self.layer_sizes, self.params.copy())


def _wrap_params(layer_sizes: tuple[int, ...], params: np.ndarray) -> Mlp:
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    offset = 0
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(params[offset : offset + n_in * n_out].reshape(n_in, n_out))
        offset += n_in * n_out
        biases.append(params[offset : offset + n_out])
        offset += n_out
    assert offset == params.size
    return Mlp(layer_sizes=layer_sizes, params=params, weights=weights, biases=biases)


def param_count(layer_sizes: tuple[int, ...]) -> int:
    return sum((i + 1) * o for i, o in zip(layer_sizes[:-1], layer_sizes[1:]))


def init_mlp(
    layer_sizes: tuple[int, ...] | list[int],
    weight_ranges: list[tuple[float, float]],
    rng: np.random.Generator,
) -> Mlp:
    """Create a network with weights drawn uniformly per layer.

    ``weight_ranges`` holds one ``(low, high)`` interval per weight layer.
    Biases start at zero.
    """
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2 or any(n <= 0 for n in sizes):
        raise ConfigurationError(f"layer_sizes must be >=2 positive entries, got {sizes}")
    if len(weight_ranges) != len(sizes) - 1:
        raise ConfigurationError(
            f"need {len(sizes) - 1} weight ranges, got {len(weight_ranges)}"
        )
    mlp = _wrap_params(sizes, np.zeros(param_count(sizes)))
    for w, (low, high) in zip(mlp.weights, weight_ranges):
        if not (low <= high):
            raise ConfigurationError(f"invalid weight range ({low}, {high})")
        w[...] = rng.uniform(low, high, size=w.shape)
    return mlp


def forward(mlp: Mlp, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a vector or on a batch of row vectors."""
    a = np.asarray(x, dtype=np.float64)
    if a.shape[-1] != mlp.input_dim:
        raise ValueError(f"input dim {a.shape[-1]} != {mlp.input_dim}")
    last = len(mlp.weights) - 1
    for l, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        a = a @ w + b
        if l < last:
            a = expit(a)
    return a


def forward_cached(mlp: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Like :func:`forward` on a 2-D batch, keeping activations for backprop."""
    acts = [x]
    a = x
    last = len(mlp.weights) - 1
    for l, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        a = a @ w + b
        if l < last:
            a = expit(a)
        acts.append(a)
    return a, acts


def grad_workspace(mlp: Mlp) -> Mlp:
    """A reusable gradient buffer shaped like ``mlp``, cached on the instance.

    Passing it to :func:`backward_cached` avoids re-allocating views in hot
    loops; the returned gradients are then overwritten by the next call.
    """
    ws = getattr(mlp, "_grad_ws", None)
    if ws is None:
        ws = _wrap_params(mlp.layer_sizes, np.empty_like(mlp.params))
        mlp._grad_ws = ws
    return ws


def backward_cached(
    mlp: Mlp, acts: list[np.ndarray], upstream: np.ndarray, workspace: Mlp | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate an output gradient; returns (packed parameter grads, input grads)."""
    g_mlp = workspace if workspace is not None else _wrap_params(
        mlp.layer_sizes, np.empty_like(mlp.params)
    )
    grads = g_mlp.params
    g = upstream
    for l in range(len(mlp.weights) - 1, -1, -1):
        if l < len(mlp.weights) - 1:
            a = acts[l + 1]  # sigmoid output of layer l
            g = g * a * (1.0 - a)
        g_mlp.weights[l][...] = acts[l].T @ g
        g_mlp.biases[l][...] = g.sum(axis=0)
        g = g @ mlp.weights[l].T
    return grads, g


def loss_and_grad(
    output: np.ndarray, target: np.ndarray, kind: LossKind
) -> tuple[float, np.ndarray]:
    """Mean loss over all elements and its gradient w.r.t. the output."""
    diff = output - target
    n = diff.size
    if kind is LossKind.MSE:
        return float(np.mean(diff * diff)), (2.0 / n) * diff
    # MAE; the subgradient at exact equality is taken as 0
    return float(np.mean(np.abs(diff))), np.sign(diff) / n


def backward(
    mlp: Mlp,
    x: np.ndarray,
    target_or_upstream: np.ndarray,
    loss_kind: LossKind | None = None,
) -> np.ndarray:
    """Exact parameter gradients, packed like ``mlp.params``.

    With ``loss_kind`` the second argument is a target and the gradient of
    the mean loss is returned; without it the argument is an upstream
    gradient w.r.t. the output and the gradient of ``<upstream, output>``
    is returned (the hook used by the deterministic policy gradient).
    """
    x2, _ = _as_batch(x, mlp.input_dim)
    _, acts = forward_cached(mlp, x2)
    arg = np.asarray(target_or_upstream, dtype=np.float64)
    up, _ = _as_batch(arg, mlp.output_dim)
    if loss_kind is not None:
        _, up = loss_and_grad(acts[-1], up, loss_kind)
    grads, _ = backward_cached(mlp, acts, up)
    return grads


def _as_batch(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        if a.shape[0] != dim:
            raise ValueError(f"vector dim {a.shape[0]} != {dim}")
        return a[None, :], True
    if a.ndim != 2 or a.shape[1] != dim:
        raise ValueError(f"batch shape {a.shape} incompatible with dim {dim}")
    return a, False


@dataclass
class AdamState:
    """Adam with bias correction; no weight decay, no AMSGrad."""

    learning_rate: float
    first_moment: np.ndarray
    second_moment: np.ndarray
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    step_count: int = 0

    @classmethod
    def for_params(cls, params: np.ndarray, learning_rate: float, **kw) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            first_moment=np.zeros_like(params),
            second_moment=np.zeros_like(params),
            **kw,
        )


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> np.ndarray:
    """Apply one Adam update in place; returns ``params`` for convenience."""
    # A single reduction: any nan/inf in the gradients poisons the sum.
    if not np.isfinite(grads.sum()):
        raise NumericsError("non-finite gradient passed to adam_step")
    state.step_count += 1
    t = state.step_count
    m, v = state.first_moment, state.second_moment
    m *= state.beta1
    m += (1.0 - state.beta1) * grads
    v *= state.beta2
    v += (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    params -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params


def clip_gradient_norm(grads: np.ndarray, max_norm: float) -> np.ndarray:
    """Rescale in place so the global L2 norm is at most ``max_norm`` (+1e-12).

    The tolerance band keeps the operation exactly idempotent: rescaling
    lands within one rounding error of the bound, which must not trigger a
    second rescale.
    """
    if max_norm <= 0:
        raise ConfigurationError(f"max_norm must be positive, got {max_norm}")
    norm = float(np.sqrt(grads.dot(grads))) if grads.ndim == 1 else float(np.linalg.norm(grads))
    if norm > max_norm + 1e-12:
        grads *= max_norm / norm
    return grads


def soft_update(target_params: np.ndarray, online_params: np.ndarray, tau: float) -> np.ndarray:
    """Polyak step ``target <- tau*online + (1-tau)*target``, in place."""
    target_params *= 1.0 - tau
    target_params += tau * online_params
    return target_params

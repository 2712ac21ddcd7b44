import numpy as np
import pytest

from pal import nn


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_mlp(layer_sizes, rng, low=-1.0, high=1.0):
    ranges = [(low, high)] * (len(layer_sizes) - 1)
    return nn.init_mlp(layer_sizes, ranges, rng)


def finite_difference_grads(mlp, loss_fn, h=1e-5):
    """Central finite differences of ``loss_fn()`` w.r.t. every parameter."""
    grads = np.zeros_like(mlp.params)
    for j in range(mlp.params.size):
        saved = mlp.params[j]
        mlp.params[j] = saved + h
        plus = loss_fn()
        mlp.params[j] = saved - h
        minus = loss_fn()
        mlp.params[j] = saved
        grads[j] = (plus - minus) / (2.0 * h)
    return grads


def assert_grads_close(analytic, numeric, rel_tol=1e-4, floor=1e-8):
    """Relative comparison on every component that is not vanishingly small."""
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    mask = scale > floor
    err = np.abs(analytic - numeric)
    assert np.all(err[mask] <= rel_tol * scale[mask]), (
        f"max relative gradient error "
        f"{np.max(err[mask] / scale[mask]) if mask.any() else 0.0}"
    )

"""Weight initialization schemes."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from .layers import BatchNorm, Conv2D, Dense

__all__ = ["xavier_uniform", "he_normal", "init_layer", "init_network"]


def xavier_uniform(shape, fan_in: int, fan_out: int, rng) -> np.ndarray:
    """Uniform in +-sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def he_normal(shape, fan_in: int, rng) -> np.ndarray:
    """Zero-mean normal with std sqrt(2 / fan_in)."""
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def _fans(layer) -> tuple[int, int]:
    if isinstance(layer, Conv2D):
        rf = layer.kh * layer.kw
        return layer.in_channels * rf, layer.out_channels * rf
    if isinstance(layer, Dense):
        return layer.in_features, layer.out_features
    raise ParameterError(f"no fan convention for {type(layer).__name__}")


def init_layer(layer, scheme: str, rng) -> None:
    """Fill one layer's parameters in place; biases are zeroed."""
    if isinstance(layer, BatchNorm):
        layer.gamma[...] = 1.0
        layer.beta[...] = 0.0
        layer.running_mean[...] = 0.0
        layer.running_var[...] = 1.0
        return
    if not isinstance(layer, (Conv2D, Dense)):
        return
    fan_in, fan_out = _fans(layer)
    if scheme == "xavier":
        w = xavier_uniform(layer.weight.shape, fan_in, fan_out, rng)
    elif scheme == "he":
        w = he_normal(layer.weight.shape, fan_in, rng)
    else:
        raise ParameterError(f"unknown init scheme {scheme!r}; use 'xavier' or 'he'")
    layer.weight[...] = w.astype(layer.dtype)
    layer.bias[...] = 0.0


def init_network(network, scheme: str = "xavier", seed: int | None = 0, rng=None) -> None:
    """Initialize every parameterized layer; deterministic for a given seed."""
    if rng is None:
        rng = np.random.default_rng(seed)
    for layer in network.layers:
        init_layer(layer, scheme, rng)

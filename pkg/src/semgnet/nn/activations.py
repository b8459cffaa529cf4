"""Elementwise activations with exact derivatives."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError

__all__ = [
    "Activation",
    "Elu",
    "Relu",
    "LeakyRelu",
    "Sigmoid",
    "Identity",
    "activation_from_name",
]


class Activation:
    """Base: apply(x) -> y and derivative(x, y) -> dy/dx, both elementwise."""

    name = "base"

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def config(self) -> float:
        # single scalar hyperparameter, 0.0 when the kind has none
        return 0.0

    def __repr__(self):
        return f"{type(self).__name__}()"


class Identity(Activation):
    name = "identity"

    def apply(self, x):
        return x

    def derivative(self, x, y):
        return np.ones_like(x)


class Relu(Activation):
    name = "relu"

    def apply(self, x):
        return np.maximum(x, 0.0)

    def derivative(self, x, y):
        return (x > 0.0).astype(x.dtype)


class LeakyRelu(Activation):
    name = "leaky_relu"

    def __init__(self, slope: float = 0.01):
        if not 0.0 < slope < 1.0:
            raise ParameterError(f"leaky slope must be in (0, 1), got {slope}")
        self.slope = float(slope)

    def apply(self, x):
        return np.where(x >= 0.0, x, x.dtype.type(self.slope) * x)

    def derivative(self, x, y):
        return np.where(x >= 0.0, x.dtype.type(1.0), x.dtype.type(self.slope))

    def config(self):
        return self.slope

    def __repr__(self):
        return f"LeakyRelu(slope={self.slope})"


class Elu(Activation):
    """x for x >= 0, alpha*(exp(x) - 1) below."""

    name = "elu"

    def __init__(self, alpha: float = 1.0):
        if alpha <= 0.0:
            raise ParameterError(f"elu alpha must be positive, got {alpha}")
        self.alpha = float(alpha)

    def apply(self, x):
        a = x.dtype.type(self.alpha)
        # expm1 only on the negative side to avoid overflow for large x
        return np.where(x >= 0.0, x, a * np.expm1(np.minimum(x, 0.0)))

    def derivative(self, x, y):
        a = x.dtype.type(self.alpha)
        return np.where(x >= 0.0, x.dtype.type(1.0), a * np.exp(np.minimum(x, 0.0)))

    def config(self):
        return self.alpha

    def __repr__(self):
        return f"Elu(alpha={self.alpha})"


class Sigmoid(Activation):
    name = "sigmoid"

    def apply(self, x):
        out = np.empty_like(x)
        pos = x >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out

    def derivative(self, x, y):
        return y * (1.0 - y)


_KINDS = {
    "identity": Identity,
    "relu": Relu,
    "leaky_relu": LeakyRelu,
    "elu": Elu,
    "sigmoid": Sigmoid,
}


def activation_from_name(name: str, param: float | None = None) -> Activation:
    """Build an activation by name; param feeds alpha/slope where applicable."""
    key = name.lower().replace("-", "_")
    if key not in _KINDS:
        raise ParameterError(
            f"unknown activation {name!r}; expected one of {sorted(_KINDS)}"
        )
    cls = _KINDS[key]
    if param is None or cls in (Identity, Relu, Sigmoid):
        return cls()
    return cls(param)

"""Layer container wiring forward, backward, and the classifier head."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .losses import SoftmaxCrossEntropy, predict, softmax

__all__ = ["Network"]


class Network:
    """An ordered layer stack ending in logits; softmax lives in the head.

    The same instance handles training (mode='train', rng for dropout)
    and evaluation. Parameters and gradients are exposed as flat lists in
    layer order for the optimizer.
    """

    def __init__(self, layers: list, name: str = ""):
        self.layers = list(layers)
        self.name = name
        self.head = SoftmaxCrossEntropy()

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def forward(self, x: np.ndarray, mode: str = "train", rng=None) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, mode=mode, rng=rng)
        if x.ndim != 2:
            raise ShapeError(
                f"network must end in (N, G) scores, got shape {x.shape}"
            )
        return x

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            upstream = layer.backward(upstream)
        return upstream

    def loss(self, x: np.ndarray, labels, mode: str = "train", rng=None) -> float:
        """Forward plus head loss; backward() afterwards propagates it."""
        logits = self.forward(x, mode=mode, rng=rng)
        value, _ = self.head.forward(logits, labels)
        self._head_ready = True
        return value

    def loss_backward(self) -> np.ndarray:
        return self.backward(self.head.backward())

    def predict(self, x: np.ndarray, batch_size: int = 1024) -> np.ndarray:
        """Eval-mode 1-based class labels, in fixed-size slices to bound memory."""
        out = []
        for start in range(0, x.shape[0], batch_size):
            logits = self.forward(x[start:start + batch_size], mode="eval")
            out.append(predict(softmax(logits)))
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)

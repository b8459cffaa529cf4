"""Adam optimizer and the validation-loss early-stopping rule."""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ParameterError

__all__ = ["Adam", "EarlyStopping"]


class Adam:
    """Adam with bias correction, updating parameter arrays in place.

    Per step: m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2;
    theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
    """

    def __init__(self, params: list, learning_rate: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if learning_rate <= 0.0:
            raise ParameterError(f"learning rate must be positive, got {learning_rate}")
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ParameterError(f"betas must be in [0, 1), got {beta1}, {beta2}")
        if eps <= 0.0:
            raise ParameterError(f"eps must be positive, got {eps}")
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads: list) -> None:
        if len(grads) != len(self.params):
            raise ParameterError(
                f"{len(self.params)} parameter arrays but {len(grads)} gradients"
            )
        for i, (p, g) in enumerate(zip(self.params, grads)):
            if g.shape != p.shape:
                raise ParameterError(
                    f"gradient {i} shape {g.shape} does not match "
                    f"parameter shape {p.shape}"
                )
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in parameter array {i}")
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            mhat = m / p.dtype.type(b1t)
            vhat = v / p.dtype.type(b2t)
            p -= p.dtype.type(self.learning_rate) * mhat / (np.sqrt(vhat) + p.dtype.type(self.eps))


class EarlyStopping:
    """Stop when validation loss fails to strictly improve for `patience`
    consecutive epochs, or when the epoch cap is reached."""

    def __init__(self, patience: int = 5, max_epochs: int = 100):
        if patience < 1:
            raise ParameterError(f"patience must be >= 1, got {patience}")
        if max_epochs < 1:
            raise ParameterError(f"max_epochs must be >= 1, got {max_epochs}")
        self.patience = int(patience)
        self.max_epochs = int(max_epochs)
        self.best_loss = np.inf
        self.epochs_since_improvement = 0
        self.epoch = 0

    def update(self, validation_loss: float) -> bool:
        """Record one epoch's validation loss; True means stop now."""
        if not np.isfinite(validation_loss):
            raise NumericError(f"non-finite validation loss {validation_loss}")
        self.epoch += 1
        if validation_loss < self.best_loss:
            self.best_loss = float(validation_loss)
            self.epochs_since_improvement = 0
        else:
            self.epochs_since_improvement += 1
        if self.epochs_since_improvement >= self.patience:
            return True
        return self.epoch >= self.max_epochs

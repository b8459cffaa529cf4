"""Softmax, cross-entropy, and the fused classification head.

Class labels are 1-based (gestures 1..G) throughout the public API;
probability columns are label order, so column j holds class j+1.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError, ShapeError

__all__ = ["softmax", "cross_entropy", "predict", "SoftmaxCrossEntropy"]

PROB_FLOOR = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    z = np.asarray(logits)
    if z.ndim == 1:
        z = z[None]
        squeeze = True
    else:
        squeeze = False
    if z.ndim != 2:
        raise ShapeError(f"softmax expects (N, G) logits, got shape {z.shape}")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)
    return out[0] if squeeze else out


def _check_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim == 0:
        labels = labels[None]
    if not np.issubdtype(labels.dtype, np.integer):
        raise ParameterError(f"labels must be integers, got dtype {labels.dtype}")
    if labels.min(initial=1) < 1 or labels.max(initial=n_classes) > n_classes:
        bad = labels[(labels < 1) | (labels > n_classes)][0]
        raise ParameterError(f"label {bad} outside 1..{n_classes}")
    return labels


def cross_entropy(probabilities: np.ndarray, labels) -> float:
    """Mean negative log-probability of the true classes (labels 1..G).

    True-class probabilities are floored at 1e-12 before the log.
    """
    p = np.asarray(probabilities)
    if p.ndim == 1:
        p = p[None]
    labels = _check_labels(labels, p.shape[1])
    true_p = p[np.arange(p.shape[0]), labels - 1]
    return float(-np.log(np.maximum(true_p, PROB_FLOOR)).mean())


def predict(probabilities: np.ndarray) -> np.ndarray:
    """Most probable class per row, 1-based; ties go to the lowest label."""
    p = np.asarray(probabilities)
    if p.ndim == 1:
        return int(np.argmax(p)) + 1
    return np.argmax(p, axis=1) + 1


class SoftmaxCrossEntropy:
    """Fused head: loss forward caches probabilities, backward emits the
    mean-loss logit gradient (probabilities minus one-hot targets)/N."""

    def __init__(self):
        self._cache = None

    def forward(self, logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
        z = np.asarray(logits)
        if z.ndim != 2:
            raise ShapeError(f"expected (N, G) logits, got shape {z.shape}")
        labels = _check_labels(labels, z.shape[1])
        if labels.shape[0] != z.shape[0]:
            raise ShapeError(
                f"{z.shape[0]} logit rows but {labels.shape[0]} labels"
            )
        probs = softmax(z)
        loss = cross_entropy(probs, labels)
        self._cache = (probs, labels, z.dtype)
        return loss, probs

    def backward(self) -> np.ndarray:
        probs, labels, dtype = self._cache
        n = probs.shape[0]
        grad = probs.astype(dtype, copy=True)
        grad[np.arange(n), labels - 1] -= 1.0
        grad /= n
        return grad

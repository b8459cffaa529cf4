"""From-scratch neural network core: layers, losses, init, checkpointing."""

from .activations import (
    Activation,
    Elu,
    Identity,
    LeakyRelu,
    Relu,
    Sigmoid,
    activation_from_name,
)
from .checkpoint import load_network, save_network
from .init import he_normal, init_network, xavier_uniform
from .layers import (
    ActivationLayer,
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    GlobalAvgPool,
    Pool2D,
)
from .losses import SoftmaxCrossEntropy, cross_entropy, predict, softmax
from .network import Network

__all__ = [
    "Activation",
    "ActivationLayer",
    "BatchNorm",
    "Conv2D",
    "Dense",
    "Dropout",
    "Elu",
    "Flatten",
    "GlobalAvgPool",
    "Identity",
    "LeakyRelu",
    "Network",
    "Pool2D",
    "Relu",
    "Sigmoid",
    "SoftmaxCrossEntropy",
    "activation_from_name",
    "cross_entropy",
    "he_normal",
    "init_network",
    "load_network",
    "predict",
    "save_network",
    "softmax",
    "xavier_uniform",
]

"""Gesture recognition from instantaneous muscle-activity images.

A from-scratch stack: band-stop signal conditioning, voltage-to-image
conversion, numpy-only convolutional networks with hand-derived
backpropagation, Adam, and a leave-one-trial-out evaluation harness.
"""

from . import cvharness, dataio, dsp, imaging, models, nn, optim, reporting
from .errors import (
    ConfigError,
    DataError,
    FormatError,
    NumericError,
    ParameterError,
    SemgNetError,
    ShapeError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FormatError",
    "NumericError",
    "ParameterError",
    "SemgNetError",
    "ShapeError",
    "__version__",
    "cvharness",
    "dataio",
    "dsp",
    "imaging",
    "models",
    "nn",
    "optim",
    "reporting",
]

"""Declarative builders for the five gesture-recognition networks.

Three small image classifiers (A, B, C) flatten their last feature map
into a 256-unit hidden layer; C exists in a stride-2 and a stride-1
variant.  A fifth network (AllConv) has no dense layers at all: a 1x1
convolution and a full-field convolution produce per-class scores that
are averaged over the remaining spatial extent.

All five expect single-channel inputs, 16x8 for the dense-headed models
and 16x16 (column-padded) for AllConv.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .nn import (
    ActivationLayer,
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    GlobalAvgPool,
    Network,
    Pool2D,
    activation_from_name,
    init_network,
)

MODEL_NAMES = ("A", "B", "C-s2", "C-s1", "AllConv")

# Approximate totals, in millions, that these architectures are usually
# described with.  The exact counts from param_count differ for some of
# them; reporting surfaces both side by side.
NOMINAL_MILLIONS = {
    "A": 2.09,
    "B": 2.12,
    "C-s2": 0.14,
    "C-s1": 2.10,
    "AllConv": 0.008,
}

# (out_channels, square kernel, stride) per convolution stage
_STAGES = {
    "A": ((32, 3, 1), (64, 3, 1), (64, 3, 1)),
    "B": ((32, 3, 1), (32, 1, 1), (64, 3, 1), (64, 1, 1)),
    "C-s2": ((32, 3, 1), (32, 3, 1), (32, 3, 2),
             (64, 3, 1), (64, 3, 1), (64, 3, 2)),
    "AllConv": ((64, 3, 1), (64, 3, 1), (64, 3, 2),
                (128, 3, 1), (128, 3, 1), (128, 3, 2),
                (128, 1, 1)),
}
_STAGES["C-s1"] = tuple((c, k, 1) for c, k, _ in _STAGES["C-s2"])

_HIDDEN_UNITS = 256
_DEFAULT_DROPOUT = {"A": 0.35, "B": 0.35, "C-s2": 0.35, "C-s1": 0.35,
                    "AllConv": 0.25}


@dataclass(frozen=True)
class LayerSpec:
    """One parameterized stage: a convolution or a dense layer."""

    kind: str                       # "conv" | "dense"
    out_channels: int
    kernel: tuple[int, int] | None = None
    stride: int = 1
    padding: str = "same"
    classifier: bool = False        # final stage: raw scores, no dropout

    def label(self) -> str:
        if self.kind == "dense":
            return f"dense-{self.out_channels}"
        kh, kw = self.kernel
        tail = f"-s{self.stride}" if self.stride != 1 else ""
        return f"conv{kh}x{kw}-{self.out_channels}{tail}"


@dataclass(frozen=True)
class ModelSpec:
    name: str
    input_shape: tuple[int, int, int]   # (channels, height, width)
    stages: tuple[LayerSpec, ...]
    class_count: int
    batchnorm: bool
    dropout_p: float


@dataclass(frozen=True)
class ParamCount:
    per_layer: tuple[tuple[str, int], ...]
    total: int
    includes_batchnorm: bool


def default_dropout(name: str) -> float:
    """The architecture's standard dropout probability."""
    return _DEFAULT_DROPOUT[canonical_name(name)]


def canonical_name(name: str) -> str:
    """Map user-facing spellings onto the five canonical model names."""
    key = str(name).strip().lower().replace("_", "-")
    for known in MODEL_NAMES:
        if key == known.lower():
            return known
    if key in ("c", "c2"):
        return "C-s2"
    if key in ("allconvnet", "all-conv", "all-convnet"):
        return "AllConv"
    raise ParameterError(
        f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}"
    )


def model_spec(name: str, class_count: int = 8, batchnorm: bool = True,
               dropout_p: float | None = None) -> ModelSpec:
    """Resolve a model name to its full declarative description."""
    name = canonical_name(name)
    if class_count < 2:
        raise ParameterError(f"class_count must be >= 2, got {class_count}")
    if dropout_p is None:
        dropout_p = _DEFAULT_DROPOUT[name]
    if not 0.0 <= dropout_p < 1.0:
        raise ParameterError(f"dropout_p must be in [0, 1), got {dropout_p}")

    input_shape = (1, 16, 16) if name == "AllConv" else (1, 16, 8)
    stages = [LayerSpec("conv", c, (k, k), s) for c, k, s in _STAGES[name]]
    if name == "AllConv":
        h, w = _spatial_walk(input_shape[1:], stages, pooling="none")
        stages.append(LayerSpec("conv", class_count, (h, w),
                                padding="valid", classifier=True))
    else:
        stages.append(LayerSpec("dense", _HIDDEN_UNITS))
        stages.append(LayerSpec("dense", class_count, classifier=True))
    return ModelSpec(name, input_shape, tuple(stages), class_count,
                     batchnorm, dropout_p)


def _spatial_walk(hw: tuple[int, int], stages, pooling: str) -> tuple[int, int]:
    """Trace the feature-map extent through the convolution stages."""
    h, w = hw
    for i, st in enumerate(stages):
        if st.kind != "conv":
            break
        if st.padding == "same":
            h = -(-h // st.stride)
            w = -(-w // st.stride)
        else:
            h = (h - st.kernel[0]) // st.stride + 1
            w = (w - st.kernel[1]) // st.stride + 1
        if i == 0 and pooling != "none":
            h //= 2
            w //= 2
        if h < 1 or w < 1:
            raise ParameterError(
                f"stage {st.label()} reduces the feature map below 1x1"
            )
    return h, w


def build(name: str, class_count: int = 8, batchnorm: bool = True,
          dropout_p: float | None = None, activation: str = "elu",
          pooling: str = "none", init_scheme: str = "xavier",
          seed: int = 0, dtype=np.float32) -> Network:
    """Assemble a ready-to-train network.

    Batch normalization, when enabled, sits after the input and before
    each non-linearity.  Dropout follows every activation; the final
    classifier stage emits raw scores and gets neither.  The optional
    2x2 pool runs after the first convolution stage only.
    """
    if pooling not in ("none", "max", "avg"):
        raise ParameterError(f"pooling must be none, max or avg, got {pooling!r}")
    spec = model_spec(name, class_count, batchnorm, dropout_p)
    act = activation_from_name(activation)

    layers = []
    if spec.batchnorm:
        layers.append(BatchNorm(spec.input_shape[0], dtype=dtype))

    channels = spec.input_shape[0]
    h, w = spec.input_shape[1:]
    flattened = False
    for i, st in enumerate(spec.stages):
        if st.kind == "conv":
            layers.append(Conv2D(channels, st.out_channels, st.kernel,
                                 stride=st.stride, padding=st.padding,
                                 dtype=dtype))
            channels = st.out_channels
            if st.padding == "same":
                h = -(-h // st.stride)
                w = -(-w // st.stride)
            else:
                h = (h - st.kernel[0]) // st.stride + 1
                w = (w - st.kernel[1]) // st.stride + 1
        else:
            if not flattened:
                layers.append(Flatten())
                channels = channels * h * w
                flattened = True
            layers.append(Dense(channels, st.out_channels, dtype=dtype))
            channels = st.out_channels
        if st.classifier and st.kind == "dense":
            break  # raw scores straight into the softmax head
        if spec.batchnorm:
            layers.append(BatchNorm(st.out_channels, dtype=dtype))
        layers.append(ActivationLayer(act))
        if i == 0 and pooling != "none":
            layers.append(Pool2D(pooling, 2))
            h //= 2
            w //= 2
        if st.classifier:
            layers.append(GlobalAvgPool())
            break
        if spec.dropout_p > 0.0:
            layers.append(Dropout(spec.dropout_p))

    net = Network(layers, name=spec.name)
    init_network(net, scheme=init_scheme, seed=seed)
    return net


def param_count(spec, class_count: int = 8,
                include_batchnorm: bool = False) -> ParamCount:
    """Exact trainable-parameter counts, layer by layer.

    Accepts a ModelSpec or a model name.  Convolutions count
    kh*kw*in*out + out, dense layers in*out + out, and each batch-norm
    two per channel (scale and shift); the latter only when asked for.
    """
    if not isinstance(spec, ModelSpec):
        spec = model_spec(spec, class_count)
    rows = []
    if include_batchnorm and spec.batchnorm:
        rows.append(("batchnorm-input", 2 * spec.input_shape[0]))
    channels = spec.input_shape[0]
    h, w = spec.input_shape[1:]
    flattened = False
    for st in spec.stages:
        if st.kind == "conv":
            kh, kw = st.kernel
            rows.append((st.label(), kh * kw * channels * st.out_channels
                         + st.out_channels))
            channels = st.out_channels
            if st.padding == "same":
                h = -(-h // st.stride)
                w = -(-w // st.stride)
            else:
                h = (h - kh) // st.stride + 1
                w = (w - kw) // st.stride + 1
        else:
            if not flattened:
                channels = channels * h * w
                flattened = True
            rows.append((st.label(), channels * st.out_channels
                         + st.out_channels))
            channels = st.out_channels
        if include_batchnorm and spec.batchnorm and not (
                st.classifier and st.kind == "dense"):
            rows.append((f"batchnorm-{st.label()}", 2 * st.out_channels))
    total = sum(n for _, n in rows)
    return ParamCount(tuple(rows), total,
                      include_batchnorm and spec.batchnorm)

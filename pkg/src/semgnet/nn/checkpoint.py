"""Binary network checkpoints.

Layout (all integers little-endian unsigned 32-bit, floats little-endian
32-bit):

    magic "SCNN" | version | name_len | name (utf-8) | layer_count
    per layer:
        tag (4 ascii bytes) | n_meta | meta ints | n_floats | floats

The meta integers carry the layer's structure; the float block carries
scalar hyperparameters first, then parameter arrays in declaration
order:

    CONV: meta [out_c, in_c, kh, kw, stride, pad(0 valid/1 same), act]
          floats [act_param, weight.., bias..]
    DENS: meta [out, in, act]          floats [act_param, weight.., bias..]
    BNRM: meta [features]              floats [momentum, eps, gamma..,
                                               beta.., run_mean.., run_var..]
    DROP: meta []                      floats [p]
    POOL: meta [kind, window, stride, magnitude]  floats [p]
    ACTV: meta [act]                   floats [act_param]
    FLAT, GAVG: meta []                floats []
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError
from .activations import Elu, Identity, LeakyRelu, Relu, Sigmoid
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
from .network import Network

__all__ = ["save_network", "load_network", "MAGIC", "VERSION"]

MAGIC = b"SCNN"
VERSION = 1

_U32 = struct.Struct("<I")

_ACT_CODES = {"identity": 0, "relu": 1, "leaky_relu": 2, "elu": 3, "sigmoid": 4}
_ACT_BUILDERS = {
    0: lambda p: Identity(),
    1: lambda p: Relu(),
    2: lambda p: LeakyRelu(p),
    3: lambda p: Elu(p),
    4: lambda p: Sigmoid(),
}
_POOL_CODES = {"max": 0, "avg": 1, "lp": 2}
_POOL_NAMES = {v: k for k, v in _POOL_CODES.items()}


def _encode_layer(layer) -> tuple[bytes, list[int], list[np.ndarray]]:
    if isinstance(layer, Conv2D):
        meta = [layer.out_channels, layer.in_channels, layer.kh, layer.kw,
                layer.stride, 1 if layer.padding == "same" else 0,
                _ACT_CODES[layer.activation.name]]
        floats = [np.float32(layer.activation.config()),
                  layer.weight.ravel(), layer.bias]
    elif isinstance(layer, Dense):
        meta = [layer.out_features, layer.in_features,
                _ACT_CODES[layer.activation.name]]
        floats = [np.float32(layer.activation.config()),
                  layer.weight.ravel(), layer.bias]
    elif isinstance(layer, BatchNorm):
        meta = [layer.num_features]
        floats = [np.float32(layer.momentum), np.float32(layer.eps),
                  layer.gamma, layer.beta, layer.running_mean, layer.running_var]
    elif isinstance(layer, Dropout):
        meta = []
        floats = [np.float32(layer.p)]
    elif isinstance(layer, Pool2D):
        meta = [_POOL_CODES[layer.kind], layer.window, layer.stride,
                int(layer.magnitude)]
        floats = [np.float32(layer.p)]
    elif isinstance(layer, ActivationLayer):
        meta = [_ACT_CODES[layer.activation.name]]
        floats = [np.float32(layer.activation.config())]
    elif isinstance(layer, Flatten):
        meta, floats = [], []
    elif isinstance(layer, GlobalAvgPool):
        meta, floats = [], []
    else:
        raise FormatError(f"cannot checkpoint layer type {type(layer).__name__}")
    return layer.tag.encode("ascii"), meta, floats


def save_network(network: Network, path) -> None:
    """Write the network's structure and parameters to the given path."""
    name = network.name.encode("utf-8")
    chunks = [MAGIC, _U32.pack(VERSION), _U32.pack(len(name)), name,
              _U32.pack(len(network.layers))]
    for layer in network.layers:
        tag, meta, floats = _encode_layer(layer)
        flat = (np.concatenate([np.asarray(f, dtype="<f4").ravel() for f in floats])
                if floats else np.empty(0, dtype="<f4"))
        chunks.append(tag)
        chunks.append(_U32.pack(len(meta)))
        chunks.extend(_U32.pack(m) for m in meta)
        chunks.append(_U32.pack(flat.size))
        chunks.append(flat.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"checkpoint truncated at byte {len(self.data)}: "
                f"needed {self.pos + n} bytes"
            )
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def f32s(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * n), dtype="<f4").copy()


def _decode_layer(tag: str, meta: list[int], floats: np.ndarray, dtype):
    def act(code, param):
        return _ACT_BUILDERS[code](float(param))

    if tag == "CONV":
        m, n, kh, kw, stride, pad, act_code = meta
        layer = Conv2D(n, m, (kh, kw), stride=stride,
                       padding="same" if pad else "valid",
                       activation=act(act_code, floats[0]), dtype=dtype)
        wsize = m * n * kh * kw
        layer.weight[...] = floats[1:1 + wsize].reshape(m, n, kh, kw)
        layer.bias[...] = floats[1 + wsize:1 + wsize + m]
        return layer
    if tag == "DENS":
        out, inp, act_code = meta
        layer = Dense(inp, out, activation=act(act_code, floats[0]), dtype=dtype)
        wsize = out * inp
        layer.weight[...] = floats[1:1 + wsize].reshape(out, inp)
        layer.bias[...] = floats[1 + wsize:1 + wsize + out]
        return layer
    if tag == "BNRM":
        (c,) = meta
        layer = BatchNorm(c, momentum=float(floats[0]), eps=float(floats[1]),
                          dtype=dtype)
        layer.gamma[...] = floats[2:2 + c]
        layer.beta[...] = floats[2 + c:2 + 2 * c]
        layer.running_mean[...] = floats[2 + 2 * c:2 + 3 * c]
        layer.running_var[...] = floats[2 + 3 * c:2 + 4 * c]
        return layer
    if tag == "DROP":
        return Dropout(float(floats[0]))
    if tag == "POOL":
        kind, window, stride, magnitude = meta
        return Pool2D(_POOL_NAMES[kind], window=window, stride=stride,
                      p=float(floats[0]), magnitude=bool(magnitude))
    if tag == "ACTV":
        return ActivationLayer(act(meta[0], floats[0]))
    if tag == "FLAT":
        return Flatten()
    if tag == "GAVG":
        return GlobalAvgPool()
    raise FormatError(f"unknown layer tag {tag!r}")


def load_network(path, dtype=np.float32) -> Network:
    """Rebuild a network from a checkpoint written by save_network."""
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    magic = reader.take(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r} at byte 0; expected {MAGIC!r}")
    version = reader.u32()
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version} at byte 4")
    name = reader.take(reader.u32()).decode("utf-8")
    count = reader.u32()
    layers = []
    for _ in range(count):
        tag = reader.take(4).decode("ascii", errors="replace")
        meta = [reader.u32() for _ in range(reader.u32())]
        floats = reader.f32s(reader.u32())
        layers.append(_decode_layer(tag, meta, floats, dtype))
    if reader.pos != len(reader.data):
        raise FormatError(
            f"{len(reader.data) - reader.pos} trailing bytes "
            f"at byte {reader.pos}"
        )
    return Network(layers, name=name)

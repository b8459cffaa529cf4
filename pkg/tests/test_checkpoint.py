"""Binary checkpoint save/load round trips and corruption handling."""

import struct

import numpy as np
import pytest

from semgnet.errors import FormatError
from semgnet.nn import (
    ActivationLayer,
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    Elu,
    Flatten,
    GlobalAvgPool,
    Network,
    Pool2D,
    Relu,
    init_network,
    load_network,
    save_network,
)


def small_network():
    net = Network(
        [
            BatchNorm(1),
            Conv2D(1, 4, 3, activation=Elu(0.7)),
            BatchNorm(4),
            ActivationLayer(Relu()),
            Pool2D("lp", 2, p=3.0, magnitude=True),
            Dropout(0.35),
            Conv2D(4, 6, 1, stride=2),
            Flatten(),
            Dense(6 * 2 * 2, 5, activation=Elu()),
            GlobalAvgPool() if False else Dropout(0.25),
            Dense(5, 3),
        ],
        name="round-trip",
    )
    init_network(net, seed=7)
    # make running stats non-trivial so the round trip covers them
    rng = np.random.default_rng(3)
    x = rng.standard_normal((8, 1, 8, 8)).astype(np.float32)
    net.forward(x, mode="train", rng=rng)
    return net


def test_round_trip_preserves_structure_and_params(tmp_path):
    net = small_network()
    path = tmp_path / "model.ckpt"
    save_network(net, path)
    loaded = load_network(path)

    assert len(loaded.layers) == len(net.layers)
    for a, b in zip(net.layers, loaded.layers):
        assert type(a) is type(b)
    for pa, pb in zip(net.params(), loaded.params()):
        assert pa.dtype == pb.dtype
        assert np.array_equal(pa, pb)


def test_round_trip_preserves_forward_pass(tmp_path):
    net = small_network()
    path = tmp_path / "model.ckpt"
    save_network(net, path)
    loaded = load_network(path)

    x = np.random.default_rng(11).standard_normal((4, 1, 8, 8)).astype(np.float32)
    ya = net.forward(x, mode="eval")
    yb = loaded.forward(x, mode="eval")
    assert np.array_equal(ya, yb)


def test_round_trip_preserves_hyperparameters(tmp_path):
    net = small_network()
    path = tmp_path / "model.ckpt"
    save_network(net, path)
    loaded = load_network(path)

    conv = loaded.layers[1]
    assert conv.stride == 1
    assert conv.padding == "same"
    assert conv.activation.name == "elu"
    assert conv.activation.alpha == pytest.approx(0.7)

    bn = loaded.layers[2]
    assert bn.momentum == pytest.approx(0.9)
    assert bn.eps == pytest.approx(1e-5)
    assert np.any(bn.running_mean != 0.0)

    pool = loaded.layers[4]
    assert pool.kind == "lp"
    assert pool.p == pytest.approx(3.0)
    assert pool.magnitude is True

    assert loaded.layers[5].p == pytest.approx(0.35)
    assert loaded.name == "round-trip"


def test_running_stats_survive_float32_stream(tmp_path):
    # running stats are held in float64 but serialized as float32
    net = Network([BatchNorm(2), Flatten(), Dense(2 * 4 * 4, 3)])
    init_network(net, seed=0)
    net.layers[0].running_mean[:] = [1.25, -0.5]
    net.layers[0].running_var[:] = [4.0, 0.0625]
    path = tmp_path / "bn.ckpt"
    save_network(net, path)
    loaded = load_network(path)
    assert np.array_equal(loaded.layers[0].running_mean, [1.25, -0.5])
    assert np.array_equal(loaded.layers[0].running_var, [4.0, 0.0625])


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"XXXX" + b"\x00" * 64)
    with pytest.raises(FormatError, match="magic"):
        load_network(path)


def test_unsupported_version_rejected(tmp_path):
    net = Network([Flatten(), Dense(4, 2)])
    init_network(net, seed=0)
    path = tmp_path / "v.ckpt"
    save_network(net, path)
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="version"):
        load_network(path)


def test_truncation_names_byte_offset(tmp_path):
    net = small_network()
    path = tmp_path / "full.ckpt"
    save_network(net, path)
    raw = path.read_bytes()

    cut = tmp_path / "cut.ckpt"
    for frac in (0.3, 0.7, 0.95):
        cut.write_bytes(raw[: int(len(raw) * frac)])
        with pytest.raises(FormatError, match=r"byte \d+"):
            load_network(cut)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.ckpt"
    path.write_bytes(b"")
    with pytest.raises(FormatError):
        load_network(path)


def test_trailing_garbage_rejected(tmp_path):
    net = Network([Flatten(), Dense(4, 2)])
    init_network(net, seed=0)
    path = tmp_path / "extra.ckpt"
    save_network(net, path)
    path.write_bytes(path.read_bytes() + b"\x00\x01\x02")
    with pytest.raises(FormatError, match="trailing"):
        load_network(path)


def test_params_stored_as_float32(tmp_path):
    net = Network([Flatten(), Dense(4, 2)])
    init_network(net, seed=5)
    # perturb with a value that is not float32-representable
    net.layers[1].weight[0, 0] = np.float32(0.1)
    path = tmp_path / "f32.ckpt"
    save_network(net, path)
    loaded = load_network(path)
    assert loaded.layers[1].weight.dtype == np.float32
    assert loaded.layers[1].weight[0, 0] == np.float32(0.1)

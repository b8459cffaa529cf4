"""Check analytic backpropagation against finite differences by hand.

Builds a small convolutional classifier in double precision, picks the
strongest gradient coordinate of each parameter tensor, and compares the
analytic value with a central difference of the loss.
"""

import numpy as np

from semgnet.nn.activations import Elu
from semgnet.nn.layers import BatchNorm, Conv2D, Dense, Flatten
from semgnet.nn.network import Network


def main():
    rng = np.random.default_rng(7)
    net = Network([
        Conv2D(1, 4, 3, dtype=np.float64),
        BatchNorm(4, dtype=np.float64),
        Conv2D(4, 4, 3, stride=2, dtype=np.float64),
        Flatten(),
        Dense(4 * 4 * 4, 16, activation=Elu(1.0), dtype=np.float64),
        Dense(16, 3, dtype=np.float64),
    ], name="gradient-probe")
    for p in net.params():
        p[...] = 0.1 * rng.standard_normal(p.shape)

    x = rng.standard_normal((4, 1, 8, 8))
    labels = rng.integers(1, 4, size=4)
    loss = net.loss(x, labels, mode="train")
    net.loss_backward()
    print(f"loss on random batch: {loss:.6f}")
    print(f"{'tensor':>8s} {'analytic':>15s} {'numeric':>15s} {'rel err':>10s}")

    h = 1e-6
    for idx, (p, g) in enumerate(zip(net.params(), net.grads())):
        flat, ana = p.ravel(), g.ravel()
        i = int(np.argmax(np.abs(ana)))
        orig = flat[i]
        flat[i] = orig + h
        fp = net.loss(x, labels, mode="train")
        flat[i] = orig - h
        fm = net.loss(x, labels, mode="train")
        flat[i] = orig
        numeric = (fp - fm) / (2 * h)
        rel = abs(numeric - ana[i]) / max(1e-12, abs(numeric) + abs(ana[i]))
        print(f"  p[{idx:2d}]  {ana[i]:15.9f} {numeric:15.9f} {rel:10.2e}")


if __name__ == "__main__":
    main()

"""Width-scaled architecture families.

Three families, each swept over a width factor z:

  fc-relu : 784 -> z -> 8z -> 10, ReLU after each hidden layer.
  cnn     : conv(1->z, 3x3, stride 2, valid) -> ReLU ->
            conv(z->2z, 3x3, stride 2, valid) -> ReLU -> flatten -> linear(10).
  resnet  : stem conv(3->k, 3x3, stride 1, pad 1), three stages of two
            residual blocks at widths (k, 2k, 4k) where k = round(2^(2+z/2)),
            stride-2 + 1x1-projection entry into stages 2-3, global average
            pool, linear(10). No normalization layers: the stack stays a
            plain smooth map and the counts stay at the reference magnitudes.

Weights and biases are initialized uniform in +/- sqrt(1/fan_in), drawn from
the seeded Philox stream in construction order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Conv2d, Flatten, GlobalAvgPool, Linear, Network, ReLU, Residual
from .rng import master_rng

CANONICAL_WIDTHS = {
    "cnn": (1, 2, 4, 6, 8, 10, 15, 20, 25, 30),
    "fc-relu": (4, 6, 8, 10, 15, 20, 25, 30, 35, 40),
    "resnet": (1, 2, 3, 4, 5, 6, 7, 8, 9, 10),
}

FAMILIES = tuple(CANONICAL_WIDTHS)

INPUT_SHAPES = {
    "cnn": (1, 28, 28),
    "fc-relu": (1, 28, 28),
    "resnet": (3, 32, 32),
}

N_CLASSES = 10


@dataclass(frozen=True)
class ArchSpec:
    family: str
    width: int
    input_shape: tuple
    n_classes: int = N_CLASSES

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")

    @property
    def canonical(self):
        return self.width in CANONICAL_WIDTHS[self.family]


def resnet_channels(z):
    """Stem width k = 2^(2 + z/2), rounded half up."""
    return int(np.floor(2.0 ** (2.0 + z / 2.0) + 0.5))


class _Init:
    """Uniform +/- sqrt(1/fan_in) initializer with a sequential Philox stream."""

    def __init__(self, seed):
        self.rng = master_rng(seed)

    def draw(self, shape, fan_in):
        bound = np.sqrt(1.0 / fan_in)
        return self.rng.uniform(-bound, bound, size=shape).astype(np.float32)

    def linear(self, name, n_in, n_out):
        return Linear(name, self.draw((n_in, n_out), n_in), self.draw((n_out,), n_in))

    def conv(self, name, cin, cout, k, stride=1, padding=0):
        fan_in = cin * k * k
        return Conv2d(
            name,
            self.draw((cout, cin, k, k), fan_in),
            self.draw((cout,), fan_in),
            stride=stride,
            padding=padding,
        )


def build_fc_relu(z, seed=0):
    """Two hidden layers of z and 8z units on flattened 28x28 input."""
    if z < 1:
        raise ValueError(f"width must be >= 1, got {z}")
    init = _Init(seed)
    layers = [
        Flatten(),
        init.linear("fc1", 784, z),
        ReLU(),
        init.linear("fc2", z, 8 * z),
        ReLU(),
        init.linear("head", 8 * z, N_CLASSES),
    ]
    return Network(layers, INPUT_SHAPES["fc-relu"], N_CLASSES, arch={"family": "fc-relu", "width": z})


def build_cnn(z, seed=0):
    """Two stride-2 valid 3x3 conv layers of z and 2z filters, then a linear head."""
    if z < 1:
        raise ValueError(f"width must be >= 1, got {z}")
    init = _Init(seed)
    layers = [
        init.conv("conv1", 1, z, 3, stride=2),  # 28 -> 13
        ReLU(),
        init.conv("conv2", z, 2 * z, 3, stride=2),  # 13 -> 6
        ReLU(),
        Flatten(),
        init.linear("head", 2 * z * 6 * 6, N_CLASSES),
    ]
    return Network(layers, INPUT_SHAPES["cnn"], N_CLASSES, arch={"family": "cnn", "width": z})


def build_resnet(z, seed=0):
    """Stem conv plus six residual blocks at widths (k, 2k, 4k), k = round(2^(2+z/2))."""
    if z < 1:
        raise ValueError(f"width must be >= 1, got {z}")
    k = resnet_channels(z)
    init = _Init(seed)
    layers = [init.conv("stem", 3, k, 3, stride=1, padding=1), ReLU()]
    widths = (k, 2 * k, 4 * k)
    cin = k
    for si, cout in enumerate(widths, start=1):
        for bi in (1, 2):
            downsample = si > 1 and bi == 1
            stride = 2 if downsample else 1
            name = f"s{si}b{bi}"
            body = [
                init.conv(f"{name}.conv1", cin, cout, 3, stride=stride, padding=1),
                ReLU(),
                init.conv(f"{name}.conv2", cout, cout, 3, stride=1, padding=1),
            ]
            projection = init.conv(f"{name}.proj", cin, cout, 1, stride=stride) if downsample else None
            layers.append(Residual(body, projection))
            layers.append(ReLU())
            cin = cout
    layers.extend([GlobalAvgPool(), init.linear("head", 4 * k, N_CLASSES)])
    return Network(layers, INPUT_SHAPES["resnet"], N_CLASSES, arch={"family": "resnet", "width": z})


_BUILDERS = {"cnn": build_cnn, "fc-relu": build_fc_relu, "resnet": build_resnet}


def build_model(family, z, seed=0):
    if family not in _BUILDERS:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return _BUILDERS[family](z, seed=seed)


def param_count(model):
    """Total parameter scalars, biases included."""
    return model.param_count()

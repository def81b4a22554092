"""Constructors for the CNN and the ANN comparison model."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import DomainError
from .layers import BatchNorm, Conv2D, Dense, Flatten, MaxPool
from .model import Model

INPUT_SHAPE = (1, 28, 28)


@dataclass(frozen=True)
class CnnSpec:
    """Conv(3x3, same padding) + ReLU per entry of ``channels``, followed by a
    2x2 max-pool where the matching ``pool`` flag is set; batch norm after
    the last block, then flatten -> dense(hidden) -> dense(softmax).

    The default pools after the first three blocks (28 -> 14 -> 7 -> 3), so
    the final block keeps a 3x3 map and batch norm sees nine positions per
    sample instead of one.
    """

    channels: tuple = (8, 8, 16, 16)
    pool: tuple = (True, True, True, False)
    hidden: int = 64
    n_classes: int = 10
    input_shape: tuple = INPUT_SHAPE


@dataclass(frozen=True)
class AnnSpec:
    hidden: tuple = (128, 64)
    activation: str = "sigmoid"
    n_classes: int = 10
    input_shape: tuple = INPUT_SHAPE


def build_cnn(spec: CnnSpec = CnnSpec(), rng=None) -> Model:
    if not spec.channels:
        raise DomainError("a CNN needs at least one convolutional block")
    if len(spec.pool) != len(spec.channels):
        raise DomainError(f"{len(spec.pool)} pool flags for {len(spec.channels)} convolutional blocks")
    layers = []
    c_in = spec.input_shape[0]
    for c_out, pooled in zip(spec.channels, spec.pool):
        layers.append(Conv2D(c_in, c_out, kernel=3, stride=1, padding=1, activation="relu"))
        if pooled:
            layers.append(MaxPool(2))
        c_in = c_out
    layers.append(BatchNorm(c_in))
    layers.append(Flatten())
    # shapes are validated by Model; size the dense input from the walk
    probe = Model(layers, spec.input_shape)
    flat = probe.output_shape[0]
    layers += [Dense(flat, spec.hidden, "relu"), Dense(spec.hidden, spec.n_classes, "softmax")]
    model = Model(layers, spec.input_shape)
    if rng is not None:
        model.init(rng)
    return model


def build_ann(spec: AnnSpec = AnnSpec(), rng=None) -> Model:
    layers = [Flatten()]
    n_in = 1
    for s in spec.input_shape:
        n_in *= s
    for width in spec.hidden:
        layers.append(Dense(n_in, width, spec.activation))
        n_in = width
    layers.append(Dense(n_in, spec.n_classes, "softmax"))
    model = Model(layers, spec.input_shape)
    if rng is not None:
        model.init(rng)
    return model

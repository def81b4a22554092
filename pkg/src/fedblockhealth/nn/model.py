"""Sequential model, loss, backpropagation and SGD."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .layers import Layer

PROB_FLOOR = 1e-12


class Model:
    """Ordered layer stack with a flat parameter view.

    Trainable parameters flatten in layer order, then parameter-name order
    within each layer. ``state`` vectors append the non-trainable buffers
    (batch-norm running statistics) after the trainables.
    """

    def __init__(self, layers: list[Layer], input_shape):
        if not layers:
            raise DomainError("a model needs at least one layer")
        self.layers = list(layers)
        self.input_shape = tuple(int(s) for s in input_shape)
        shape = self.input_shape
        self.shapes = [shape]
        for layer in self.layers:
            shape = layer.output_shape(shape)
            self.shapes.append(shape)
        self.output_shape = shape
        self.version = 0

    def init(self, rng) -> "Model":
        for layer in self.layers:
            layer.init(rng)
        self.version += 1
        return self

    def _arrays(self, buffers):
        for layer in self.layers:
            yield from layer.params.values()
        if buffers:
            for layer in self.layers:
                yield from layer.buffers.values()

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self._arrays(False))

    def get_flat(self, buffers: bool = False) -> np.ndarray:
        arrays = [a.ravel() for a in self._arrays(buffers)]
        return np.concatenate(arrays) if arrays else np.zeros(0)

    def set_flat(self, vec, buffers: bool = False) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        expected = sum(a.size for a in self._arrays(buffers))
        if vec.shape != (expected,):
            raise DomainError(f"flat vector has shape {vec.shape}, expected ({expected},)")
        off = 0
        for a in self._arrays(buffers):
            a[...] = vec[off:off + a.size].reshape(a.shape)
            off += a.size
        self.version += 1

    def get_state(self) -> np.ndarray:
        return self.get_flat(buffers=True)

    def set_state(self, vec) -> None:
        self.set_flat(vec, buffers=True)

    def specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    def clone(self) -> "Model":
        from .layers import layer_from_spec

        twin = Model([layer_from_spec(s) for s in self.specs()], self.input_shape)
        twin.set_state(self.get_state())
        return twin


@dataclass
class ForwardCache:
    version: int
    training: bool
    caches: list
    output: np.ndarray


def forward(model: Model, x, training: bool = False):
    """Run the stack on a batch; returns (class probabilities, cache)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1:] != model.input_shape:
        raise DomainError(f"input batch has sample shape {x.shape[1:]}, model expects {model.input_shape}")
    caches = []
    a = x
    for layer in model.layers:
        a, c = layer.forward(a, training)
        caches.append(c)
    return a, ForwardCache(model.version, training, caches, a)


def _check_labels(labels, n, n_classes):
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise DomainError(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DomainError("label outside class range")
    return labels.astype(np.int64)


def loss(scores, labels) -> float:
    """Mean cross-entropy of probability rows against integer labels."""
    scores = np.asarray(scores, dtype=np.float64)
    n, k = scores.shape
    labels = _check_labels(labels, n, k)
    picked = np.clip(scores[np.arange(n), labels], PROB_FLOOR, 1.0)
    return float(-np.log(picked).mean())


def backward(model: Model, cache: ForwardCache, labels) -> list[dict]:
    """Gradients of the mean cross-entropy with respect to every parameter.

    Requires a softmax head; the softmax and cross-entropy derivatives are
    fused into (p - onehot) / N.
    """
    if not isinstance(cache, ForwardCache) or cache.version != model.version:
        raise DomainError("cache does not belong to the current model parameters")
    if not cache.training:
        raise DomainError("backward needs a cache from a training-mode forward pass")
    head = model.layers[-1]
    if getattr(head, "activation", None) != "softmax":
        raise DomainError("backward requires a softmax output layer")
    probs = cache.output
    n, k = probs.shape
    labels = _check_labels(labels, n, k)
    dz = probs.copy()
    dz[np.arange(n), labels] -= 1.0
    dz /= n
    grads = [None] * len(model.layers)
    d = dz
    for i in range(len(model.layers) - 1, -1, -1):
        d, grads[i] = model.layers[i].backward(d, cache.caches[i], preactivation=(i == len(model.layers) - 1))
    return grads


def sgd_step(model: Model, grads, lr: float) -> Model:
    """In-place w <- w - lr * grad for every trainable parameter."""
    if len(grads) != len(model.layers):
        raise DomainError("gradient list does not match the model")
    for layer, g in zip(model.layers, grads):
        for name, p in layer.params.items():
            if g[name].shape != p.shape:
                raise DomainError(f"gradient for {name} has shape {g[name].shape}, expected {p.shape}")
            p -= lr * g[name]
    model.version += 1
    return model


def evaluate(model: Model, images, labels, batch_size: int = 500) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) in inference mode."""
    images = np.asarray(images, dtype=np.float64)
    n = len(images)
    if n == 0:
        raise DomainError("cannot evaluate on an empty dataset")
    labels = np.asarray(labels)
    correct = 0
    total_loss = 0.0
    for start in range(0, n, batch_size):
        xb = images[start:start + batch_size]
        yb = labels[start:start + batch_size]
        probs, _ = forward(model, xb, training=False)
        correct += int((probs.argmax(axis=1) == yb).sum())
        total_loss += loss(probs, yb) * len(xb)
    return correct / n, total_loss / n


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 1
    batch_size: int = 10

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise DomainError("learning rate must be positive")
        if self.batch_size < 1:
            raise DomainError("batch size must be at least 1")
        if self.epochs < 0:
            raise DomainError("epochs must be non-negative")


def train(model: Model, images, labels, config: TrainConfig, rng) -> list[float]:
    """Minibatch SGD with a fresh shuffle per epoch; returns per-epoch mean loss."""
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    n = len(images)
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            probs, cache = forward(model, images[idx], training=True)
            total += loss(probs, labels[idx]) * len(idx)
            sgd_step(model, backward(model, cache, labels[idx]), config.learning_rate)
        history.append(total / n)
    return history

"""From-scratch convolutional and dense networks trained with SGD."""

from .builders import AnnSpec, CnnSpec, build_ann, build_cnn
from .checkpoint import dumps_checkpoint, load_checkpoint, loads_checkpoint, save_checkpoint
from .layers import BatchNorm, Conv2D, Dense, Flatten, Layer, MaxPool
from .model import ForwardCache, Model, TrainConfig, backward, evaluate, forward, loss, sgd_step, train

__all__ = [
    "AnnSpec", "BatchNorm", "CnnSpec", "Conv2D", "Dense", "Flatten", "ForwardCache", "Layer", "MaxPool",
    "Model", "TrainConfig", "backward", "build_ann", "build_cnn", "dumps_checkpoint", "evaluate", "forward",
    "load_checkpoint", "loads_checkpoint", "loss", "save_checkpoint", "sgd_step", "train",
]

"""Dense-tensor neural network engine: layers, loss, Adam, backprop and a
finite-difference gradient checker. Float64 throughout."""

from .adam import Adam
from .gradcheck import gradcheck
from .kernels import BACKEND
from .layers import (
    BatchNorm,
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool1D,
    MaxPool2D,
    Param,
    ReLU,
    Sigmoid,
    TemporalMean,
)
from .losses import sigmoid, sigmoid_bce
from .network import Network

__all__ = [
    "Adam",
    "BACKEND",
    "BatchNorm",
    "Conv1D",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "Layer",
    "MaxPool1D",
    "MaxPool2D",
    "Network",
    "Param",
    "ReLU",
    "Sigmoid",
    "TemporalMean",
    "gradcheck",
    "sigmoid",
    "sigmoid_bce",
]

from .tensor import Tensor
from .layers import BatchNorm, Conv2D, Dense, Embedding, Flatten, MaxPool2x2, ReLU, Tanh
from .losses import cross_entropy, mse
from .nets import FxNet, MultiNet, SetNet, SetNetCond, build_network
from .optim import Adam

__all__ = [
    "Tensor", "Conv2D", "BatchNorm", "ReLU", "MaxPool2x2", "Flatten", "Dense",
    "Tanh", "Embedding", "cross_entropy", "mse", "Adam",
    "FxNet", "SetNet", "MultiNet", "SetNetCond", "build_network",
]

"""Learnable arrays with gradient slots."""

import numpy as np


class Tensor:
    """A named parameter: float data plus a same-shape gradient buffer."""

    __slots__ = ("name", "data", "grad")

    def __init__(self, name, data):
        self.name = name
        self.data = np.asarray(data)
        self.grad = np.zeros_like(self.data)

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad[...] = 0

    def __repr__(self):
        return f"Tensor({self.name!r}, shape={self.data.shape}, dtype={self.data.dtype})"

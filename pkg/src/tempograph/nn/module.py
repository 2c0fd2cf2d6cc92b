from collections import OrderedDict

import numpy as np

from ..autodiff import Tensor

INIT_SCHEME = "glorot_uniform"


def glorot_uniform(rng, rows, cols):
    limit = np.sqrt(6.0 / (rows + cols))
    return Tensor(rng.uniform(-limit, limit, size=(rows, cols)), requires_grad=True)


def zeros_param(rows, cols):
    return Tensor(np.zeros((rows, cols)), requires_grad=True)


class Module:
    """Container of named trainable tensors and child modules.

    Registration order is the enumeration order, which keeps optimizer state
    and checkpoints stable across runs.
    """

    def __init__(self):
        self._params = OrderedDict()
        self._children = OrderedDict()

    def add_param(self, name, tensor):
        self._params[name] = tensor
        return tensor

    def add_child(self, name, module):
        self._children[name] = module
        return module

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield prefix + name, p
        for cname, child in self._children.items():
            yield from child.named_parameters(prefix + cname + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def param(self, name):
        return self._params[name]

    def zero_grad(self):
        for p in self.parameters():
            p.grad = np.zeros_like(p.values)

    def num_parameters(self):
        return sum(p.values.size for p in self.parameters())

"""Graph convolutions and the dense affine layer.

The ``*_basis`` helpers build the propagated copies of ``X`` that a filter
mixes; recurrent cells reuse one basis across several gates.
"""

from .. import autodiff as ad
from ..autodiff import ShapeError
from ..graph import spmm
from .module import Module, glorot_uniform, zeros_param


def chebyshev_basis(x, lap, K):
    """``[T_0(L) X, ..., T_{K-1}(L) X]`` by the three-term recurrence."""
    if K < 1:
        raise ValueError(f"Chebyshev order K must be >= 1, got {K}")
    if lap.num_nodes != x.shape[0]:
        raise ShapeError(f"operator on {lap.num_nodes} nodes, features have {x.shape[0]} rows")
    basis = [x]
    if K > 1:
        basis.append(spmm(lap, x))
    for _ in range(2, K):
        basis.append(ad.sub(ad.scale(spmm(lap, basis[-1]), 2.0), basis[-2]))
    return basis


def diffusion_basis(x, rw_out, rw_in, K):
    """Interleaved ``[P_o^k X, P_i^k X]`` for ``k = 0 .. K``."""
    if K < 0:
        raise ValueError(f"diffusion order K must be >= 0, got {K}")
    if rw_out.num_nodes != x.shape[0] or rw_in.num_nodes != x.shape[0]:
        raise ShapeError(f"operators on {rw_out.num_nodes} nodes, features have {x.shape[0]} rows")
    basis = [x, x]
    fwd = bwd = x
    for _ in range(K):
        fwd = spmm(rw_out, fwd)
        bwd = spmm(rw_in, bwd)
        basis.extend((fwd, bwd))
    return basis


def mix(basis, weights, bias, activation=None):
    """``act(sum_k basis[k] @ weights[k] + bias)``; see :func:`autodiff.affine`."""
    if len(basis) != len(weights):
        raise ValueError(f"{len(basis)} basis terms for {len(weights)} weights")
    return ad.affine(zip(basis, weights), [bias], activation=activation)


def cheb_conv(x, lap, weights, bias):
    return mix(chebyshev_basis(x, lap, len(weights)), weights, bias)


def diffusion_conv(x, rw_out, rw_in, weights_out, weights_in, bias):
    if len(weights_out) != len(weights_in):
        raise ValueError("need one inbound weight per outbound weight")
    K = len(weights_out) - 1
    weights = [w for pair in zip(weights_out, weights_in) for w in pair]
    return mix(diffusion_basis(x, rw_out, rw_in, K), weights, bias)


class ChebConv(Module):
    def __init__(self, in_channels, out_channels, K, rng):
        super().__init__()
        if K < 1:
            raise ValueError(f"Chebyshev order K must be >= 1, got {K}")
        self.in_channels, self.out_channels, self.K = in_channels, out_channels, K
        self.weights = [self.add_param(f"weight_{k}", glorot_uniform(rng, in_channels, out_channels)) for k in range(K)]
        self.bias = self.add_param("bias", zeros_param(1, out_channels))

    def terms(self, basis):
        """``(basis_k, weight_k)`` pairs, for fusing several filters into one sum."""
        return list(zip(basis, self.weights))

    def forward_basis(self, basis, activation=None):
        return mix(basis, self.weights, self.bias, activation)

    def forward(self, x, lap):
        return cheb_conv(x, lap, self.weights, self.bias)


class DiffusionConv(Module):
    def __init__(self, in_channels, out_channels, K, rng):
        super().__init__()
        if K < 0:
            raise ValueError(f"diffusion order K must be >= 0, got {K}")
        self.in_channels, self.out_channels, self.K = in_channels, out_channels, K
        self.weights = []
        for k in range(K + 1):
            self.weights.append(self.add_param(f"weight_out_{k}", glorot_uniform(rng, in_channels, out_channels)))
            self.weights.append(self.add_param(f"weight_in_{k}", glorot_uniform(rng, in_channels, out_channels)))
        self.bias = self.add_param("bias", zeros_param(1, out_channels))

    @property
    def weights_out(self):
        return self.weights[0::2]

    @property
    def weights_in(self):
        return self.weights[1::2]

    def forward_basis(self, basis, activation=None):
        return mix(basis, self.weights, self.bias, activation)

    def forward(self, x, rw_out, rw_in):
        return diffusion_conv(x, rw_out, rw_in, self.weights_out, self.weights_in, self.bias)


def linear(x, weight, bias):
    return ad.add_row(ad.matmul(x, weight), bias)


class Linear(Module):
    def __init__(self, in_channels, out_channels, rng):
        super().__init__()
        self.in_channels, self.out_channels = in_channels, out_channels
        self.weight = self.add_param("weight", glorot_uniform(rng, in_channels, out_channels))
        self.bias = self.add_param("bias", zeros_param(1, out_channels))

    def forward(self, x):
        return linear(x, self.weight, self.bias)

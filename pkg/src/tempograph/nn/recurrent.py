"""Recurrent graph convolutional cells.

Every cell maps node features plus the previous state to a new state with
``filters`` columns. A missing previous state is treated as all zeros.
"""

import numpy as np

from .. import autodiff as ad
from ..autodiff import ShapeError, Tensor
from ..graph import random_walk_matrices, scaled_laplacian
from .conv import ChebConv, DiffusionConv, chebyshev_basis, diffusion_basis
from .module import Module, glorot_uniform, zeros_param


def _zeros_like_state(n, filters):
    return Tensor(np.zeros((n, filters)))


def _check_state(name, state, n, filters):
    if state.shape != (n, filters):
        raise ShapeError(f"{name} has shape {state.shape}, expected ({n}, {filters})")


def _gru_update(z, h_prev, candidate):
    # h = z * h_prev + (1 - z) * candidate
    return ad.interpolate(z, h_prev, candidate)


def _gate(conv_x, bx, conv_h, bh, *extra_bias, activation=None):
    """``act(conv_x(bx) + conv_h(bh) + extra biases)`` as one fused node."""
    return ad.affine(
        conv_x.terms(bx) + conv_h.terms(bh), [conv_x.bias, conv_h.bias, *extra_bias], activation=activation
    )


class GConvGRU(Module):
    """GRU whose six projections are Chebyshev graph convolutions."""

    kind = "gconv-gru"

    def __init__(self, in_channels, filters, K, lambda_max, rng):
        super().__init__()
        self.in_channels, self.filters, self.K, self.lambda_max = in_channels, filters, K, lambda_max
        self.conv_x_z = self.add_child("conv_x_z", ChebConv(in_channels, filters, K, rng))
        self.conv_h_z = self.add_child("conv_h_z", ChebConv(filters, filters, K, rng))
        self.conv_x_r = self.add_child("conv_x_r", ChebConv(in_channels, filters, K, rng))
        self.conv_h_r = self.add_child("conv_h_r", ChebConv(filters, filters, K, rng))
        self.conv_x_h = self.add_child("conv_x_h", ChebConv(in_channels, filters, K, rng))
        self.conv_h_h = self.add_child("conv_h_h", ChebConv(filters, filters, K, rng))

    def operators(self, graph):
        return (scaled_laplacian(graph, self.lambda_max),)

    def initial_state(self, n):
        return _zeros_like_state(n, self.filters)

    def forward(self, x, lap, h=None):
        n = x.shape[0]
        if h is None:
            h = self.initial_state(n)
        _check_state("hidden state", h, n, self.filters)
        bx = chebyshev_basis(x, lap, self.K)
        bh = chebyshev_basis(h, lap, self.K)
        z = _gate(self.conv_x_z, bx, self.conv_h_z, bh, activation="sigmoid")
        r = _gate(self.conv_x_r, bx, self.conv_h_r, bh, activation="sigmoid")
        brh = chebyshev_basis(ad.mul(r, h), lap, self.K)
        cand = _gate(self.conv_x_h, bx, self.conv_h_h, brh, activation="tanh")
        return _gru_update(z, h, cand)

    @staticmethod
    def output(state):
        return state


class GConvLSTM(Module):
    """Peephole LSTM whose eight projections are Chebyshev graph convolutions.

    The state is the pair ``(h, c)``.
    """

    kind = "gconv-lstm"

    def __init__(self, in_channels, filters, K, lambda_max, rng):
        super().__init__()
        self.in_channels, self.filters, self.K, self.lambda_max = in_channels, filters, K, lambda_max
        self.convs = {}
        for gate in "ifco":
            self.convs["x" + gate] = self.add_child(f"conv_x_{gate}", ChebConv(in_channels, filters, K, rng))
            self.convs["h" + gate] = self.add_child(f"conv_h_{gate}", ChebConv(filters, filters, K, rng))
        self.w_c_i = self.add_param("w_c_i", glorot_uniform(rng, 1, filters))
        self.w_c_f = self.add_param("w_c_f", glorot_uniform(rng, 1, filters))
        self.w_c_o = self.add_param("w_c_o", glorot_uniform(rng, 1, filters))
        self.b = {gate: self.add_param(f"b_{gate}", zeros_param(1, filters)) for gate in "ifco"}

    def operators(self, graph):
        return (scaled_laplacian(graph, self.lambda_max),)

    def initial_state(self, n):
        return (_zeros_like_state(n, self.filters), _zeros_like_state(n, self.filters))

    def _pre(self, gate, bx, bh, activation=None):
        return _gate(self.convs["x" + gate], bx, self.convs["h" + gate], bh, self.b[gate], activation=activation)

    def forward(self, x, lap, state=None):
        n = x.shape[0]
        h, c = self.initial_state(n) if state is None else state
        _check_state("hidden state", h, n, self.filters)
        _check_state("cell state", c, n, self.filters)
        bx = chebyshev_basis(x, lap, self.K)
        bh = chebyshev_basis(h, lap, self.K)
        i = ad.sigmoid(ad.add(self._pre("i", bx, bh), ad.mul_row(c, self.w_c_i)))
        f = ad.sigmoid(ad.add(self._pre("f", bx, bh), ad.mul_row(c, self.w_c_f)))
        g = self._pre("c", bx, bh, activation="tanh")
        c_new = ad.add(ad.mul(f, c), ad.mul(i, g))
        o = ad.sigmoid(ad.add(self._pre("o", bx, bh), ad.mul_row(c_new, self.w_c_o)))
        h_new = ad.mul(o, ad.tanh(c_new))
        return h_new, c_new

    @staticmethod
    def output(state):
        return state[0]


class DCRNN(Module):
    """Diffusion-convolutional GRU; each gate convolves ``[x || h]``."""

    kind = "dcrnn"

    def __init__(self, in_channels, filters, K, rng):
        super().__init__()
        self.in_channels, self.filters, self.K = in_channels, filters, K
        width = in_channels + filters
        self.conv_z = self.add_child("conv_z", DiffusionConv(width, filters, K, rng))
        self.conv_r = self.add_child("conv_r", DiffusionConv(width, filters, K, rng))
        self.conv_h = self.add_child("conv_h", DiffusionConv(width, filters, K, rng))

    def operators(self, graph):
        return random_walk_matrices(graph)

    def initial_state(self, n):
        return _zeros_like_state(n, self.filters)

    def forward(self, x, rw_out, rw_in, h=None):
        n = x.shape[0]
        if h is None:
            h = self.initial_state(n)
        _check_state("hidden state", h, n, self.filters)
        b = diffusion_basis(ad.concat_cols(x, h), rw_out, rw_in, self.K)
        z = self.conv_z.forward_basis(b, activation="sigmoid")
        r = self.conv_r.forward_basis(b, activation="sigmoid")
        bc = diffusion_basis(ad.concat_cols(x, ad.mul(r, h)), rw_out, rw_in, self.K)
        cand = self.conv_h.forward_basis(bc, activation="tanh")
        return _gru_update(z, h, cand)

    @staticmethod
    def output(state):
        return state


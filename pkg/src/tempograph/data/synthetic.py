"""Synthetic spatiotemporal datasets."""

import numpy as np

from ..graph import random_walk_matrices, watts_strogatz
from ..signal import DynamicGraphTemporalSignal, StaticGraphTemporalSignal


def _standardize(x):
    mu = x.mean(axis=0, keepdims=True)
    sd = x.std(axis=0, keepdims=True)
    sd[sd == 0] = 1.0
    return (x - mu) / sd


def synthetic_diffusion_dataset(n, k, p, T, d, seed, noise=0.01):
    """Static small-world graph carrying a diffusing node signal.

    ``X_0`` is standard normal. Each period the target is the channel mean of
    the one-step diffused features, ``y_t = mean_c(P X_t)`` with ``P`` the
    forward random-walk matrix, and the next features are
    ``X_{t+1} = standardize(P X_t + noise * eps)``. Column standardization
    stops the signal from collapsing onto the consensus vector, so late
    periods (the test split) look like early ones.
    """
    if T < 1 or d < 1:
        raise ValueError(f"need T >= 1 and d >= 1, got T={T}, d={d}")
    if noise < 0:
        raise ValueError(f"noise must be nonnegative, got {noise}")
    rng = np.random.default_rng(seed)
    graph = watts_strogatz(n, k, p, rng)
    rw_out, _ = random_walk_matrices(graph)
    x = rng.standard_normal((n, d))
    features, targets = [], []
    for _ in range(T):
        diffused = rw_out.apply(x)
        features.append(x)
        targets.append(diffused.mean(axis=1, keepdims=True))
        x = diffused + noise * rng.standard_normal((n, d)) if noise else diffused
        x = _standardize(x)
    return StaticGraphTemporalSignal(graph, features, targets)


def synthetic_benchmark_sequence(n=2**10, k_edges_per_node=2**5, d=2**5, T=100, seed=0, p=0.1):
    """``T`` independent Watts-Strogatz graphs with uniform features and 0/1 targets."""
    if T < 1 or d < 1:
        raise ValueError(f"need T >= 1 and d >= 1, got T={T}, d={d}")
    rng = np.random.default_rng(seed)
    graphs, features, targets = [], [], []
    for _ in range(T):
        graphs.append(watts_strogatz(n, k_edges_per_node, p, rng))
        features.append(rng.uniform(0.0, 1.0, size=(n, d)))
        targets.append(rng.integers(0, 2, size=(n, 1)).astype(np.float64))
    return DynamicGraphTemporalSignal(graphs, features, targets)

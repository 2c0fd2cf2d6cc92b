"""Recurrent graph convolutional networks for discrete-time spatiotemporal signals."""

__version__ = "0.1.0"

from . import autodiff, graph, signal  # noqa: E402
from ._kernels import BACKEND  # noqa: E402
from .graph import Graph, SparseOperator, watts_strogatz  # noqa: E402
from .signal import (  # noqa: E402
    DynamicGraphStaticSignal,
    DynamicGraphTemporalSignal,
    Snapshot,
    StaticGraphTemporalSignal,
    TemporalSignal,
    temporal_signal_split,
)

__all__ = [
    "__version__",
    "BACKEND",
    "autodiff",
    "graph",
    "signal",
    "Graph",
    "SparseOperator",
    "watts_strogatz",
    "DynamicGraphStaticSignal",
    "DynamicGraphTemporalSignal",
    "Snapshot",
    "StaticGraphTemporalSignal",
    "TemporalSignal",
    "temporal_signal_split",
]

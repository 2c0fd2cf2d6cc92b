"""Discrete-time spatiotemporal signals.

Three storage variants share one node set across time:

``static_graph_temporal_signal``
    one graph, a feature and target matrix per period
``dynamic_graph_static_signal``
    a graph and target matrix per period, one feature matrix
``dynamic_graph_temporal_signal``
    everything per period

Signals never copy the stored arrays. Iteration and indexing build light
:class:`Snapshot` views; :func:`temporal_signal_split` slices the stored
lists so train and test halves reference the same arrays and graphs.
``Snapshot.t`` is the absolute period of the parent signal, so the test half
of a split continues the numbering where the train half stops.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .graph import Graph

__all__ = [
    "VARIANTS",
    "Snapshot",
    "TemporalSignal",
    "SignalError",
    "StaticGraphTemporalSignal",
    "DynamicGraphStaticSignal",
    "DynamicGraphTemporalSignal",
    "build",
    "temporal_signal_split",
]

STATIC_GRAPH = "static_graph_temporal_signal"
STATIC_SIGNAL = "dynamic_graph_static_signal"
DYNAMIC = "dynamic_graph_temporal_signal"
VARIANTS = (DYNAMIC, STATIC_SIGNAL, STATIC_GRAPH)


class SignalError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Snapshot:
    graph: Graph
    x: Tensor
    y: Tensor
    t: int
    mask: np.ndarray = None

    @property
    def num_nodes(self):
        return self.graph.num_nodes

    @property
    def edge_index(self):
        return self.graph.edge_index

    @property
    def edge_weight(self):
        return self.graph.edge_weight


def _matrix(a, what, t):
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise SignalError(f"{what} at t={t} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise SignalError(f"{what} at t={t} contains non-finite values")
    # a read-only view guards the stored data without freezing the caller's array
    arr = arr.view()
    arr.setflags(write=False)
    return arr


class TemporalSignal:
    """Ordered, immutable sequence of snapshots over a fixed node set."""

    variant = None

    def __init__(self, graphs, features, targets, masks=None):
        self._graphs = list(graphs)
        self._features = list(features)
        self._targets = list(targets)
        self._masks = None if masks is None else list(masks)
        self._offset = 0
        self._validate()

    # storage layout -- subclasses say which components vary with time
    _graphs_per_t = True
    _features_per_t = True

    def __len__(self):
        return len(self._targets)

    @property
    def T(self):
        return len(self._targets)

    @property
    def num_nodes(self):
        return self._graphs[0].num_nodes

    @property
    def num_features(self):
        return self._features[0].shape[1]

    def _validate(self):
        T = len(self._targets)
        if T == 0:
            raise SignalError("a temporal signal needs at least one period")
        n_graphs = T if self._graphs_per_t else 1
        n_feats = T if self._features_per_t else 1
        if len(self._graphs) != n_graphs:
            raise SignalError(f"{self.variant} with T={T} needs {n_graphs} graph(s), got {len(self._graphs)}")
        if len(self._features) != n_feats:
            raise SignalError(f"{self.variant} with T={T} needs {n_feats} feature matrices, got {len(self._features)}")
        if self._masks is not None and len(self._masks) != T:
            raise SignalError(f"{len(self._masks)} masks for T={T}")
        for t, g in enumerate(self._graphs):
            if not isinstance(g, Graph):
                raise SignalError(f"graph at t={t} is not a Graph")
        n = self._graphs[0].num_nodes
        for t, g in enumerate(self._graphs):
            if g.num_nodes != n:
                raise SignalError(f"graph at t={t} has {g.num_nodes} nodes, expected {n}")
        self._features = [_matrix(x, "features", t) for t, x in enumerate(self._features)]
        self._targets = [_matrix(y, "targets", t) for t, y in enumerate(self._targets)]
        d = self._features[0].shape[1]
        for t, x in enumerate(self._features):
            if x.shape[0] != n:
                raise SignalError(f"features at t={t} have {x.shape[0]} rows, expected {n}")
            if x.shape[1] != d:
                raise SignalError(f"features at t={t} have {x.shape[1]} columns, expected {d}")
        for t, y in enumerate(self._targets):
            if y.shape != (n, 1):
                raise SignalError(f"targets at t={t} have shape {y.shape}, expected ({n}, 1)")
        if self._masks is not None:
            masks = []
            for t, m in enumerate(self._masks):
                m = np.asarray(m, dtype=bool).reshape(-1)
                if m.shape[0] != n:
                    raise SignalError(f"mask at t={t} has {m.shape[0]} entries, expected {n}")
                masks.append(m)
            self._masks = masks

    def _graph(self, t):
        return self._graphs[t] if self._graphs_per_t else self._graphs[0]

    def _feature(self, t):
        return self._features[t] if self._features_per_t else self._features[0]

    def __getitem__(self, t):
        if isinstance(t, slice):
            raise TypeError("slice a signal with temporal_signal_split or TemporalSignal.window")
        T = len(self)
        t = int(t)
        if not 0 <= t < T:
            raise IndexError(f"time index {t} outside [0, {T})")
        mask = None if self._masks is None else self._masks[t]
        return Snapshot(self._graph(t), Tensor(self._feature(t)), Tensor(self._targets[t]), self._offset + t, mask)

    def snapshot(self, t):
        return self[t]

    def __iter__(self):
        for t in range(len(self)):
            yield self[t]

    def window(self, start, stop):
        """Periods ``start .. stop - 1`` as a new signal of the same variant, sharing storage."""
        new = object.__new__(type(self))
        new._graphs = self._graphs[start:stop] if self._graphs_per_t else self._graphs
        new._features = self._features[start:stop] if self._features_per_t else self._features
        new._targets = self._targets[start:stop]
        new._masks = None if self._masks is None else self._masks[start:stop]
        new._offset = self._offset + start
        if not new._targets:
            raise SignalError(f"window [{start}, {stop}) is empty")
        return new

    @property
    def graphs(self):
        return tuple(self._graphs)

    @property
    def features(self):
        return tuple(self._features)

    @property
    def targets(self):
        return tuple(self._targets)

    def __repr__(self):
        return f"{type(self).__name__}(T={len(self)}, num_nodes={self.num_nodes}, num_features={self.num_features})"


class StaticGraphTemporalSignal(TemporalSignal):
    variant = STATIC_GRAPH
    _graphs_per_t = False

    def __init__(self, graph, features, targets, masks=None):
        super().__init__([graph], features, targets, masks)

    @property
    def graph(self):
        return self._graphs[0]


class DynamicGraphStaticSignal(TemporalSignal):
    variant = STATIC_SIGNAL
    _features_per_t = False

    def __init__(self, graphs, features, targets, masks=None):
        super().__init__(graphs, [features], targets, masks)


class DynamicGraphTemporalSignal(TemporalSignal):
    variant = DYNAMIC


_CLASSES = {
    STATIC_GRAPH: StaticGraphTemporalSignal,
    STATIC_SIGNAL: DynamicGraphStaticSignal,
    DYNAMIC: DynamicGraphTemporalSignal,
}


def build(variant, graphs, features, targets, masks=None):
    """Construct a validated signal of the named variant.

    ``graphs`` is a single :class:`Graph` for the static-graph variant and a
    sequence otherwise; ``features`` is a single matrix for the static-signal
    variant and a sequence otherwise.
    """
    try:
        cls = _CLASSES[variant]
    except KeyError:
        raise SignalError(f"unknown variant {variant!r}; expected one of {VARIANTS}") from None
    return cls(graphs, features, targets, masks)


def temporal_signal_split(signal, train_ratio=0.8):
    """Split at ``floor(train_ratio * T)``; earlier periods train, the rest test."""
    if not 0.0 < train_ratio < 1.0:
        raise ValueError(f"train_ratio must lie strictly between 0 and 1, got {train_ratio}")
    T = len(signal)
    # the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    cut = int(np.floor(train_ratio * T + 1e-9))
    if cut == 0 or cut == T:
        raise SignalError(f"train_ratio={train_ratio} on T={T} leaves an empty side ({cut}/{T - cut})")
    return signal.window(0, cut), signal.window(cut, T)

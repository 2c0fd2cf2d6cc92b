"""JSON dataset documents (schema version ``"1"``).

A document looks like::

    {
      "schema_version": "1",
      "variant": "static_graph_temporal_signal",
      "nodes": 3,
      "periods": 2,
      "edges": {"edge_index": [[0, 1], [1, 0]], "edge_weight": [1.0, 1.0]},
      "features": [[[0.1], [0.2], [0.3]], [[0.4], [0.5], [0.6]]],
      "targets": [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]],
      "metadata": {"name": "toy", "time_span": null, "lag": null}
    }

``edges`` is one edge block for the static-graph variant and a list of
``periods`` blocks otherwise. ``features`` is one ``nodes x d`` matrix for
the static-signal variant and a list of ``periods`` matrices otherwise.
``targets`` is always a list of ``periods`` vectors of length ``nodes``.
An optional ``masks`` list holds one boolean vector per period.

When ``metadata.lag`` is a positive integer ``L`` the document may omit
``features``: the features at period ``t`` become the targets of periods
``t - L .. t - 1`` and the first ``L`` periods are dropped.
"""

import json

import numpy as np

from ..graph import Graph
from ..signal import DYNAMIC, STATIC_GRAPH, STATIC_SIGNAL, VARIANTS, SignalError, build

SCHEMA_VERSION = "1"


class DatasetError(ValueError):
    pass


def _where(field, t=None):
    return field if t is None else f"{field}[{t}]"


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _count(doc, field):
    v = doc.get(field)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise DatasetError(f"field '{field}' must be a positive integer, got {v!r}")
    return v


def _vector(v, n, field, t=None):
    if not isinstance(v, list) or len(v) != n:
        got = len(v) if isinstance(v, list) else type(v).__name__
        raise DatasetError(f"field '{_where(field, t)}' must be a list of {n} numbers, got {got}")
    if not all(_is_number(a) for a in v):
        raise DatasetError(f"field '{_where(field, t)}' must contain only numbers")
    arr = np.asarray(v, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise DatasetError(f"field '{_where(field, t)}' contains non-finite values")
    return arr


def _matrix(v, n, field, t=None):
    if not isinstance(v, list) or len(v) != n:
        got = len(v) if isinstance(v, list) else type(v).__name__
        raise DatasetError(f"field '{_where(field, t)}' must be a list of {n} rows, got {got}")
    if not v or not isinstance(v[0], list) or not v[0]:
        raise DatasetError(f"field '{_where(field, t)}' rows must be non-empty lists")
    d = len(v[0])
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != d:
            raise DatasetError(f"field '{_where(field, t)}' row {i} must hold {d} numbers")
        if not all(_is_number(a) for a in row):
            raise DatasetError(f"field '{_where(field, t)}' row {i} must contain only numbers")
    arr = np.asarray(v, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise DatasetError(f"field '{_where(field, t)}' contains non-finite values")
    return arr


def _graph(block, n, field, t=None):
    where = _where(field, t)
    if not isinstance(block, dict) or "edge_index" not in block:
        raise DatasetError(f"field '{where}' must be an object with 'edge_index'")
    pairs = block["edge_index"]
    if not isinstance(pairs, list):
        raise DatasetError(f"field '{where}.edge_index' must be a list of [source, target] pairs")
    for i, pair in enumerate(pairs):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(a, int) and not isinstance(a, bool) for a in pair)
        ):
            raise DatasetError(f"field '{where}.edge_index' entry {i} must be a pair of integers")
        if not (0 <= pair[0] < n and 0 <= pair[1] < n):
            raise DatasetError(f"field '{where}.edge_index' entry {i} references a node outside [0, {n})")
    weights = block.get("edge_weight")
    if weights is not None:
        weights = _vector(weights, len(pairs), f"{where}.edge_weight")
        if (weights < 0).any():
            raise DatasetError(f"field '{where}.edge_weight' must be nonnegative")
    edge_index = np.asarray(pairs, dtype=np.int64).reshape(-1, 2).T
    return Graph(n, edge_index, weights)


def _per_period(doc, field, count):
    v = doc.get(field)
    if not isinstance(v, list) or len(v) != count:
        got = len(v) if isinstance(v, list) else type(v).__name__
        raise DatasetError(f"field '{field}' must be a list of {count} entries (one per period), got {got}")
    return v


def _lag(meta):
    lag = meta.get("lag") if isinstance(meta, dict) else None
    if lag is None:
        return 0
    if isinstance(lag, bool) or not isinstance(lag, int) or lag < 0:
        raise DatasetError(f"field 'metadata.lag' must be a nonnegative integer, got {lag!r}")
    return lag


def signal_from_document(doc, lag=None):
    """Validate a parsed document and build its temporal signal."""
    if not isinstance(doc, dict):
        raise DatasetError("a dataset document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DatasetError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION!r}")
    variant = doc.get("variant")
    if variant not in VARIANTS:
        raise DatasetError(f"field 'variant' must be one of {list(VARIANTS)}, got {variant!r}")
    n = _count(doc, "nodes")
    periods = _count(doc, "periods")
    meta = doc.get("metadata", {})
    if meta is not None and not isinstance(meta, dict):
        raise DatasetError("field 'metadata' must be an object")
    lag = _lag(meta) if lag is None else lag
    if lag and variant == STATIC_SIGNAL:
        raise DatasetError("a lag window needs per-period features; not valid for dynamic_graph_static_signal")
    if lag >= periods:
        raise DatasetError(f"lag {lag} leaves no periods out of {periods}")

    targets = [_vector(y, n, "targets", t) for t, y in enumerate(_per_period(doc, "targets", periods))]

    if variant == STATIC_GRAPH:
        graphs = _graph(doc.get("edges"), n, "edges")
    else:
        graphs = [_graph(b, n, "edges", t) for t, b in enumerate(_per_period(doc, "edges", periods))]

    if lag:
        if doc.get("features") is not None:
            raise DatasetError("give either 'features' or 'metadata.lag', not both")
        stacked = np.stack(targets, axis=1)
        features = [stacked[:, t - lag : t] for t in range(lag, periods)]
        targets = targets[lag:]
        if variant != STATIC_GRAPH:
            graphs = graphs[lag:]
    elif variant == STATIC_SIGNAL:
        features = _matrix(doc.get("features"), n, "features")
    else:
        raw = _per_period(doc, "features", periods)
        features = [_matrix(x, n, "features", t) for t, x in enumerate(raw)]

    masks = doc.get("masks")
    if masks is not None:
        raw = _per_period(doc, "masks", periods)
        masks = []
        for t, m in enumerate(raw):
            if not isinstance(m, list) or len(m) != n or not all(isinstance(a, bool) for a in m):
                raise DatasetError(f"field 'masks[{t}]' must be a list of {n} booleans")
            masks.append(np.asarray(m, dtype=bool))
        masks = masks[lag:]

    try:
        return build(variant, graphs, features, targets, masks)
    except SignalError as exc:
        raise DatasetError(str(exc)) from None


def _reject_constant(name):
    raise DatasetError(f"non-finite number {name} is not allowed")


def parse_document(text):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except RecursionError:
        raise DatasetError("document nests too deeply") from None


def read_document(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from None
    return parse_document(text)


def load_dataset(path, lag=None):
    return signal_from_document(read_document(path), lag=lag)


def _block(graph):
    return {
        "edge_index": graph.edge_index.T.tolist(),
        "edge_weight": graph.edge_weight.tolist(),
    }


def document_from_signal(signal, name=None, time_span=None):
    """The schema-``"1"`` document describing ``signal`` (lag already applied)."""
    variant = signal.variant
    doc = {
        "schema_version": SCHEMA_VERSION,
        "variant": variant,
        "nodes": signal.num_nodes,
        "periods": len(signal),
    }
    if variant == STATIC_GRAPH:
        doc["edges"] = _block(signal.graphs[0])
    else:
        doc["edges"] = [_block(g) for g in signal.graphs]
    if variant == STATIC_SIGNAL:
        doc["features"] = signal.features[0].tolist()
    else:
        doc["features"] = [x.tolist() for x in signal.features]
    doc["targets"] = [y.ravel().tolist() for y in signal.targets]
    if signal._masks is not None:
        doc["masks"] = [m.tolist() for m in signal._masks]
    doc["metadata"] = {"name": name, "time_span": time_span, "lag": None}
    return doc


def dumps_document(doc):
    # repr-based float output is the shortest string that parses back to the
    # same double, so documents round-trip bit for bit
    try:
        return json.dumps(doc, separators=(",", ":"), allow_nan=False) + "\n"
    except ValueError:
        raise DatasetError("cannot serialize non-finite values") from None


def save_dataset(signal, path, name=None, time_span=None):
    text = dumps_document(document_from_signal(signal, name=name, time_span=time_span))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def describe(signal):
    """Summary numbers used by ``tempograph inspect``."""
    edges = [g.num_edges for g in signal.graphs]
    return {
        "variant": signal.variant,
        "periods": len(signal),
        "nodes": signal.num_nodes,
        "features": signal.num_features,
        "edges_min": int(min(edges)),
        "edges_max": int(max(edges)),
    }


__all__ = [
    "SCHEMA_VERSION",
    "DatasetError",
    "signal_from_document",
    "parse_document",
    "read_document",
    "load_dataset",
    "document_from_signal",
    "dumps_document",
    "save_dataset",
    "describe",
    "DYNAMIC",
    "STATIC_GRAPH",
    "STATIC_SIGNAL",
]

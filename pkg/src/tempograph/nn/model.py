"""The reference recurrent GCN regressor and its checkpoint format."""

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .. import autodiff as ad
from ..autodiff import ShapeError
from .conv import Linear
from .module import INIT_SCHEME, Module
from .recurrent import DCRNN, GConvGRU, GConvLSTM

MODEL_KINDS = ("gconv-gru", "gconv-lstm", "dcrnn")
CHECKPOINT_FORMAT = "tempograph.checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Every hyperparameter of a :class:`RecurrentGCN`; none has a default.

    ``k`` is the Chebyshev order for the GConv cells and the diffusion order
    for DCRNN. ``lambda_max`` (a positive float or ``"exact"``) only affects
    the Chebyshev cells and may be ``None`` for DCRNN.
    """

    model: str
    in_channels: int
    filters: int
    k: int
    lambda_max: object
    dropout: float

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        for name in ("in_channels", "filters"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)):
            raise ValueError(f"k must be an integer, got {self.k!r}")
        min_k = 0 if self.model == "dcrnn" else 1
        if self.k < min_k:
            raise ValueError(f"{self.model} needs k >= {min_k}, got {self.k}")
        lam = self.lambda_max
        if self.model != "dcrnn" or lam is not None:
            if isinstance(lam, str):
                if lam != "exact":
                    raise ValueError(f"lambda_max must be a positive number or 'exact', got {lam!r}")
            elif isinstance(lam, bool) or not isinstance(lam, (int, float)) or not lam > 0:
                raise ValueError(f"lambda_max must be a positive number or 'exact', got {lam!r}")
        if isinstance(self.dropout, bool) or not isinstance(self.dropout, (int, float)) or not 0 <= self.dropout < 1:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout!r}")


class RecurrentGCN(Module):
    """Recurrent graph cell, ReLU, dropout and a one-unit dense head."""

    def __init__(self, config, seed):
        super().__init__()
        self.config = config
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        c = config
        if c.model == "gconv-gru":
            cell = GConvGRU(c.in_channels, c.filters, c.k, c.lambda_max, rng)
        elif c.model == "gconv-lstm":
            cell = GConvLSTM(c.in_channels, c.filters, c.k, c.lambda_max, rng)
        else:
            cell = DCRNN(c.in_channels, c.filters, c.k, rng)
        self.recurrent = self.add_child("recurrent", cell)
        self.linear = self.add_child("linear", Linear(c.filters, 1, rng))

    def forward(self, snapshot, state=None, training=False, rng=None):
        """Return ``(y_hat, new_state)`` for one snapshot."""
        x = snapshot.x
        if x.shape[1] != self.config.in_channels:
            raise ShapeError(f"snapshot has {x.shape[1]} features, model expects {self.config.in_channels}")
        ops = self.recurrent.operators(snapshot.graph)
        state = self.recurrent.forward(x, *ops, state)
        h = ad.relu(self.recurrent.output(state))
        h = ad.dropout(h, self.config.dropout, training, rng)
        return self.linear.forward(h), state

    __call__ = forward

    def init_record(self):
        return {"scheme": INIT_SCHEME, "seed": self.seed}


def inspect_hyperparameters(model):
    """Name -> value for every field of the model's configuration."""
    return {f.name: getattr(model.config, f.name) for f in fields(ModelConfig)}


def detach_state(state):
    if state is None:
        return None
    if isinstance(state, tuple):
        return tuple(s.detach() for s in state)
    return state.detach()


def checkpoint_document(model):
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "init": model.init_record(),
        "parameters": [
            {"name": name, "shape": list(p.shape), "values": p.values.ravel().tolist()}
            for name, p in model.named_parameters()
        ],
    }


def save_checkpoint(model, path):
    with open(path, "w") as fh:
        json.dump(checkpoint_document(model), fh)
        fh.write("\n")


def model_from_checkpoint(doc):
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("not a tempograph checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    try:
        config = ModelConfig(**doc["config"])
        seed = doc["init"]["seed"]
        entries = doc["parameters"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from None
    model = RecurrentGCN(config, seed)
    params = dict(model.named_parameters())
    if not isinstance(entries, list) or len(entries) != len(params):
        raise CheckpointError(f"checkpoint holds {len(entries) if isinstance(entries, list) else '?'} tensors, model has {len(params)}")
    for entry in entries:
        try:
            name, shape, values = entry["name"], tuple(entry["shape"]), entry["values"]
        except (KeyError, TypeError):
            raise CheckpointError("malformed parameter entry") from None
        if name not in params:
            raise CheckpointError(f"unknown parameter {name!r}")
        p = params[name]
        if shape != p.shape:
            raise CheckpointError(f"parameter {name!r} has shape {list(shape)}, model expects {list(p.shape)}")
        try:
            arr = np.asarray(values, dtype=np.float64)
        except (TypeError, ValueError):
            raise CheckpointError(f"parameter {name!r} holds non-numeric values") from None
        if arr.shape != (p.values.size,) or not np.isfinite(arr).all():
            raise CheckpointError(f"parameter {name!r} values do not match shape {list(shape)}")
        p.values = arr.reshape(p.shape)
    return model


def load_checkpoint(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return model_from_checkpoint(doc)

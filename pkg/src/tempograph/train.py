"""Adam, the two backpropagation regimes, and test-set evaluation.

``cumulative``
    sum the per-snapshot MSE over the whole training signal, divide by the
    number of snapshots, one backward pass and one optimizer step per epoch.
``incremental``
    backward pass and optimizer step after every snapshot, loss not
    rescaled, so an epoch makes ``T`` steps.

By default (``carry_state=True``) the recurrent state starts from zeros at
every epoch and is carried from one snapshot to the next. The incremental
regime detaches it after each step, since the earlier part of the tape has
already been consumed by a backward pass. With ``carry_state=False`` every
snapshot starts from a zero state, the way a model called without a hidden
state behaves; both regimes then do the same forward and backward work and
differ only in when updates happen. The cumulative regime then accumulates
the gradient of the mean loss snapshot by snapshot, which gives the same
update without keeping the whole epoch on the tape.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import autodiff as ad
from .autodiff import NonFiniteError
from .nn.model import detach_state

REGIMES = ("incremental", "cumulative")
REPORT_SCHEMA_VERSION = 1


class MissingGradientError(RuntimeError):
    pass


class Adam:
    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]
        self.step_count = 0

    def step(self):
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise MissingGradientError(f"parameter {i} with shape {p.shape} has no gradient")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            new = p.values - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if not np.isfinite(new).all():
                raise NonFiniteError("optimizer step produced non-finite parameters")
            p.values = new

    def zero_grad(self):
        ad.zero_grad(self.params)


@dataclass
class TrainReport:
    losses: list
    epoch_seconds: list
    regime: str
    steps: int
    config: dict = field(default_factory=dict)
    seed: int = None
    test_mse: float = None

    def to_dict(self, include_timing=True):
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "library_version": __version__,
            "config": self.config,
            "seed": self.seed,
            "regime": self.regime,
            "optimizer_steps": self.steps,
            "losses": list(self.losses),
            "epoch_seconds": list(self.epoch_seconds) if include_timing else None,
            "test_mse": self.test_mse,
        }

    def to_json(self, include_timing=True):
        return json.dumps(self.to_dict(include_timing), indent=2) + "\n"


def _check_signal(signal):
    if signal is None or len(signal) == 0:
        raise ValueError("training and evaluation need a non-empty signal")


def train_cumulative(model, signal, epochs, optimizer, rng=None, carry_state=True):
    _check_signal(signal)
    rng = np.random.default_rng(model.seed) if rng is None else rng
    losses, seconds = [], []
    for _ in range(epochs):
        start = time.perf_counter()
        if carry_state:
            state = None
            cost = None
            for snapshot in signal:
                y_hat, state = model.forward(snapshot, state, training=True, rng=rng)
                loss = ad.mse_loss(y_hat, snapshot.y, snapshot.mask)
                cost = loss if cost is None else ad.add(cost, loss)
            cost = ad.scale(cost, 1.0 / len(signal))
            ad.backward(cost)
            value = cost.item()
        else:
            # snapshots are independent, so the gradient of the mean loss is
            # accumulated one snapshot at a time instead of holding every tape
            value = 0.0
            for snapshot in signal:
                y_hat, _ = model.forward(snapshot, None, training=True, rng=rng)
                loss = ad.mse_loss(y_hat, snapshot.y, snapshot.mask)
                ad.backward(ad.scale(loss, 1.0 / len(signal)))
                value += loss.item()
            value /= len(signal)
        optimizer.step()
        optimizer.zero_grad()
        seconds.append(time.perf_counter() - start)
        losses.append(value)
    return TrainReport(losses, seconds, "cumulative", optimizer.step_count)


def train_incremental(model, signal, epochs, optimizer, rng=None, carry_state=True):
    _check_signal(signal)
    rng = np.random.default_rng(model.seed) if rng is None else rng
    losses, seconds = [], []
    for _ in range(epochs):
        start = time.perf_counter()
        state = None
        total = 0.0
        for snapshot in signal:
            y_hat, state = model.forward(snapshot, state if carry_state else None, training=True, rng=rng)
            cost = ad.mse_loss(y_hat, snapshot.y, snapshot.mask)
            ad.backward(cost)
            optimizer.step()
            optimizer.zero_grad()
            state = detach_state(state)
            total += cost.item()
        seconds.append(time.perf_counter() - start)
        losses.append(total / len(signal))
    return TrainReport(losses, seconds, "incremental", optimizer.step_count)


def train(model, signal, regime, epochs, optimizer, rng=None, carry_state=True):
    if regime == "cumulative":
        return train_cumulative(model, signal, epochs, optimizer, rng, carry_state)
    if regime == "incremental":
        return train_incremental(model, signal, epochs, optimizer, rng, carry_state)
    raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")


def evaluate_mse(model, signal):
    """Time-averaged MSE with dropout off; state carried across the signal."""
    _check_signal(signal)
    state = None
    total = 0.0
    for snapshot in signal:
        y_hat, state = model.forward(snapshot, detach_state(state), training=False)
        total += ad.mse_loss(y_hat, snapshot.y, snapshot.mask).item()
    return total / len(signal)

import numpy as np
import pytest

from tempograph import autodiff as ad
from tempograph.graph import Graph


def numeric_grad(f, t, h=1e-5):
    """Central-difference gradient of scalar ``f()`` with respect to ``t.values``."""
    g = np.zeros_like(t.values)
    it = np.nditer(t.values, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = t.values[idx]
        t.values[idx] = old + h
        fp = f().item()
        t.values[idx] = old - h
        fm = f().item()
        t.values[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b, floor=1e-7):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), floor)


def grad_check(f, tensors, h=1e-5):
    """Largest relative error between backprop and central differences over ``tensors``."""
    for t in tensors:
        t.grad = None
    ad.backward(f())
    worst = 0.0
    for t in tensors:
        analytic = t.grad.copy()
        numeric = numeric_grad(f, t, h)
        worst = max(worst, rel_error(analytic, numeric))
    return worst


def random_graph(rng, n, p_edge=0.3, directed=True, weighted=True):
    mask = rng.random((n, n)) < p_edge
    np.fill_diagonal(mask, False)
    if not directed:
        mask = mask | mask.T
    src, dst = np.nonzero(mask)
    w = rng.uniform(0.1, 2.0, size=src.size) if weighted else None
    if not directed and weighted:
        wm = np.zeros((n, n))
        wm[src, dst] = w
        wm = np.triu(wm) + np.triu(wm, 1).T
        w = wm[src, dst]
    return Graph(n, np.vstack([src, dst]), w)


def param(rng, rows, cols):
    return ad.Tensor(rng.uniform(-1, 1, size=(rows, cols)), requires_grad=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance criteria lines collected by ``test_acceptance``."""
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed in the pytest terminal summary (see ``conftest.py``)
and immediately when the module is run as a script.
"""

import io
import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as npcheb

from tempograph import autodiff as ad
from tempograph.autodiff import Tensor
from tempograph.cli import main, run_benchmark
from tempograph.data import load_dataset, save_dataset, synthetic_diffusion_dataset
from tempograph.graph import Graph, random_walk_matrices, scaled_laplacian
from tempograph.nn import (
    DCRNN,
    ChebConv,
    DiffusionConv,
    GConvGRU,
    GConvLSTM,
    Linear,
    ModelConfig,
    RecurrentGCN,
    load_checkpoint,
    save_checkpoint,
)
from tempograph.signal import (
    STATIC_GRAPH,
    STATIC_SIGNAL,
    VARIANTS,
    SignalError,
    Snapshot,
    StaticGraphTemporalSignal,
    build,
    temporal_signal_split,
)
from tempograph.train import Adam, evaluate_mse, train, train_cumulative

from conftest import grad_check, random_graph

RESULTS = []


@contextmanager
def criterion(number, title, limit=None):
    """Record PASS or FAIL for one criterion, enforcing an optional runtime limit."""
    info = {"detail": ""}
    start = time.perf_counter()
    try:
        yield info
        elapsed = time.perf_counter() - start
        if limit is not None:
            assert elapsed < limit, f"runtime {elapsed:.1f}s exceeds the {limit:.0f}s limit"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        reason = (str(exc).strip().splitlines() or [type(exc).__name__])[0]
        _record(number, title, "FAIL", f"{reason} [{elapsed:.1f}s]")
        raise
    _record(number, title, "PASS", f"{info['detail']} [{elapsed:.1f}s]".strip())


def _record(number, title, status, detail):
    line = f"criterion {number} {title}: {status} {detail}"
    RESULTS.append(line)
    print(line)


def dense_laplacian(g):
    """Normalized Laplacian of the symmetrized graph, built densely."""
    w = g.dense_adjacency()
    w = 0.5 * (w + w.T)
    deg = w.sum(axis=1)
    d = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return np.eye(g.num_nodes) - d[:, None] * w * d[None, :]


def chebyshev_power_oracle(x, lap_hat, weights, bias):
    """``sum_k T_k(L) X W_k + b`` with each ``T_k`` expanded into monomials of ``L``."""
    out = np.zeros((x.shape[0], weights[0].shape[1]))
    for k, w in enumerate(weights):
        coeffs = npcheb.cheb2poly([0] * k + [1])
        tk = sum(c * np.linalg.matrix_power(lap_hat, j) for j, c in enumerate(coeffs))
        out += tk @ x @ w
    return out + bias


def diffusion_power_oracle(x, adjacency, w_out, w_in, bias):
    """``sum_k (D_O^-1 W)^k X Wo_k + (D_I^-1 W^T)^k X Wi_k + b`` from the dense adjacency."""
    out_deg, in_deg = adjacency.sum(axis=1), adjacency.sum(axis=0)
    inv = lambda d: np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 0.0)  # noqa: E731
    p_out = inv(out_deg)[:, None] * adjacency
    p_in = inv(in_deg)[:, None] * adjacency.T
    out = np.zeros((x.shape[0], w_out[0].shape[1]))
    for k, (wo, wi) in enumerate(zip(w_out, w_in)):
        out += np.linalg.matrix_power(p_out, k) @ x @ wo + np.linalg.matrix_power(p_in, k) @ x @ wi
    return out + bias


def _perturb(params, rng):
    """Move every parameter off its initialization so zero biases are exercised too."""
    for p in params:
        p.values = p.values + rng.normal(scale=0.3, size=p.shape)


def _gradient_cases(rng):
    """Yield ``(name, loss_fn, tensors)`` for every differentiable component."""
    for trial in range(3):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 5))
        f = int(rng.integers(1, 5))
        K = int(rng.integers(1, 4))
        g = random_graph(rng, n, p_edge=rng.uniform(0.2, 0.6))
        lap = scaled_laplacian(g, "exact" if trial % 2 else 2.0)
        rw = random_walk_matrices(g)
        proj = Tensor(rng.normal(size=(n, f)))
        x = Tensor(rng.normal(size=(n, d)), requires_grad=True)
        h0 = Tensor(rng.normal(scale=0.5, size=(n, f)), requires_grad=True)
        c0 = Tensor(rng.normal(scale=0.5, size=(n, f)), requires_grad=True)

        def readout(t):
            return ad.sum_all(ad.mul(ad.tanh(t), proj))

        conv = ChebConv(d, f, K, rng)
        _perturb(conv.parameters(), rng)
        yield "ChebConv", (lambda c=conv: readout(c.forward(x, lap))), conv.parameters() + [x]

        conv = DiffusionConv(d, f, K - 1, rng)
        _perturb(conv.parameters(), rng)
        yield "DiffusionConv", (lambda c=conv: readout(c.forward(x, *rw))), conv.parameters() + [x]

        lin = Linear(d, f, rng)
        _perturb(lin.parameters(), rng)
        yield "Linear", (lambda m=lin: readout(m.forward(x))), lin.parameters() + [x]

        xs = [Tensor(rng.normal(size=(n, d)), requires_grad=True) for _ in range(3)]
        for cell, state in (
            (GConvGRU(d, f, K, 2.0, rng), h0),
            (GConvLSTM(d, f, K, 2.0, rng), (h0, c0)),
            (DCRNN(d, f, K - 1, rng), h0),
        ):
            _perturb(cell.parameters(), rng)
            ops = cell.operators(g)
            inputs = [h0] if not isinstance(state, tuple) else [h0, c0]

            def unroll(cell=cell, ops=ops, state=state):
                s, total = state, None
                for xt in xs:
                    s = cell.forward(xt, *ops, s)
                    term = readout(cell.output(s))
                    total = term if total is None else ad.add(total, term)
                return total

            yield type(cell).__name__, unroll, cell.parameters() + xs + inputs

        for kind in ("gconv-gru", "gconv-lstm", "dcrnn"):
            k = K - 1 if kind == "dcrnn" else K
            lam = None if kind == "dcrnn" else 2.0
            model = RecurrentGCN(ModelConfig(kind, d, f, k, lam, 0.5), seed=trial)
            _perturb(model.parameters(), rng)
            graphs = [g, random_graph(rng, n, p_edge=0.4), g]
            snaps = [
                Snapshot(gt, Tensor(rng.normal(size=(n, d)), requires_grad=True), Tensor(rng.normal(size=(n, 1))), t)
                for t, gt in enumerate(graphs)
            ]

            def sequence_loss(model=model, snaps=snaps):
                # a fresh generator per call keeps the dropout masks fixed
                drop = np.random.default_rng(99)
                state, total = None, None
                for s in snaps:
                    y_hat, state = model(s, state, training=True, rng=drop)
                    term = ad.mse_loss(y_hat, s.y)
                    total = term if total is None else ad.add(total, term)
                return total

            yield f"RecurrentGCN[{kind}]", sequence_loss, model.parameters() + [s.x for s in snaps]


def test_criterion_1_gradient_fidelity():
    with criterion(1, "gradient fidelity", limit=60) as info:
        rng = np.random.default_rng(2024)
        worst = {}
        for name, fn, tensors in _gradient_cases(rng):
            err = grad_check(fn, tensors, h=1e-5)
            worst[name] = max(worst.get(name, 0.0), err)
        bad = {k: v for k, v in worst.items() if not v < 1e-4}
        assert not bad, f"relative errors above 1e-4: {bad}"
        assert len(worst) == 9
        info["detail"] = f"max relative error {max(worst.values()):.2e} over {len(worst)} components"


def test_criterion_2_sparse_operator_oracles():
    with criterion(2, "sparse operator oracles", limit=10) as info:
        rng = np.random.default_rng(7)
        worst = 0.0
        for i in range(100):
            n = int(rng.integers(1, 17))
            g = random_graph(rng, n, p_edge=rng.uniform(0.0, 0.6), weighted=bool(i % 3))
            d, f, K = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 5))
            x = rng.normal(size=(n, d))

            lam_arg = "exact" if i % 2 else 2.0
            lap = dense_laplacian(g)
            lam = np.linalg.eigvalsh(lap)[-1] if lam_arg == "exact" else 2.0
            lam = lam if lam > 1e-12 else 1.0
            lap_hat = 2.0 * lap / lam - np.eye(n)
            cheb = ChebConv(d, f, K, rng)
            cheb.bias.values = rng.normal(size=(1, f))
            got = cheb.forward(Tensor(x), scaled_laplacian(g, lam_arg)).values
            want = chebyshev_power_oracle(x, lap_hat, [w.values for w in cheb.weights], cheb.bias.values)
            worst = max(worst, np.abs(got - want).max())

            diff = DiffusionConv(d, f, K - 1, rng)
            diff.bias.values = rng.normal(size=(1, f))
            got = diff.forward(Tensor(x), *random_walk_matrices(g)).values
            want = diffusion_power_oracle(
                x, g.dense_adjacency(), [w.values for w in diff.weights_out], [w.values for w in diff.weights_in],
                diff.bias.values,
            )
            worst = max(worst, np.abs(got - want).max())
        assert worst < 1e-10, f"max abs error {worst:.3e}"
        info["detail"] = f"max abs error {worst:.2e} on 100 graphs"


def test_criterion_3_step_count_law():
    with criterion(3, "regime step-count law") as info:
        rng = np.random.default_rng(3)
        g = random_graph(rng, 3, p_edge=0.7)
        sig = StaticGraphTemporalSignal(g, [rng.normal(size=(3, 1)) for _ in range(90)],
                                        [rng.normal(size=(3, 1)) for _ in range(90)])
        counts = {}
        for regime in ("cumulative", "incremental"):
            model = RecurrentGCN(ModelConfig("dcrnn", 1, 1, 1, None, 0.5), seed=0)
            opt = Adam(model.parameters())
            report = train(model, sig, regime, 100, opt, rng=np.random.default_rng(0))
            assert report.steps == opt.step_count
            counts[regime] = opt.step_count
        assert counts == {"cumulative": 100, "incremental": 9000}, counts
        info["detail"] = f"cumulative {counts['cumulative']}, incremental {counts['incremental']}"


def test_criterion_4_split_arithmetic():
    with criterion(4, "split arithmetic") as info:
        rng = np.random.default_rng(4)
        for T, expected in ((100, (90, 10)), (10, (9, 1))):
            g = random_graph(rng, 4)
            feats = [rng.normal(size=(4, 2)) for _ in range(T)]
            targets = [rng.normal(size=(4, 1)) for _ in range(T)]
            signals = {
                STATIC_GRAPH: build(STATIC_GRAPH, g, feats, targets),
                STATIC_SIGNAL: build(STATIC_SIGNAL, [random_graph(rng, 4) for _ in range(T)], feats[0], targets),
            }
            signals["dynamic"] = build(VARIANTS[0], [random_graph(rng, 4) for _ in range(T)], feats, targets)
            for sig in signals.values():
                tr, te = temporal_signal_split(sig, 0.9)
                assert (len(tr), len(te)) == expected
                joined = list(tr) + list(te)
                assert [s.t for s in joined] == list(range(T))
                for a, b in zip(joined, sig):
                    assert a.graph is b.graph
                    assert np.array_equal(a.x.values, b.x.values) and np.array_equal(a.y.values, b.y.values)
            static = signals[STATIC_GRAPH]
            tr, te = temporal_signal_split(static, 0.9)
            assert tr.graph is static.graph and te.graph is static.graph
            assert all(np.shares_memory(a, b) for a, b in zip(tr.features + te.features, static.features))
            assert all(np.shares_memory(a, b) for a, b in zip(tr.targets + te.targets, static.targets))
        info["detail"] = "100 -> 90/10, 10 -> 9/1, storage shared"


def test_criterion_5_learnability():
    with criterion(5, "learnability", limit=120) as info:
        sig = synthetic_diffusion_dataset(n=64, k=4, p=0.1, T=120, d=4, seed=0)
        tr, te = temporal_signal_split(sig, 0.9)
        # the best constant predictor of the test targets scores their variance
        stacked = np.concatenate([np.asarray(y).ravel() for y in te.targets])
        baseline = float(np.mean((stacked - stacked.mean()) ** 2))
        model = RecurrentGCN(ModelConfig("dcrnn", 4, 32, 1, None, 0.5), seed=0)
        train_cumulative(model, tr, 200, Adam(model.parameters(), lr=0.01), rng=np.random.default_rng(0))
        mse = evaluate_mse(model, te)
        ratio = mse / baseline
        info["detail"] = f"test MSE {mse:.4g}, constant-mean MSE {baseline:.4g}, ratio {ratio:.3f}"
        assert ratio <= 0.2, info["detail"]


def test_criterion_6_runtime_direction():
    with criterion(6, "runtime direction", limit=600) as info:
        rows = run_benchmark([64, 128, 256], 32, 32, 100, ["incremental", "cumulative"], 10, 32, 2, 0, state="reset")
        mean = {(r["nodes"], r["regime"]): r["mean_seconds"] for r in rows}
        sizes = (64, 128, 256)
        summary = ", ".join(f"n={n} inc {mean[n, 'incremental']:.3f}s cum {mean[n, 'cumulative']:.3f}s" for n in sizes)
        info["detail"] = summary
        slower = [n for n in sizes if not mean[n, "cumulative"] <= mean[n, "incremental"]]
        assert not slower, f"cumulative slower than incremental at n={slower}: {summary}"
        for regime in ("incremental", "cumulative"):
            series = [mean[n, regime] for n in sizes]
            assert all(a <= b for a, b in zip(series, series[1:])), f"{regime} not monotone in n: {summary}"


def test_criterion_7_determinism_and_round_trips(tmp_path):
    with criterion(7, "determinism and round trips") as info:
        sig = synthetic_diffusion_dataset(n=12, k=4, p=0.1, T=12, d=3, seed=5)
        data = tmp_path / "data.json"
        save_dataset(sig, data, name="acceptance")
        report = tmp_path / "report.json"
        for model in ("dcrnn", "gconv-gru", "gconv-lstm"):
            for regime in ("incremental", "cumulative"):
                blobs = []
                for _ in range(2):
                    code = main(["train", "--dataset", str(data), "--model", model, "--regime", regime,
                                 "--epochs", "3", "--filters", "4", "--seed", "11", "--out", str(report)],
                                out=io.StringIO())
                    assert code == 0
                    blobs.append(report.read_bytes())
                assert blobs[0] == blobs[1], f"{model}/{regime} reports differ"

        rng = np.random.default_rng(6)
        T, n = 5, 6
        feats = [rng.normal(size=(n, 2)) for _ in range(T)]
        targets = [rng.normal(size=(n, 1)) for _ in range(T)]
        graphs = [random_graph(rng, n) for _ in range(T)]
        variants = {
            STATIC_GRAPH: build(STATIC_GRAPH, graphs[0], feats, targets),
            STATIC_SIGNAL: build(STATIC_SIGNAL, graphs, feats[0], targets),
            VARIANTS[0]: build(VARIANTS[0], graphs, feats, targets),
        }
        for variant, s in variants.items():
            first, second = tmp_path / f"{variant}-1.json", tmp_path / f"{variant}-2.json"
            save_dataset(s, first, name=variant)
            save_dataset(load_dataset(first), second, name=variant)
            assert first.read_bytes() == second.read_bytes(), f"{variant} serialization is not byte-stable"

        model = RecurrentGCN(ModelConfig("gconv-lstm", 3, 4, 2, 2.0, 0.5), seed=3)
        train_cumulative(model, sig, 3, Adam(model.parameters()), rng=np.random.default_rng(1))
        ckpt = tmp_path / "model.json"
        save_checkpoint(model, ckpt)
        before, after = evaluate_mse(model, sig), evaluate_mse(load_checkpoint(ckpt), sig)
        assert before == after, f"checkpoint MSE {after!r} != {before!r}"
        info["detail"] = "6 report pairs identical, 3 variants byte-stable, checkpoint MSE exact"


@st.composite
def signal_components(draw):
    variant = draw(st.sampled_from(VARIANTS))
    T = draw(st.integers(1, 6))
    n = draw(st.integers(1, 6))
    d = draw(st.integers(1, 3))
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    corrupt_t = draw(st.one_of(st.none(), st.integers(0, T - 1)))
    corrupt = draw(st.sampled_from(["feature rows", "feature cols", "graph nodes", "target shape", "nan"]))

    def graph(m):
        adj = rng.random((m, m)) < 0.4
        np.fill_diagonal(adj, False)
        s, t = np.nonzero(adj)
        return Graph(m, np.vstack([s, t]), rng.uniform(0.1, 1.0, s.size))

    feats = [rng.normal(size=(n, d)) for _ in range(T)]
    targets = [rng.normal(size=(n, 1)) for _ in range(T)]
    graphs = [graph(n) for _ in range(T)]
    if corrupt_t is not None:
        if corrupt == "feature rows":
            feats[corrupt_t] = rng.normal(size=(n + 1, d))
        elif corrupt == "feature cols":
            feats[corrupt_t] = rng.normal(size=(n, d + 1))
        elif corrupt == "graph nodes":
            graphs[corrupt_t] = graph(n + 1)
        elif corrupt == "target shape":
            targets[corrupt_t] = rng.normal(size=(n, 2))
        else:
            feats[corrupt_t][0, 0] = np.nan
    if variant == STATIC_GRAPH:
        parts = (graphs[0], feats, targets)
    elif variant == STATIC_SIGNAL:
        parts = (graphs, feats[0], targets)
    else:
        parts = (graphs, feats, targets)
    return variant, parts


FUZZ_COUNTS = {"built": 0, "rejected": 0}


@settings(max_examples=400, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(signal_components())
def _fuzz_signal_invariants(components):
    variant, parts = components
    try:
        sig = build(variant, *parts)
    except SignalError:
        FUZZ_COUNTS["rejected"] += 1
        return
    FUZZ_COUNTS["built"] += 1
    n = sig.num_nodes
    snaps = list(sig)
    assert [s.t for s in snaps] == list(range(len(sig)))
    for s in snaps:
        assert s.graph.num_nodes == n
        assert s.x.shape == (n, sig.num_features) and s.y.shape == (n, 1)
        assert np.isfinite(s.x.values).all() and np.isfinite(s.y.values).all()
    if variant == STATIC_SIGNAL:
        assert all(s.x.values is snaps[0].x.values for s in snaps)
    if variant == STATIC_GRAPH:
        assert all(s.graph is snaps[0].graph for s in snaps) and len(sig.graphs) == 1
    if len(sig) >= 2:
        tr, te = temporal_signal_split(sig, 0.5)
        assert {s.graph.num_nodes for s in list(tr) + list(te)} == {n}
        if variant == STATIC_GRAPH:
            assert tr.graph is sig.graph and te.graph is sig.graph


def test_criterion_8_definitional_invariants():
    with criterion(8, "definitional invariants") as info:
        _fuzz_signal_invariants()
        assert FUZZ_COUNTS["built"] > 0 and FUZZ_COUNTS["rejected"] > 0, FUZZ_COUNTS
        info["detail"] = f"{FUZZ_COUNTS['built']} signals built, {FUZZ_COUNTS['rejected']} rejected cleanly"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

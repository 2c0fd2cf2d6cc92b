"""``tempograph`` command line: train, benchmark, inspect, fetch, generate.

Exit codes: 0 success, 1 configuration error, 2 dataset or file error,
3 numeric failure (non-finite loss or parameters).
"""

import argparse
import json
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .autodiff import NonFiniteError
from .data import (
    DatasetError,
    FetchError,
    describe,
    dumps_document,
    document_from_signal,
    fetch_dataset,
    load_dataset,
    parse_document,
    signal_from_document,
    synthetic_benchmark_sequence,
    synthetic_diffusion_dataset,
)
from .nn import MODEL_KINDS, CheckpointError, ModelConfig, RecurrentGCN, inspect_hyperparameters
from .nn.model import CHECKPOINT_FORMAT, model_from_checkpoint, save_checkpoint
from .signal import SignalError, temporal_signal_split
from .train import REGIMES, Adam, evaluate_mse, train, train_cumulative, train_incremental

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
BENCH_SCHEMA_VERSION = 1
BENCH_STATES = ("reset", "carry")

TRAIN_DEFAULTS = {
    "dataset": None,
    "model": "dcrnn",
    "filters": 32,
    "k": None,
    "lambda_max": "2.0",
    "dropout": 0.5,
    "lr": 0.01,
    "epochs": 100,
    "regime": "incremental",
    "train_ratio": 0.9,
    "seed": 0,
    "lag": None,
    "out": None,
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _lambda_max(text):
    if text == "exact":
        return "exact"
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"--lambda-max must be a positive number or 'exact', got {text!r}") from None
    if not value > 0:
        raise ConfigError(f"--lambda-max must be positive, got {value}")
    return value


def _default_k(model):
    # DCRNN(node_features, filters, 1): one diffusion hop; Chebyshev cells use K=2
    return 1 if model == "dcrnn" else 2


def build_parser():
    p = _Parser(prog="tempograph", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tempograph {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a recurrent GCN and evaluate it on the held-out periods")
    t.add_argument("--config", help="JSON run config, or a report whose 'config' is reused; flags override it")
    t.add_argument("--dataset", help="dataset JSON path or http(s) URL")
    t.add_argument("--model", choices=MODEL_KINDS)
    t.add_argument("--filters", type=int, help="recurrent filters (default 32)")
    t.add_argument("--k", type=int, help="Chebyshev order (GConv cells, default 2) or diffusion order (DCRNN, default 1)")
    t.add_argument("--lambda-max", dest="lambda_max", help="positive number or 'exact' (default 2.0)")
    t.add_argument("--dropout", type=float, help="dropout rate after the recurrent layer (default 0.5)")
    t.add_argument("--lr", type=float, help="Adam learning rate (default 0.01)")
    t.add_argument("--epochs", type=int, help="training epochs (default 100)")
    t.add_argument("--regime", choices=REGIMES, help="backpropagation regime (default incremental)")
    t.add_argument("--train-ratio", dest="train_ratio", type=float, help="fraction of periods used for training (default 0.9)")
    t.add_argument("--seed", type=int, help="seed for initialization and dropout (default 0)")
    t.add_argument("--lag", type=int, help="override the dataset's lag window")
    t.add_argument("--out", help="report JSON path")
    t.add_argument("--save-model", dest="save_model", help="write a checkpoint to this path")
    t.add_argument("--timing", action="store_true", help="include per-epoch wall-clock seconds in the report")
    t.add_argument("--cache-dir", dest="cache_dir", help="download cache for URL datasets")

    b = sub.add_parser("benchmark", help="time one training epoch per regime on synthetic dynamic graphs")
    b.add_argument("--nodes", type=int, nargs="+", default=[2**10], help="node counts to sweep (default 1024)")
    b.add_argument("--edges-per-node", dest="edges_per_node", type=int, default=2**5, help="capped at nodes/2")
    b.add_argument("--features", type=int, default=2**5)
    b.add_argument("--periods", type=int, default=100)
    b.add_argument("--rewire", type=float, default=0.1, help="Watts-Strogatz rewiring probability")
    b.add_argument("--regimes", nargs="+", choices=REGIMES, default=list(REGIMES))
    b.add_argument("--repeats", type=int, default=10)
    b.add_argument("--filters", type=int, default=32)
    b.add_argument("--k", type=int, default=2, help="Chebyshev order of the GConvGRU cell")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument(
        "--state", choices=BENCH_STATES, default="reset",
        help="hidden state per snapshot: 'reset' to zeros (default) or 'carry' through the epoch",
    )
    b.add_argument("--out", help="report JSON path")

    i = sub.add_parser("inspect", help="summarize a dataset or checkpoint file")
    i.add_argument("path")

    f = sub.add_parser("fetch", help="download a dataset into the local cache")
    f.add_argument("url")
    f.add_argument("--cache-dir", dest="cache_dir")

    g = sub.add_parser("generate", help="write a synthetic dataset document")
    g.add_argument("kind", choices=["diffusion", "benchmark"])
    g.add_argument("--nodes", type=int, default=None)
    g.add_argument("--edges-per-node", dest="edges_per_node", type=int, default=None)
    g.add_argument("--features", type=int, default=None)
    g.add_argument("--periods", type=int, default=None)
    g.add_argument("--rewire", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    return p


# -- train ------------------------------------------------------------------


def resolve_train_config(args):
    """Merge defaults, an optional config file and explicit flags into a RunConfig dict."""
    config = dict(TRAIN_DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read --config {args.config}: {exc}") from None
        if isinstance(loaded, dict) and isinstance(loaded.get("config"), dict):
            loaded = loaded["config"]
        if not isinstance(loaded, dict):
            raise ConfigError("--config must hold a JSON object")
        unknown = set(loaded) - set(TRAIN_DEFAULTS) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update({k: v for k, v in loaded.items() if k != "command"})
    for key in TRAIN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if not isinstance(config["dataset"], str) or not config["dataset"]:
        raise ConfigError("--dataset is required")
    for key in ("filters", "epochs", "seed"):
        if isinstance(config[key], bool) or not isinstance(config[key], int):
            raise ConfigError(f"{key} must be an integer, got {config[key]!r}")
    for key in ("k", "lag"):
        if config[key] is not None and (isinstance(config[key], bool) or not isinstance(config[key], int)):
            raise ConfigError(f"{key} must be an integer, got {config[key]!r}")
    for key in ("dropout", "lr", "train_ratio"):
        if isinstance(config[key], bool) or not isinstance(config[key], (int, float)):
            raise ConfigError(f"{key} must be a number, got {config[key]!r}")
    if config["model"] not in MODEL_KINDS:
        raise ConfigError(f"--model must be one of {MODEL_KINDS}")
    if config["regime"] not in REGIMES:
        raise ConfigError(f"--regime must be one of {REGIMES}")
    if config["k"] is None:
        config["k"] = _default_k(config["model"])
    lam = _lambda_max(str(config["lambda_max"]))
    config["lambda_max"] = lam
    if config["epochs"] < 1:
        raise ConfigError("--epochs must be a positive integer")
    if not 0 < config["train_ratio"] < 1:
        raise ConfigError("--train-ratio must lie strictly between 0 and 1")
    if not config["lr"] >= 0:
        raise ConfigError("--lr must be nonnegative")
    if config["lag"] is not None and config["lag"] < 0:
        raise ConfigError("--lag must be nonnegative")
    return {"command": "train", **config}


def _model_config(config, in_channels):
    try:
        return ModelConfig(
            model=config["model"],
            in_channels=in_channels,
            filters=config["filters"],
            k=config["k"],
            lambda_max=None if config["model"] == "dcrnn" else config["lambda_max"],
            dropout=config["dropout"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load(dataset, lag, cache_dir):
    if "://" in dataset:
        path = fetch_dataset(dataset, cache_dir)
    else:
        path = dataset
        if not Path(path).exists():
            raise DatasetError(f"dataset file not found: {path}")
    return load_dataset(path, lag=lag)


def cmd_train(args, out=sys.stdout):
    config = resolve_train_config(args)
    signal = _load(config["dataset"], config["lag"], args.cache_dir)
    try:
        train_sig, test_sig = temporal_signal_split(signal, config["train_ratio"])
    except SignalError as exc:
        raise DatasetError(str(exc)) from None
    model = RecurrentGCN(_model_config(config, signal.num_features), config["seed"])
    optimizer = Adam(model.parameters(), lr=config["lr"])
    rng = np.random.default_rng(config["seed"])
    report = train(model, train_sig, config["regime"], config["epochs"], optimizer, rng)
    report.config = config
    report.seed = config["seed"]
    report.test_mse = evaluate_mse(model, test_sig)
    if config["out"]:
        Path(config["out"]).write_text(report.to_json(include_timing=args.timing))
    if args.save_model:
        save_checkpoint(model, args.save_model)
    print(f"MSE: {report.test_mse:.4f}", file=out)
    return 0


# -- benchmark --------------------------------------------------------------


def _time_epoch(model, signal, regime, seed, carry_state):
    optimizer = Adam(model.parameters(), lr=0.01)
    rng = np.random.default_rng(seed)
    fn = train_cumulative if regime == "cumulative" else train_incremental
    return fn(model, signal, 1, optimizer, rng, carry_state=carry_state).epoch_seconds[0]


def run_benchmark(
    nodes, edges_per_node, features, periods, regimes, repeats, filters, k, seed, rewire=0.1, state="reset", log=None
):
    """Mean and spread of one-epoch wall-clock time per (node count, regime).

    ``state="reset"`` starts every snapshot from a zero hidden state, so the
    regimes differ only in update frequency; ``"carry"`` uses the trainer's
    default of carrying the state through the epoch.
    """
    if state not in BENCH_STATES:
        raise ValueError(f"state must be one of {BENCH_STATES}, got {state!r}")
    carry = state == "carry"
    results = []
    for n in nodes:
        kk = min(edges_per_node, n // 2)
        kk -= kk % 2
        signal = synthetic_benchmark_sequence(n, kk, features, periods, seed=seed, p=rewire)
        config = ModelConfig("gconv-gru", features, filters, k, 2.0, 0.5)
        # untimed warm-up: JIT compilation and per-graph operator caches
        for regime in regimes:
            _time_epoch(RecurrentGCN(config, seed), signal, regime, seed, carry)
        timings = {r: [] for r in regimes}
        for rep in range(repeats):
            order = regimes if rep % 2 == 0 else regimes[::-1]
            for regime in order:
                model = RecurrentGCN(config, seed + rep)
                timings[regime].append(_time_epoch(model, signal, regime, seed + rep, carry))
        for regime in regimes:
            ts = timings[regime]
            row = {
                "nodes": n,
                "edges_per_node": kk,
                "regime": regime,
                "mean_seconds": statistics.fmean(ts),
                "std_seconds": statistics.stdev(ts) if len(ts) > 1 else 0.0,
                "seconds": ts,
            }
            results.append(row)
            if log:
                print(f"n={n:5d} {regime:12s} {row['mean_seconds']:.4f}s +- {row['std_seconds']:.4f}", file=log)
    return results


def cmd_benchmark(args, out=sys.stdout):
    for name in ("features", "periods", "repeats", "filters", "k"):
        if getattr(args, name) < 1:
            raise ConfigError(f"--{name} must be positive")
    if any(n < 4 for n in args.nodes):
        raise ConfigError("--nodes values must be at least 4")
    config = {
        "command": "benchmark",
        "model": "gconv-gru",
        "nodes": args.nodes,
        "edges_per_node": args.edges_per_node,
        "features": args.features,
        "periods": args.periods,
        "rewire": args.rewire,
        "regimes": args.regimes,
        "repeats": args.repeats,
        "filters": args.filters,
        "k": args.k,
        "seed": args.seed,
        "state": args.state,
        "out": args.out,
    }
    try:
        results = run_benchmark(
            args.nodes, args.edges_per_node, args.features, args.periods, args.regimes,
            args.repeats, args.filters, args.k, args.seed, args.rewire, args.state, log=out,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = {
        "schema_version": BENCH_SCHEMA_VERSION,
        "library_version": __version__,
        "backend": BACKEND,
        "config": config,
        "seed": args.seed,
        "results": results,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    return 0


# -- inspect / fetch / generate ---------------------------------------------


def cmd_inspect(args, out=sys.stdout):
    try:
        text = Path(args.path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetError(f"cannot read {args.path}: {exc}") from None
    doc = parse_document(text)
    if isinstance(doc, dict) and doc.get("format") == CHECKPOINT_FORMAT:
        try:
            model = model_from_checkpoint(doc)
        except CheckpointError as exc:
            raise DatasetError(str(exc)) from None
        print("kind: checkpoint", file=out)
        for name, value in inspect_hyperparameters(model).items():
            print(f"{name}: {value}", file=out)
        print(f"init: {model.init_record()['scheme']} seed={model.seed}", file=out)
        for name, p in model.named_parameters():
            print(f"param {name}: {p.shape[0]}x{p.shape[1]}", file=out)
        return 0
    summary = describe(signal_from_document(doc))
    print("kind: dataset", file=out)
    for name, value in summary.items():
        print(f"{name}: {value}", file=out)
    return 0


def cmd_fetch(args, out=sys.stdout):
    try:
        path = fetch_dataset(args.url, args.cache_dir)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(path, file=out)
    return 0


def cmd_generate(args, out=sys.stdout):
    try:
        if args.kind == "diffusion":
            signal = synthetic_diffusion_dataset(
                args.nodes or 64, args.edges_per_node or 4, args.rewire, args.periods or 120,
                args.features or 4, args.seed,
            )
        else:
            signal = synthetic_benchmark_sequence(
                args.nodes or 2**10, args.edges_per_node or 2**5, args.features or 2**5,
                args.periods or 100, seed=args.seed, p=args.rewire,
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    Path(args.out).write_text(dumps_document(document_from_signal(signal, name=f"synthetic-{args.kind}")))
    print(args.out, file=out)
    return 0


COMMANDS = {
    "train": cmd_train,
    "benchmark": cmd_benchmark,
    "inspect": cmd_inspect,
    "fetch": cmd_fetch,
    "generate": cmd_generate,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        # overflow is detected and reported as exit 3; numpy's own warning would
        # only add noise to the one-line diagnostic
        with np.errstate(over="ignore", invalid="ignore"):
            return COMMANDS[args.command](args, out=out)
    except ConfigError as exc:
        print(f"tempograph: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, FetchError, CheckpointError, OSError) as exc:
        print(f"tempograph: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonFiniteError as exc:
        print(f"tempograph: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

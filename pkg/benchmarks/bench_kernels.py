"""Compare the numba and numpy kernel backends.

Two measurements:

* the sparse-dense product kernel alone, both implementations called side by
  side in this process on Watts-Strogatz scaled Laplacians;
* one training epoch per regime through ``tempograph benchmark``, run in a
  subprocess per backend with ``TEMPOGRAPH_DISABLE_NUMBA`` set accordingly.

Usage::

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --nodes 256 1024 --repeats 20 --json out.json
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile
import timeit

import numpy as np

from tempograph import _kernels
from tempograph.graph import scaled_laplacian, watts_strogatz


def bench_spmm(nodes, k, features, repeats, seed):
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare against")
    rows = []
    rng = np.random.default_rng(seed)
    for n in nodes:
        op = scaled_laplacian(watts_strogatz(n, min(k, n // 2 - n // 2 % 2), 0.1, rng), 2.0)
        x = rng.normal(size=(n, features))
        args = (op.indptr, op.indices, op.data, x)
        # first call compiles the numba kernel
        a, b = _kernels.csr_spmm_numba(*args), _kernels.csr_spmm_numpy(*args)
        row = {"nodes": n, "nnz": int(op.data.shape[0]), "max_abs_diff": float(np.abs(a - b).max())}
        for name, fn in (("numba", _kernels.csr_spmm_numba), ("numpy", _kernels.csr_spmm_numpy)):
            times = timeit.repeat(lambda fn=fn: fn(*args), number=10, repeat=repeats)
            row[f"{name}_ms"] = 1e3 * min(times) / 10
        row["speedup"] = row["numpy_ms"] / row["numba_ms"]
        rows.append(row)
    return rows


def bench_epochs(nodes, k, features, periods, repeats, seed):
    rows = []
    for backend, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, TEMPOGRAPH_DISABLE_NUMBA=flag)
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, "bench.json")
            cmd = [sys.executable, "-m", "tempograph.cli", "benchmark", "--nodes", *map(str, nodes),
                   "--edges-per-node", str(k), "--features", str(features), "--periods", str(periods),
                   "--repeats", str(repeats), "--seed", str(seed), "--out", out]
            subprocess.run(cmd, env=env, check=True, stdout=subprocess.DEVNULL)
            with open(out) as fh:
                report = json.load(fh)
        assert report["backend"] == backend, report["backend"]
        for r in report["results"]:
            rows.append({"backend": backend, "nodes": r["nodes"], "regime": r["regime"],
                         "mean_seconds": r["mean_seconds"], "std_seconds": r["std_seconds"]})
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, nargs="+", default=[256, 1024, 4096])
    p.add_argument("--epoch-nodes", type=int, nargs="+", default=[64, 256])
    p.add_argument("--edges-per-node", type=int, default=32)
    p.add_argument("--features", type=int, default=32)
    p.add_argument("--periods", type=int, default=20)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skip-epochs", action="store_true", help="only time the kernel itself")
    p.add_argument("--json", help="also write the results to this file")
    args = p.parse_args(argv)

    spmm = bench_spmm(args.nodes, args.edges_per_node, args.features, args.repeats, args.seed)
    print("sparse x dense kernel (best of repeats, per call)")
    print(f"{'nodes':>7} {'nnz':>8} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max diff':>10}")
    for r in spmm:
        print(f"{r['nodes']:7d} {r['nnz']:8d} {r['numba_ms']:10.3f} {r['numpy_ms']:10.3f} "
              f"{r['speedup']:8.2f} {r['max_abs_diff']:10.1e}")
    result = {"spmm": spmm}

    if not args.skip_epochs:
        epochs = bench_epochs(args.epoch_nodes, args.edges_per_node, args.features, args.periods,
                              args.repeats, args.seed)
        print("\none training epoch (mean over repeats)")
        print(f"{'backend':>8} {'nodes':>6} {'regime':>12} {'seconds':>9} {'std':>8}")
        for r in epochs:
            print(f"{r['backend']:>8} {r['nodes']:6d} {r['regime']:>12} {r['mean_seconds']:9.4f} {r['std_seconds']:8.4f}")
        result["epochs"] = epochs

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")


if __name__ == "__main__":
    main()

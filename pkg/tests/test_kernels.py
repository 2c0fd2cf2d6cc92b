import os
import subprocess
import sys

import numpy as np
import pytest

from tempograph import _kernels as K
from tempograph.graph import SparseOperator

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


def random_csr(rng, n_rows, n_cols, density):
    dense = np.where(rng.random((n_rows, n_cols)) < density, rng.normal(size=(n_rows, n_cols)), 0.0)
    op = SparseOperator.from_dense("rw_out", dense) if n_rows == n_cols else None
    return dense, op


@needs_numba
@pytest.mark.parametrize("n", [1, 2, 7, 33, 200])
def test_numba_and_numpy_kernels_agree(rng, n):
    for density in (0.0, 0.05, 0.5):
        dense, op = random_csr(rng, n, n, density)
        x = rng.normal(size=(n, 5))
        a = K.csr_spmm_numba(op.indptr, op.indices, op.data, x)
        b = K.csr_spmm_numpy(op.indptr, op.indices, op.data, x)
        assert np.abs(a - b).max(initial=0.0) < 1e-12
        assert np.abs(a - dense @ x).max(initial=0.0) < 1e-12
        ra = K.csr_rowsum_numba(op.indptr, op.data)
        rb = K.csr_rowsum_numpy(op.indptr, op.data)
        assert np.abs(ra - rb).max(initial=0.0) < 1e-12
        assert np.abs(ra - dense.sum(axis=1)).max(initial=0.0) < 1e-12


def test_numpy_kernel_handles_empty_rows():
    indptr = np.array([0, 0, 2, 2], dtype=np.int64)
    indices = np.array([0, 2], dtype=np.int64)
    data = np.array([2.0, 3.0])
    x = np.array([[1.0], [10.0], [100.0]])
    assert K.csr_spmm_numpy(indptr, indices, data, x).tolist() == [[0.0], [302.0], [0.0]]
    assert K.csr_rowsum_numpy(indptr, data).tolist() == [0.0, 5.0, 0.0]


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", "numba" if K.HAVE_NUMBA else "numpy")])
def test_backend_env_flag(flag, expected):
    env = dict(os.environ, TEMPOGRAPH_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from tempograph import _kernels; print(_kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected


def test_backend_benchmark_script_runs(tmp_path):
    import json
    import subprocess
    import sys
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    out = tmp_path / "bench.json"
    proc = subprocess.run([sys.executable, str(script), "--nodes", "16", "--skip-epochs", "--repeats", "1",
                           "--json", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    row = json.loads(out.read_text())["spmm"][0]
    assert row["nodes"] == 16 and row["max_abs_diff"] < 1e-12

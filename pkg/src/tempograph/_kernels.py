"""Hot numeric kernels.

Each kernel has a numba ``@njit`` implementation and a pure-numpy fallback.
The active backend is chosen once at import time: numba is used when it
imports cleanly and ``TEMPOGRAPH_DISABLE_NUMBA`` is unset or ``0``.
Both implementations stay importable so they can be benchmarked and
cross-checked side by side.
"""

import os

import numpy as np

_DISABLE = os.environ.get("TEMPOGRAPH_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLE
BACKEND = "numba" if USE_NUMBA else "numpy"


def csr_spmm_numpy(indptr, indices, data, x):
    """Sparse (CSR) times dense, numpy only.

    Row sums are formed with ``np.add.reduceat`` over the nonempty rows, so
    the summation order within a row is the stored column order.
    """
    n_rows = indptr.shape[0] - 1
    out = np.zeros((n_rows, x.shape[1]), dtype=np.float64)
    if indices.shape[0] == 0:
        return out
    contrib = data[:, None] * x[indices]
    counts = np.diff(indptr)
    nonempty = counts > 0
    out[nonempty] = np.add.reduceat(contrib, indptr[:-1][nonempty], axis=0)
    return out


def csr_rowsum_numpy(indptr, data):
    n_rows = indptr.shape[0] - 1
    out = np.zeros(n_rows, dtype=np.float64)
    counts = np.diff(indptr)
    nonempty = counts > 0
    if data.shape[0]:
        out[nonempty] = np.add.reduceat(data, indptr[:-1][nonempty])
    return out


if HAVE_NUMBA:

    @njit(cache=False)
    def csr_spmm_numba(indptr, indices, data, x):
        n_rows = indptr.shape[0] - 1
        n_cols = x.shape[1]
        out = np.zeros((n_rows, n_cols), dtype=np.float64)
        for i in range(n_rows):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                w = data[p]
                for c in range(n_cols):
                    out[i, c] += w * x[j, c]
        return out

    @njit(cache=False)
    def csr_rowsum_numba(indptr, data):
        n_rows = indptr.shape[0] - 1
        out = np.zeros(n_rows, dtype=np.float64)
        for i in range(n_rows):
            s = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                s += data[p]
            out[i] = s
        return out

else:  # pragma: no cover
    csr_spmm_numba = None
    csr_rowsum_numba = None


if USE_NUMBA:
    csr_spmm = csr_spmm_numba
    csr_rowsum = csr_rowsum_numba
else:
    csr_spmm = csr_spmm_numpy
    csr_rowsum = csr_rowsum_numpy

"""Hot numeric kernels for the similarity core.

Each kernel has a numba @njit implementation and a pure-numpy fallback.
The DEVINV_KERNELS environment variable picks the backend:

    DEVINV_KERNELS=numba   force the jitted kernels (error if numba absent)
    DEVINV_KERNELS=numpy   force the numpy fallback
    unset / auto           numba when importable, numpy otherwise

Both backends produce the same values to float64 rounding; within one
backend results are bitwise deterministic (serial loops, no fastmath).
`benchmarks/bench_kernels.py` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

ENV_FLAG = "DEVINV_KERNELS"


def active_backend(override: str | None = None) -> str:
    """Resolve the backend name ("numba" or "numpy") for this call."""
    choice = (override or os.environ.get(ENV_FLAG, "auto")).lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown kernels backend {choice!r}")
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("DEVINV_KERNELS=numba but numba is not importable")
        return "numba"
    return "numba" if HAVE_NUMBA else "numpy"


# --- numba implementations --------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _pairwise_cosine_numba(vectors, norms):
        n = vectors.shape[0]
        dim = vectors.shape[1]
        out = np.empty((n, n), dtype=np.float64)
        for i in range(n):
            out[i, i] = 1.0
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(dim):
                    acc += vectors[i, k] * vectors[j, k]
                sim = acc / (norms[i] * norms[j])
                if sim > 1.0:
                    sim = 1.0
                elif sim < -1.0:
                    sim = -1.0
                out[i, j] = sim
                out[j, i] = sim
        return out

    @njit(cache=True)
    def _cosine_scores_numba(vectors, norms, query, qnorm):
        n = vectors.shape[0]
        dim = vectors.shape[1]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            for k in range(dim):
                acc += vectors[i, k] * query[k]
            sim = acc / (norms[i] * qnorm)
            if sim > 1.0:
                sim = 1.0
            elif sim < -1.0:
                sim = -1.0
            out[i] = sim
        return out

    @njit(cache=True)
    def _l2_distances_numba(vectors, query):
        n = vectors.shape[0]
        dim = vectors.shape[1]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            for k in range(dim):
                diff = vectors[i, k] - query[k]
                acc += diff * diff
            out[i] = np.sqrt(acc)
        return out


# --- numpy fallbacks --------------------------------------------------------

def _pairwise_cosine_numpy(vectors: np.ndarray, norms: np.ndarray) -> np.ndarray:
    out = (vectors @ vectors.T) / np.outer(norms, norms)
    np.clip(out, -1.0, 1.0, out=out)
    # mirror the upper triangle so out[i][j] == out[j][i] bitwise
    upper = np.triu_indices(out.shape[0], k=1)
    out[(upper[1], upper[0])] = out[upper]
    np.fill_diagonal(out, 1.0)
    return out


def _cosine_scores_numpy(
    vectors: np.ndarray, norms: np.ndarray, query: np.ndarray, qnorm: float
) -> np.ndarray:
    out = (vectors @ query) / (norms * qnorm)
    np.clip(out, -1.0, 1.0, out=out)
    return out


def _l2_distances_numpy(vectors: np.ndarray, query: np.ndarray) -> np.ndarray:
    diff = vectors - query
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


# --- dispatch ----------------------------------------------------------------

def pairwise_cosine(
    vectors: np.ndarray, norms: np.ndarray, backend: str | None = None
) -> np.ndarray:
    """All-pairs cosine matrix: unit diagonal, mirrored off-diagonal, clamped."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float64)
    norms = np.ascontiguousarray(norms, dtype=np.float64)
    if active_backend(backend) == "numba":
        return _pairwise_cosine_numba(vectors, norms)
    return _pairwise_cosine_numpy(vectors, norms)


def cosine_scores(
    vectors: np.ndarray,
    norms: np.ndarray,
    query: np.ndarray,
    qnorm: float,
    backend: str | None = None,
) -> np.ndarray:
    """Cosine similarity of one query against every row, clamped to [-1, 1]."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float64)
    norms = np.ascontiguousarray(norms, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    if active_backend(backend) == "numba":
        return _cosine_scores_numba(vectors, norms, query, float(qnorm))
    return _cosine_scores_numpy(vectors, norms, query, float(qnorm))


def l2_distances(
    vectors: np.ndarray, query: np.ndarray, backend: str | None = None
) -> np.ndarray:
    """Euclidean distance of one query against every row."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    if active_backend(backend) == "numba":
        return _l2_distances_numba(vectors, query)
    return _l2_distances_numpy(vectors, query)


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs so timed code runs steady-state."""
    v = np.array([[1.0, 0.0], [0.0, 1.0]])
    n = np.array([1.0, 1.0])
    q = np.array([1.0, 0.0])
    for backend in ("numpy", "numba") if HAVE_NUMBA else ("numpy",):
        pairwise_cosine(v, n, backend=backend)
        cosine_scores(v, n, q, 1.0, backend=backend)
        l2_distances(v, q, backend=backend)

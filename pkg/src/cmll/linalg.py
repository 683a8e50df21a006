"""Dense symmetric eigensolvers and column centering.

Everything works on plain float64 ndarrays. Eigenvector signs are fixed
(the largest-magnitude component of each vector is made positive, lowest
index winning ties) so repeated runs give bit-identical results.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf

from .errors import InputError, NumericError

# relative tolerance for the symmetry check on eigensolver inputs
SYM_RTOL = 1e-10


def seeded_rng(seed: int) -> np.random.Generator:
    """Generator from any 64-bit integer (negative seeds wrap two's-complement)."""
    return np.random.default_rng(int(seed) % 2**64)


class EigPairs(NamedTuple):
    """Eigenvalues in non-increasing order with matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate `a` as a non-empty 2-D float64 array with finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise InputError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains non-finite entries")
    return arr


def as_vector(a, name: str = "vector") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains non-finite entries")
    return arr


def center_columns(m) -> tuple[np.ndarray, np.ndarray]:
    """Subtract each column's mean.

    Returns (centered, col_means). Equivalent to left-multiplying by the
    centering operator I - ee^t/N without forming it.
    """
    arr = as_matrix(m, "matrix")
    means = arr.mean(axis=0)
    return arr - means, means


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-|entry| component is positive."""
    v = np.array(vectors, dtype=np.float64, copy=True)
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
    return v


def _check_symmetric(a: np.ndarray, name: str) -> None:
    n, m = a.shape
    if n != m:
        raise InputError(f"{name} must be square, got {n}x{m}")
    scale = float(np.abs(a).max())
    if scale > 0 and float(np.abs(a - a.T).max()) > SYM_RTOL * scale:
        raise InputError(f"{name} is not symmetric within {SYM_RTOL:g} relative")


def sym_eig_topk(a, k: int) -> EigPairs:
    """The k algebraically largest eigenpairs of a symmetric matrix.

    Full decomposition followed by truncation; fine at desk scale. Columns
    of `vectors` are orthonormal and sign-fixed; `values` is non-increasing.
    """
    arr = as_matrix(a, "A")
    _check_symmetric(arr, "A")
    n = arr.shape[0]
    if not isinstance(k, (int, np.integer)) or not 1 <= int(k) <= n:
        raise InputError(f"k must be in [1, {n}], got {k!r}")
    k = int(k)
    sym = 0.5 * (arr + arr.T)
    w, v = np.linalg.eigh(sym)
    values = np.ascontiguousarray(w[::-1][:k])
    vectors = fix_signs(v[:, ::-1][:, :k])
    return EigPairs(values=values, vectors=np.ascontiguousarray(vectors))


def default_ridge(q: np.ndarray) -> float:
    """Scale-invariant jitter keeping the metric factorization stable."""
    return 1e-8 * float(np.trace(q)) / q.shape[0]


def gen_sym_eig_topk(b, q, k: int, ridge: float | None = None) -> EigPairs:
    """Top-k pairs of the pencil B r = theta * Q~ r with Q~ = Q + ridge*I.

    Reduced by Cholesky whitening: factor Q~ = L L^t, solve the ordinary
    problem for L^{-1} B L^{-t}, and map vectors back as r = L^{-t} u. The
    returned vectors satisfy r_i^t Q~ r_j = delta_ij.
    """
    barr = as_matrix(b, "B")
    qarr = as_matrix(q, "Q")
    _check_symmetric(barr, "B")
    _check_symmetric(qarr, "Q")
    if barr.shape != qarr.shape:
        raise InputError(f"B and Q sizes differ: {barr.shape} vs {qarr.shape}")
    if ridge is None:
        ridge = default_ridge(qarr)
    if ridge < 0:
        raise InputError(f"ridge must be >= 0, got {ridge}")
    n = qarr.shape[0]
    qt = qarr + ridge * np.eye(n)
    chol, info = dpotrf(qt, lower=1, clean=1, overwrite_a=0)
    if info != 0:
        raise NumericError(
            f"Cholesky of the ridged metric failed at pivot {info} "
            f"(metric not positive definite; increase ridge)",
            pivot=int(info) if info > 0 else None,
        )
    # whiten: M = L^{-1} B L^{-t}; symmetric in exact arithmetic, so the
    # roundoff skew from the triangular solves is averaged out
    t = solve_triangular(chol, barr, lower=True)
    m_mat = solve_triangular(chol, t.T, lower=True).T
    m_mat = 0.5 * (m_mat + m_mat.T)
    pairs = sym_eig_topk(m_mat, k)
    r = solve_triangular(chol.T, pairs.vectors, lower=False)
    return EigPairs(values=pairs.values, vectors=np.ascontiguousarray(fix_signs(r)))

"""Kernel matrices, bandwidth selection, and the kernelized embedding.

The kernel fit mirrors the linear one with the projection expressed in the
span of kernel feature vectors: the dependence factor becomes Qc R (Qc the
column-centered training kernel) and the projection step turns into a
generalized eigenproblem with the (ridged) kernel as metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .embedding import CmllParams, _sweep_trace_entry, _top_eigvecs_gram, decoder_w, objective_gamma
from .errors import InputError, InvalidStateError
from .linalg import as_matrix, gen_sym_eig_topk, seeded_rng, sym_eig_topk

MEDIAN_HEURISTIC = "median-heuristic"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice. gamma may be a positive float or "median-heuristic"
    (resolve with resolve_gamma_median before evaluating)."""

    kind: str = "rbf"
    gamma: float | str | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise InputError(f"unknown kernel kind {self.kind!r}")

    def is_resolved(self) -> bool:
        if self.kind == "linear":
            return True
        return isinstance(self.gamma, (int, float)) and float(self.gamma) > 0


def kernel_matrix(spec: KernelSpec, a, b) -> np.ndarray:
    """Pairwise kernel values between the rows of a and b.

    linear: a b^t. rbf: exp(-gamma ||a_i - b_j||^2). Passing the same array
    object twice yields an exactly symmetric matrix (rbf: unit diagonal).
    """
    same = a is b
    a = as_matrix(a, "A")
    b = a if same else as_matrix(b, "B")
    if a.shape[1] != b.shape[1]:
        raise InputError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    if spec.kind == "linear":
        k = a @ b.T
        if same:
            k = 0.5 * (k + k.T)
        return k
    if not spec.is_resolved():
        raise InvalidStateError(
            "rbf bandwidth unresolved; set a positive gamma or call resolve_gamma_median"
        )
    gamma = float(spec.gamma)
    sq = np.maximum(
        (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T),
        0.0,
    )
    if same:
        np.fill_diagonal(sq, 0.0)
        sq = 0.5 * (sq + sq.T)
    return np.exp(-gamma * sq)


def resolve_gamma_median(x, seed: int = 0, max_rows: int = 1000) -> float:
    """1 / median pairwise squared distance over a seeded row sample."""
    x = as_matrix(x, "X")
    n = x.shape[0]
    if n < 2:
        raise InputError("median heuristic needs at least 2 rows")
    if n > max_rows:
        keep = np.sort(seeded_rng(seed).choice(n, size=max_rows, replace=False))
        x = x[keep]
        n = max_rows
    sq_norms = (x * x).sum(axis=1)
    sq = np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * (x @ x.T), 0.0)
    med = float(np.median(sq[np.triu_indices(n, k=1)]))
    if med <= 0:
        raise InputError("median pairwise squared distance is zero (duplicate points)")
    return 1.0 / med


def resolve_spec(spec: KernelSpec, x, seed: int = 0) -> KernelSpec:
    """Return a spec whose gamma is a concrete positive float."""
    if spec.kind == "linear" or spec.is_resolved():
        return spec
    if spec.gamma in (None, MEDIAN_HEURISTIC):
        return KernelSpec(kind=spec.kind, gamma=resolve_gamma_median(x, seed=seed))
    raise InputError(f"cannot resolve gamma value {spec.gamma!r}")


@dataclass(frozen=True)
class KcmllModel:
    """Fitted kernel embedding.

    R holds combination coefficients (N x d) over kernel feature vectors;
    projecting a new row subtracts the stored training-kernel column means
    and applies R^t. X_train is retained for kernel evaluation.
    """

    R: np.ndarray
    V: np.ndarray
    W: np.ndarray
    X_train: np.ndarray
    q_col_means: np.ndarray
    spec: KernelSpec
    params: CmllParams
    trace: list = field(default_factory=list)
    method: str = "kcmll"

    def __post_init__(self):
        # pin C layout so predictions are bit-stable across serialization
        for name in ("R", "V", "W", "X_train", "q_col_means"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name)))


def _metric_orthonormalize(r: np.ndarray, qt: np.ndarray) -> np.ndarray:
    """Rescale r so r^t Q~ r = I (Cholesky of the small Gram)."""
    c = r.T @ qt @ r
    l = np.linalg.cholesky(0.5 * (c + c.T))
    return np.linalg.solve(l, r.T).T


def fit_kcmll(data: Dataset, spec: KernelSpec, params: CmllParams,
              ridge: float | None = None) -> KcmllModel:
    """Kernel analogue of the alternating fit.

    V-step: top-m eigenvectors of beta*(Qc R)(Qc R)^t + Y Y^t via the Gram
    factor trick. R-step: top-d generalized eigenvectors of
    (Qc^t V)(Qc^t V)^t against the ridged kernel metric. Stopping rule and
    decoder match the linear fit. `ridge` overrides the metric jitter.
    """
    if not spec.is_resolved():
        raise InvalidStateError("kernel spec must be resolved before fitting")
    params.validate(data.n, data.n_features, data.n_labels, kernel=True)
    x, y = data.X, data.Y
    q = kernel_matrix(spec, x, x)
    col_means = q.mean(axis=0)
    qc = q - col_means[None, :]

    rng = seeded_rng(params.seed)
    r0 = rng.standard_normal((data.n, params.d))
    ridge_val = ridge if ridge is not None else 1e-8 * float(np.trace(q)) / data.n
    qt = q + ridge_val * np.eye(data.n)
    r = _metric_orthonormalize(r0, qt)

    sqrt_beta = np.sqrt(params.beta)
    prev = 0.0
    trace = []
    v = None
    for _ in range(params.maxc):
        f = qc @ r
        factors = [sqrt_beta * f, y] if params.beta > 0 else [y]
        v = _top_eigvecs_gram(factors, params.m)
        t = qc.T @ v
        r = gen_sym_eig_topk(t @ t.T, q, params.d, ridge=ridge_val).vectors
        gamma, delta = _sweep_trace_entry(objective_gamma(v, r, qc, y, params.beta), prev)
        trace.append((gamma, delta))
        prev = gamma
        if delta < params.tol:
            break
    w = decoder_w(v, y, params.lam)
    return KcmllModel(
        R=r, V=v, W=w, X_train=x.copy(), q_col_means=col_means,
        spec=spec, params=params, trace=trace,
    )


def kernel_project(model: KcmllModel, x_new) -> np.ndarray:
    """Embed new rows: R^t (q(X_train, x) - training-kernel column mean)."""
    x = as_matrix(x_new, "X_new")
    if x.shape[1] != model.X_train.shape[1]:
        raise InputError(
            f"X_new has {x.shape[1]} features, model expects {model.X_train.shape[1]}"
        )
    k = kernel_matrix(model.spec, x, model.X_train)
    return (k - model.q_col_means[None, :]) @ model.R

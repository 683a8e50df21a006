"""Joint feature/label embedding by alternating eigen-updates.

The optimizer maximizes

    tr[ V^t (beta * Xc P P^t Xc^t + Y Y^t) V ]

over orthonormal V (N x m) and P (D x d), with Xc the column-centered
feature matrix and Y left uncentered. Each half-step is an exact top-k
eigenproblem, so the recorded objective never decreases.

The N x N operator above is never materialized: with F = Xc P its top
eigenvectors come from the Gram matrix of the factor G = [sqrt(beta)*F, Y]
((d+M)^2 instead of N^2), mapped back through G and re-orthonormalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InputError
from .linalg import as_matrix, center_columns, fix_signs, seeded_rng, sym_eig_topk

# guard for the relative-change denominator when the objective starts near zero
DELTA_FLOOR = 1e-12


@dataclass(frozen=True)
class CmllParams:
    """Hyperparameters of the alternating fit.

    beta    normalized balance between the dependence and recovery terms
    lam     ridge coefficient of the label decoder
    m, d    embedded label / feature dimensions
    maxc    maximum number of alternation sweeps
    tol     relative objective-change tolerance for convergence
    seed    initialization seed
    """

    beta: float
    lam: float
    m: int
    d: int
    maxc: int = 50
    tol: float = 1e-5
    seed: int = 0

    def validate(self, n: int, n_features: int, n_labels: int, kernel: bool = False) -> None:
        if self.beta < 0:
            raise InputError(f"beta must be >= 0, got {self.beta}")
        if self.lam < 0:
            raise InputError(f"lambda must be >= 0, got {self.lam}")
        if not 1 <= self.m <= n_labels:
            raise InputError(f"m must be in [1, {n_labels}], got {self.m}")
        if self.m > n:
            raise InputError(f"m={self.m} exceeds the number of instances {n}")
        d_cap = n if kernel else n_features
        if not 1 <= self.d <= d_cap:
            raise InputError(f"d must be in [1, {d_cap}], got {self.d}")
        if self.tol <= 0:
            raise InputError(f"tol must be > 0, got {self.tol}")
        if self.maxc < 1:
            raise InputError(f"maxc must be >= 1, got {self.maxc}")


@dataclass(frozen=True)
class CmllModel:
    """Fitted linear embedding.

    P projects centered features (D x d), V holds the embedded training
    labels (N x m), W decodes embedded labels back to label scores (m x M).
    `trace` records (objective, relative change) per sweep.
    """

    P: np.ndarray
    V: np.ndarray
    W: np.ndarray
    feature_means: np.ndarray
    params: CmllParams
    trace: list = field(default_factory=list)
    method: str = "cmll"

    def __post_init__(self):
        # pin C layout so predictions are bit-stable across serialization
        for name in ("P", "V", "W", "feature_means"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name)))


def objective_gamma(V, P, Xc, Y, beta: float) -> float:
    """Trace objective beta*||(Xc P)^t V||_F^2 + ||Y^t V||_F^2.

    Xc must already be column-centered; the expanded form avoids any
    N x N product.
    """
    V = as_matrix(V, "V")
    P = as_matrix(P, "P")
    Xc = as_matrix(Xc, "Xc")
    Y = as_matrix(Y, "Y")
    if Xc.shape[0] != V.shape[0] or Y.shape[0] != V.shape[0]:
        raise InputError("V, Xc, Y row counts differ")
    if Xc.shape[1] != P.shape[0]:
        raise InputError(f"Xc has {Xc.shape[1]} columns but P has {P.shape[0]} rows")
    dep = float(np.linalg.norm((Xc @ P).T @ V, "fro") ** 2)
    rec = float(np.linalg.norm(Y.T @ V, "fro") ** 2)
    return beta * dep + rec


def decoder_w(V, Y, lam: float) -> np.ndarray:
    """Closed-form ridge decoder V^t Y / (1 + lambda).

    Minimizes ||Y - V W||_F^2 + lambda ||W||_F^2 for orthonormal V (the
    caller's obligation, checked loosely by downstream tests).
    """
    V = as_matrix(V, "V")
    Y = as_matrix(Y, "Y")
    if V.shape[0] != Y.shape[0]:
        raise InputError("V and Y row counts differ")
    if lam < 0:
        raise InputError(f"lambda must be >= 0, got {lam}")
    return (V.T @ Y) / (1.0 + lam)


def _orthonormal_complement(basis: np.ndarray, count: int) -> np.ndarray:
    """Deterministic orthonormal vectors spanning part of basis's complement."""
    n = basis.shape[0]
    cols = [basis[:, j] for j in range(basis.shape[1])]
    extra = []
    for j in range(n):
        if len(extra) == count:
            break
        v = np.zeros(n)
        v[j] = 1.0
        for _ in range(2):  # twice-is-enough re-orthogonalization
            for b in cols:
                v -= (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            v /= norm
            cols.append(v)
            extra.append(v)
    if len(extra) < count:
        raise InputError("cannot extend basis: complement exhausted")
    return np.column_stack(extra)


def _top_eigvecs_gram(factors, k: int) -> np.ndarray:
    """Top-k orthonormal eigenvectors of sum_i G_i G_i^t via the small Gram matrix.

    Deficient rank is padded with a deterministic orthonormal complement
    (those directions carry eigenvalue zero, so any orthonormal choice is
    optimal).
    """
    g = np.hstack(factors)
    n = g.shape[0]
    c = g.T @ g
    w, s = np.linalg.eigh(0.5 * (c + c.T))
    w = w[::-1]
    s = s[:, ::-1]
    wmax = float(w[0]) if w.size else 0.0
    rank = int(np.sum(w > max(wmax, 0.0) * 1e-12)) if wmax > 0 else 0
    take = min(rank, k)
    if take:
        u = (g @ fix_signs(s[:, :take])) / np.sqrt(w[:take])
        # map-back loses a little orthogonality; clean it up without reordering
        q, r = np.linalg.qr(u)
        u = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    else:
        u = np.empty((n, 0))
    if take < k:
        u = np.hstack([u, _orthonormal_complement(u, k - take)])
    return fix_signs(u)


def _init_projection(n_rows: int, n_cols: int, seed: int) -> np.ndarray:
    g = seeded_rng(seed).standard_normal((n_rows, n_cols))
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def _sweep_trace_entry(gamma: float, prev: float) -> tuple[float, float]:
    delta = abs(gamma - prev) / max(abs(prev), DELTA_FLOOR)
    return gamma, delta


def fit_cmll(data: Dataset, params: CmllParams, P0=None) -> CmllModel:
    """Alternating fit: V from the current P, then P from the new V.

    Stops after `maxc` sweeps or when the relative objective change drops
    below `tol`. `P0` overrides the seeded random orthonormal initializer
    (used by rotation-equivariance tests).
    """
    params.validate(data.n, data.n_features, data.n_labels)
    x, y = data.X, data.Y
    xc, means = center_columns(x)
    if P0 is not None:
        p = as_matrix(P0, "P0")
        if p.shape != (data.n_features, params.d):
            raise InputError(f"P0 must be {data.n_features}x{params.d}, got {p.shape}")
    else:
        p = _init_projection(data.n_features, params.d, params.seed)

    sqrt_beta = np.sqrt(params.beta)
    prev = 0.0
    trace = []
    v = None
    for _ in range(params.maxc):
        f = xc @ p
        factors = [sqrt_beta * f, y] if params.beta > 0 else [y]
        v = _top_eigvecs_gram(factors, params.m)
        t = xc.T @ v
        p = sym_eig_topk(t @ t.T, params.d).vectors
        gamma, delta = _sweep_trace_entry(objective_gamma(v, p, xc, y, params.beta), prev)
        trace.append((gamma, delta))
        prev = gamma
        if delta < params.tol:
            break
    w = decoder_w(v, y, params.lam)
    return CmllModel(P=p, V=v, W=w, feature_means=means, params=params, trace=trace)


def fit_cmll_y(data: Dataset, params: CmllParams) -> CmllModel:
    """Label-side special case: single V-solve with features used raw.

    Requires d = D; the feature projection degenerates to the identity and
    V comes from one eigen-solve of beta * Xc Xc^t + Y Y^t.
    """
    params.validate(data.n, data.n_features, data.n_labels)
    if params.d != data.n_features:
        raise InputError(
            f"label-only fit requires d = D ({data.n_features}), got d={params.d}"
        )
    x, y = data.X, data.Y
    xc, means = center_columns(x)
    sqrt_beta = np.sqrt(params.beta)
    factors = [sqrt_beta * xc, y] if params.beta > 0 else [y]
    v = _top_eigvecs_gram(factors, params.m)
    p = np.eye(data.n_features)
    gamma, delta = _sweep_trace_entry(objective_gamma(v, p, xc, y, params.beta), 0.0)
    w = decoder_w(v, y, params.lam)
    return CmllModel(
        P=p, V=v, W=w, feature_means=means, params=params,
        trace=[(gamma, delta)], method="cmll_y",
    )


def fit_mddm(data: Dataset, params: CmllParams) -> CmllModel:
    """Feature-side special case: single P-solve with labels uncompressed.

    Requires m = M. The V slot stores Y itself and W is the identity, so
    decoding is a pass-through on raw label scores. The trace records the
    dependence objective of the one P-solve.
    """
    params.validate(data.n, data.n_features, data.n_labels)
    if params.m != data.n_labels:
        raise InputError(
            f"feature-only fit requires m = M ({data.n_labels}), got m={params.m}"
        )
    x, y = data.X, data.Y
    xc, means = center_columns(x)
    t = xc.T @ y
    pairs = sym_eig_topk(t @ t.T, params.d)
    dep = float(np.sum(pairs.values))
    gamma, delta = _sweep_trace_entry(dep, 0.0)
    return CmllModel(
        P=pairs.vectors, V=y.copy(), W=np.eye(data.n_labels),
        feature_means=means, params=params, trace=[(gamma, delta)], method="mddm",
    )


def encode_features(model: CmllModel, x_new) -> np.ndarray:
    """Project new rows: (X_new - feature_means) P."""
    x = as_matrix(x_new, "X_new")
    if x.shape[1] != model.feature_means.shape[0]:
        raise InputError(
            f"X_new has {x.shape[1]} features, model expects {model.feature_means.shape[0]}"
        )
    return (x - model.feature_means) @ model.P

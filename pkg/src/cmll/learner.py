"""Ridge / kernel-ridge learning step, the prediction pipeline, and thresholding.

Intercepts are handled by centering inputs and targets with stored means;
there is no augmented constant column. For the linear kernel the dual and
primal solutions therefore coincide whenever rho > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotrs

from .embedding import CmllModel, encode_features
from .errors import InputError, NumericError
from .kernels import KcmllModel, KernelSpec, kernel_matrix, kernel_project
from .linalg import as_matrix


def _solve_spd(gram: np.ndarray, rhs: np.ndarray, advice: str) -> np.ndarray:
    """Cholesky solve that treats numerically rank-deficient systems as errors."""
    chol, info = dpotrf(gram, lower=1, clean=0, overwrite_a=0)
    pivots = np.diag(chol) ** 2
    floor = gram.shape[0] * np.finfo(np.float64).eps * max(float(np.diag(gram).max()), 1e-300)
    if info != 0 or pivots.min() <= floor:
        raise NumericError(advice, pivot=int(info) if info > 0 else None)
    sol, info = dpotrs(chol, rhs, lower=1)
    if info != 0:
        raise NumericError(advice)
    return sol


@dataclass(frozen=True)
class Regressor:
    """Fitted map from embedded features to embedded labels.

    kind "ridge": coef is d x m primal weights. kind "kernel-ridge": coef is
    N x m dual coefficients and U_train keeps the raw training inputs.
    """

    kind: str
    coef: np.ndarray
    input_means: np.ndarray
    target_means: np.ndarray
    rho: float
    spec: KernelSpec | None = None
    U_train: np.ndarray | None = None

    def __post_init__(self):
        # pin C layout so predictions are bit-stable across serialization
        for name in ("coef", "input_means", "target_means", "U_train"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.ascontiguousarray(value))

    def predict(self, z) -> np.ndarray:
        z = as_matrix(z, "inputs")
        if z.shape[1] != self.input_means.shape[0]:
            raise InputError(
                f"inputs have {z.shape[1]} columns, regressor expects {self.input_means.shape[0]}"
            )
        zc = z - self.input_means
        if self.kind == "ridge":
            return zc @ self.coef + self.target_means
        k = kernel_matrix(self.spec, zc, self.U_train - self.input_means)
        return k @ self.coef + self.target_means


def ridge_fit(u, v, rho: float) -> Regressor:
    """Closed-form ridge regression on centered inputs and targets."""
    u = as_matrix(u, "U")
    v = as_matrix(v, "V")
    if u.shape[0] != v.shape[0]:
        raise InputError("U and V row counts differ")
    if rho < 0:
        raise InputError(f"rho must be >= 0, got {rho}")
    means = u.mean(axis=0)
    tmeans = v.mean(axis=0)
    uc = u - means
    gram = uc.T @ uc + rho * np.eye(u.shape[1])
    coef = _solve_spd(
        gram, uc.T @ (v - tmeans),
        "ridge normal equations are singular (rank-deficient inputs); use rho > 0",
    )
    return Regressor("ridge", coef, means, tmeans, float(rho))


def kridge_fit(u, v, rho: float, spec: KernelSpec) -> Regressor:
    """Dual-form kernel ridge: coef = (K + rho I)^{-1} Vc on the centered-input kernel."""
    u = as_matrix(u, "U")
    v = as_matrix(v, "V")
    if u.shape[0] != v.shape[0]:
        raise InputError("U and V row counts differ")
    if rho < 0:
        raise InputError(f"rho must be >= 0, got {rho}")
    means = u.mean(axis=0)
    tmeans = v.mean(axis=0)
    uc = u - means
    k = kernel_matrix(spec, uc, uc)
    coef = _solve_spd(
        k + rho * np.eye(u.shape[0]), v - tmeans,
        "kernel ridge system is singular (kernel matrix rank-deficient); use rho > 0",
    )
    return Regressor("kernel-ridge", coef, means, tmeans, float(rho), spec=spec, U_train=u.copy())


@dataclass(frozen=True)
class Scaler:
    """Optional per-feature standardization fitted on training data."""

    means: np.ndarray
    scales: np.ndarray

    @staticmethod
    def fit(x) -> "Scaler":
        x = as_matrix(x, "X")
        std = x.std(axis=0)
        return Scaler(means=x.mean(axis=0), scales=np.where(std == 0, 1.0, std))

    def transform(self, x) -> np.ndarray:
        return (as_matrix(x, "X") - self.means) / self.scales


@dataclass(frozen=True)
class Pipeline:
    """Embed (optional) -> regress -> decode; `delta` thresholds the scores."""

    regressor: Regressor
    delta: float = 0.5
    embedding: CmllModel | KcmllModel | None = None
    scaler: Scaler | None = None
    method: str = "ori"

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")


def predict_scores(pipe: Pipeline, x_new) -> np.ndarray:
    """Pre-threshold label scores for new rows.

    With an embedding present the regressor output is decoded through W;
    the baseline (no embedding) and the feature-only special case return
    the raw regressor output (the latter via an identity W).
    """
    x = as_matrix(x_new, "X_new")
    if pipe.scaler is not None:
        x = pipe.scaler.transform(x)
    if pipe.embedding is None:
        return pipe.regressor.predict(x)
    if isinstance(pipe.embedding, KcmllModel):
        u = kernel_project(pipe.embedding, x)
    else:
        u = encode_features(pipe.embedding, x)
    return pipe.regressor.predict(u) @ pipe.embedding.W


def binarize(scores, delta: float) -> np.ndarray:
    """0/1 predictions: entry 1 iff score > delta (strict)."""
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    return (as_matrix(scores, "scores") > delta).astype(np.float64)

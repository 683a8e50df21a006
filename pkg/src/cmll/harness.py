"""Experiment harness: cross-validation, compression-ratio search, and
balance-parameter sensitivity.

Every fold fit sees only its training split: feature means, scalers, kernel
statistics, embeddings, and regressors are all computed there. Folds and
grid cells may run on a thread pool; aggregation follows a fixed ordering,
so parallel and serial runs emit identical reports.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, split_folds
from .embedding import CmllParams, encode_features, fit_cmll, fit_cmll_y, fit_mddm
from .errors import InputError
from .kernels import KernelSpec, fit_kcmll, kernel_project, resolve_spec
from .learner import Pipeline, Scaler, binarize, kridge_fit, predict_scores, ridge_fit
from .linalg import center_columns, sym_eig_topk
from .metrics import (
    HIGHER_IS_BETTER,
    EvalReport,
    UndefinedMetricError,
    average_precision,
    micro_f1,
    ndcg_at_k,
    one_error,
    precision_at_k,
    ranking_loss,
)

METHODS = ("cmll", "kcmll", "cmll_y", "mddm", "ori")

# cut point for the @k metrics reported alongside the ranking ones
RANK_K = 3

# the ratio scan grid: 10% to 100% in 10% steps
RATIO_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell: method, compression ratios, and hyperparameters."""

    method: str = "cmll"
    mu: float = 1.0
    nu: float = 1.0
    alpha: float = 1.0
    lam: float = 0.0
    rho: float = 1e-2
    delta: float = 0.5
    tol: float = 1e-5
    maxc: int = 50
    folds: int = 5
    seed: int = 0
    kernel: KernelSpec | None = None
    standardize: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}, got {self.method!r}")
        for nm, v in (("mu", self.mu), ("nu", self.nu)):
            if not 0 < v <= 1:
                raise InputError(f"{nm} must lie in (0, 1], got {v}")
        if self.alpha < 0:
            raise InputError(f"alpha must be >= 0, got {self.alpha}")
        if self.folds < 2:
            raise InputError(f"folds must be >= 2, got {self.folds}")
        if self.jobs < 1:
            raise InputError(f"jobs must be >= 1, got {self.jobs}")

    @property
    def beta(self) -> float:
        return self.alpha * (1.0 + self.lam)


def _ratio_dim(ratio: float, full: int) -> int:
    return max(1, int(np.floor(ratio * full + 0.5)))


def embedded_dims(cfg: ExperimentConfig, n_features: int, n_labels: int) -> tuple[int, int]:
    """(m, d) from the ratios, with the structural overrides of the special cases."""
    m = _ratio_dim(cfg.nu, n_labels)
    d = _ratio_dim(cfg.mu, n_features)
    if cfg.method == "cmll_y":
        d = n_features
    elif cfg.method == "mddm":
        m = n_labels
    return m, d


def fit_pipeline(data: Dataset, cfg: ExperimentConfig) -> Pipeline:
    """Fit embedding (per method) and learner on `data` only."""
    x, y = data.X, data.Y
    scaler = None
    if cfg.standardize:
        scaler = Scaler.fit(x)
        x = scaler.transform(x)
        data = Dataset(x, y, data.name)
    m, d = embedded_dims(cfg, data.n_features, data.n_labels)
    params = CmllParams(
        beta=cfg.beta, lam=cfg.lam, m=m, d=d, maxc=cfg.maxc, tol=cfg.tol, seed=cfg.seed
    )
    if cfg.method == "ori":
        embedding, u, targets = None, x, y
    elif cfg.method == "cmll":
        embedding = fit_cmll(data, params)
        u, targets = encode_features(embedding, x), embedding.V
    elif cfg.method == "cmll_y":
        embedding = fit_cmll_y(data, params)
        u, targets = encode_features(embedding, x), embedding.V
    elif cfg.method == "mddm":
        embedding = fit_mddm(data, params)
        u, targets = encode_features(embedding, x), embedding.V
    else:  # kcmll
        spec = resolve_spec(cfg.kernel or KernelSpec(kind="rbf"), x, seed=cfg.seed)
        embedding = fit_kcmll(data, spec, params)
        u, targets = kernel_project(embedding, x), embedding.V
    if cfg.method == "kcmll":
        regressor = kridge_fit(u, targets, cfg.rho, embedding.spec)
    else:
        regressor = ridge_fit(u, targets, cfg.rho)
    return Pipeline(
        regressor=regressor, delta=cfg.delta, embedding=embedding,
        scaler=scaler, method=cfg.method,
    )


def _fold_metrics(pipe: Pipeline, test: Dataset, delta: float) -> dict:
    scores = predict_scores(pipe, test.X)
    yhat = binarize(scores, delta)
    values: dict = {}
    computations = [
        ("average_precision", lambda: average_precision(test.Y, scores)),
        ("ranking_loss", lambda: ranking_loss(test.Y, scores)),
        ("one_error", lambda: one_error(test.Y, scores)),
    ]
    if test.Y.sum() == 0:
        warnings.warn("fold has no positive label; micro-F1 undefined, skipped")
    else:
        computations.append(("micro_f1", lambda: micro_f1(test.Y, yhat)))
    if test.n_labels >= RANK_K:
        computations.append(("precision_at_k", lambda: precision_at_k(test.Y, scores, RANK_K)))
        computations.append(("ndcg_at_k", lambda: ndcg_at_k(test.Y, scores, RANK_K)))
    else:
        warnings.warn(f"fewer than {RANK_K} labels; @k metrics skipped")
    for name, fn in computations:
        try:
            values[name] = fn()
        except UndefinedMetricError as exc:
            warnings.warn(f"{name} undefined on this fold ({exc}); excluded")
    return values


def _run_ordered(tasks, jobs: int):
    """Evaluate callables, possibly on a thread pool, preserving order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(t) for t in tasks]
        return [f.result() for f in futures]


def cross_validate(data: Dataset, cfg: ExperimentConfig) -> EvalReport:
    """K-fold cross-validation; reports per-metric mean and sample std."""
    plan = split_folds(data.n, cfg.folds, cfg.seed)

    def run_fold(f: int):
        train = data.subset(plan.train_indices(f))
        test = data.subset(plan.test_indices(f))
        pipe = fit_pipeline(train, cfg)
        return _fold_metrics(pipe, test, cfg.delta)

    fold_results = _run_ordered(
        [lambda f=f: run_fold(f) for f in range(cfg.folds)], cfg.jobs
    )
    fold_values: dict = {}
    for res in fold_results:
        for name, v in res.items():
            fold_values.setdefault(name, []).append(v)
    stats: dict = {}
    for name, vals in fold_values.items():
        if len(vals) < cfg.folds:
            warnings.warn(
                f"{name} defined on only {len(vals)}/{cfg.folds} folds; "
                f"aggregated over those"
            )
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        stats[name] = (mean, std)
    return EvalReport(stats=stats, fold_values=fold_values)


@dataclass(frozen=True)
class GridSearchResult:
    """Heuristic two-stage ratio search: scan mu at a pinned nu, then nu at mu*."""

    metric: str
    mu_star: float
    nu_star: float
    mu_scan: list
    nu_scan: list


def _scan_rows(data, cfg, metric, axis, pinned, jobs):
    def cell(ratio):
        if axis == "mu":
            c = replace(cfg, mu=ratio, nu=pinned, jobs=1)
        else:
            c = replace(cfg, mu=pinned, nu=ratio, jobs=1)
        report = cross_validate(data, c)
        mean, std = report.stats.get(metric, (float("nan"), float("nan")))
        return {"stage": f"{axis}-scan", "mu": c.mu, "nu": c.nu,
                "mean": mean, "std": std}

    return _run_ordered([lambda r=r: cell(r) for r in RATIO_GRID], jobs)


def _pick_best(rows, metric_higher: bool) -> float:
    best_val, best_ratio = None, None
    for row, ratio in zip(rows, RATIO_GRID):
        v = row["mean"]
        if np.isnan(v):
            continue
        better = best_val is None or (v > best_val if metric_higher else v < best_val)
        if better:
            best_val, best_ratio = v, ratio
    if best_ratio is None:
        raise InputError("ratio search: metric undefined on every grid cell")
    return best_ratio


def ratio_grid_search(data: Dataset, cfg: ExperimentConfig, nu0: float,
                      metric: str = "average_precision") -> GridSearchResult:
    """Scan mu in {0.1..1.0} at nu0, lock mu*, scan nu likewise.

    Best means highest for gain metrics and lowest for loss metrics; ties go
    to the smaller ratio (more compression).
    """
    if cfg.method not in ("cmll", "kcmll"):
        raise InputError("ratio search applies to the two-ratio methods (cmll, kcmll)")
    if metric not in HIGHER_IS_BETTER:
        raise InputError(f"unknown metric {metric!r}")
    if not any(abs(nu0 - r) < 1e-9 for r in RATIO_GRID):
        raise InputError(f"nu0 must be one of {RATIO_GRID}, got {nu0}")
    higher = HIGHER_IS_BETTER[metric]
    mu_scan = _scan_rows(data, cfg, metric, "mu", nu0, cfg.jobs)
    mu_star = _pick_best(mu_scan, higher)
    nu_scan = _scan_rows(data, cfg, metric, "nu", mu_star, cfg.jobs)
    nu_star = _pick_best(nu_scan, higher)
    return GridSearchResult(
        metric=metric, mu_star=mu_star, nu_star=nu_star,
        mu_scan=mu_scan, nu_scan=nu_scan,
    )


def full_ratio_grid(data: Dataset, cfg: ExperimentConfig,
                    metric: str = "average_precision") -> list:
    """All 100 (mu, nu) cells; rows carry the chosen metric's mean and std."""
    if metric not in HIGHER_IS_BETTER:
        raise InputError(f"unknown metric {metric!r}")

    def cell(mu, nu):
        report = cross_validate(data, replace(cfg, mu=mu, nu=nu, jobs=1))
        mean, std = report.stats.get(metric, (float("nan"), float("nan")))
        return {"stage": "grid", "mu": mu, "nu": nu, "mean": mean, "std": std}

    tasks = [lambda m=m, n=n: cell(m, n) for m in RATIO_GRID for n in RATIO_GRID]
    return _run_ordered(tasks, cfg.jobs)


@dataclass(frozen=True)
class SensitivityAnchors:
    dep_min: float
    dep_max: float
    rec_min: float
    rec_max: float


@dataclass(frozen=True)
class SensitivityReport:
    """Dependence/recovery trade-off across the balance parameter alpha.

    dep and rec are the two raw trace terms of the fitted model on the full
    dataset; the normalized columns rescale them between the single-term
    anchor solutions. metric_stats[i] holds the CV stats at alphas[i].
    """

    alphas: list
    dep: list
    rec: list
    dep_norm: list
    rec_norm: list
    metric_stats: list
    anchors: SensitivityAnchors


def _dep_rec(model, xc, y) -> tuple[float, float]:
    f = xc @ model.P
    dep = float(np.linalg.norm(f.T @ model.V, "fro") ** 2)
    rec = float(np.linalg.norm(y.T @ model.V, "fro") ** 2)
    return dep, rec


def _normalize(value: float, lo: float, hi: float, label: str) -> float:
    span = hi - lo
    if span <= 0:
        warnings.warn(f"{label}: degenerate anchor span [{lo}, {hi}]; reporting 0")
        return 0.0
    norm = (value - lo) / span
    if norm < -1e-6 or norm > 1 + 1e-6:
        warnings.warn(
            f"{label}: normalized value {norm:.3g} outside [0, 1] "
            f"(anchor not globally optimal); clamped"
        )
    return float(min(max(norm, 0.0), 1.0))


def alpha_sensitivity(data: Dataset, cfg: ExperimentConfig, alphas) -> SensitivityReport:
    """Fit across an alpha grid and normalize dep/rec between anchor solutions.

    The dependence-only anchor drops the recovery term (labels zeroed) and
    runs the usual alternation; the recovery-only anchor is the single
    V-solve on the label Gram matrix followed by one projection step.
    """
    alphas = [float(a) for a in alphas]
    if not alphas or any(a <= 0 for a in alphas):
        raise InputError("alphas must be a non-empty list of positive values")
    x = Scaler.fit(data.X).transform(data.X) if cfg.standardize else data.X
    y = data.Y
    work = Dataset(x, y, data.name)
    m, d = embedded_dims(cfg, work.n_features, work.n_labels)
    xc, _ = center_columns(x)

    base = CmllParams(beta=1.0, lam=cfg.lam, m=m, d=d, maxc=cfg.maxc,
                      tol=cfg.tol, seed=cfg.seed)
    # dependence-only anchor: recovery term removed by zeroing the labels
    dep_only = fit_cmll(Dataset(x, np.zeros_like(y), work.name), base)
    dep_max, rec_min = _dep_rec(dep_only, xc, y)
    # recovery-only anchor: V from the label Gram matrix, then one P-solve
    rec_only = fit_cmll_y(work, replace(base, beta=0.0, d=work.n_features))
    t = xc.T @ rec_only.V
    p_rec = sym_eig_topk(t @ t.T, d).vectors
    dep_min = float(np.linalg.norm((xc @ p_rec).T @ rec_only.V, "fro") ** 2)
    rec_max = float(np.linalg.norm(y.T @ rec_only.V, "fro") ** 2)
    anchors = SensitivityAnchors(dep_min=dep_min, dep_max=dep_max,
                                 rec_min=rec_min, rec_max=rec_max)

    dep_vals, rec_vals, dep_norms, rec_norms, stats = [], [], [], [], []
    for a in alphas:
        model = fit_cmll(work, replace(base, beta=a * (1.0 + cfg.lam)))
        dep, rec = _dep_rec(model, xc, y)
        dep_vals.append(dep)
        rec_vals.append(rec)
        dep_norms.append(_normalize(dep, dep_min, dep_max, f"dep(alpha={a:g})"))
        rec_norms.append(_normalize(rec, rec_min, rec_max, f"rec(alpha={a:g})"))
        stats.append(cross_validate(data, replace(cfg, alpha=a)).stats)
    return SensitivityReport(
        alphas=alphas, dep=dep_vals, rec=rec_vals,
        dep_norm=dep_norms, rec_norm=rec_norms,
        metric_stats=stats, anchors=anchors,
    )

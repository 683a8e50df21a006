"""Ranking and classification metrics, plus the misclassification-bound diagnostics.

Rank conventions: labels are ordered by descending score with ascending label
index breaking ties. Instances with empty ground-truth label sets are skipped
by the ranking-based metrics (average precision, ranking loss, one-error,
nDCG) and kept by micro-F1 and precision@k; ranking loss additionally skips
instances with no (relevant, irrelevant) pair at all. Tied (relevant,
irrelevant) score pairs count 1/2 in ranking loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, UndefinedMetricError
from .learner import Pipeline, predict_scores
from .linalg import as_matrix

METRIC_NAMES = (
    "average_precision",
    "micro_f1",
    "ranking_loss",
    "one_error",
    "precision_at_k",
    "ndcg_at_k",
)

# metrics where larger values are better
HIGHER_IS_BETTER = {
    "average_precision": True,
    "micro_f1": True,
    "ranking_loss": False,
    "one_error": False,
    "precision_at_k": True,
    "ndcg_at_k": True,
}


@dataclass(frozen=True)
class EvalReport:
    """Per-metric (mean, std) across folds, with the raw fold values kept."""

    stats: dict
    fold_values: dict

    def mean(self, name: str) -> float:
        return self.stats[name][0]

    def std(self, name: str) -> float:
        return self.stats[name][1]


def _check_binary(y: np.ndarray, name: str) -> None:
    if not np.isin(y, (0.0, 1.0)).all():
        raise InputError(f"{name} entries must be exactly 0.0 or 1.0")


def _pair(y, s):
    y = as_matrix(y, "Y")
    s = as_matrix(s, "S")
    if y.shape != s.shape:
        raise InputError(f"Y and S shapes differ: {y.shape} vs {s.shape}")
    _check_binary(y, "Y")
    return y, s


def _ranking(scores: np.ndarray) -> np.ndarray:
    """Label indices ordered by descending score, ascending index on ties."""
    m = scores.shape[0]
    return np.lexsort((np.arange(m), -scores))


def average_precision(y, s) -> float:
    """Mean over instances of the mean precision at each relevant label's rank."""
    y, s = _pair(y, s)
    total, counted = 0.0, 0
    for i in range(y.shape[0]):
        rel = y[i] == 1.0
        if not rel.any():
            continue
        order = _ranking(s[i])
        ranks = np.empty(y.shape[1], dtype=np.int64)
        ranks[order] = np.arange(1, y.shape[1] + 1)
        rel_ranks = np.sort(ranks[rel])
        total += float(np.mean(np.arange(1, rel_ranks.size + 1) / rel_ranks))
        counted += 1
    if counted == 0:
        raise UndefinedMetricError("average precision undefined: all label sets empty")
    return total / counted


def ranking_loss(y, s) -> float:
    """Fraction of (relevant, irrelevant) pairs ordered wrongly; ties count 1/2."""
    y, s = _pair(y, s)
    total, counted = 0.0, 0
    for i in range(y.shape[0]):
        rel = y[i] == 1.0
        n_rel = int(rel.sum())
        n_irr = y.shape[1] - n_rel
        if n_rel == 0 or n_irr == 0:
            continue
        sr = s[i][rel][:, None]
        si = s[i][~rel][None, :]
        bad = np.sum(sr < si) + 0.5 * np.sum(sr == si)
        total += float(bad) / (n_rel * n_irr)
        counted += 1
    if counted == 0:
        raise UndefinedMetricError("ranking loss undefined: no instance has both a relevant and an irrelevant label")
    return total / counted


def one_error(y, s) -> float:
    """Fraction of instances whose top-scoring label is irrelevant."""
    y, s = _pair(y, s)
    errors, counted = 0, 0
    for i in range(y.shape[0]):
        if not (y[i] == 1.0).any():
            continue
        top = int(np.argmax(s[i]))
        errors += int(y[i, top] == 0.0)
        counted += 1
    if counted == 0:
        raise UndefinedMetricError("one-error undefined: all label sets empty")
    return errors / counted


def micro_f1(y, yhat) -> float:
    """2 TP / (2 TP + FP + FN) pooled over all cells."""
    y = as_matrix(y, "Y")
    yhat = as_matrix(yhat, "Yhat")
    if y.shape != yhat.shape:
        raise InputError(f"Y and Yhat shapes differ: {y.shape} vs {yhat.shape}")
    _check_binary(y, "Y")
    _check_binary(yhat, "Yhat")
    tp = float(np.sum((y == 1.0) & (yhat == 1.0)))
    fp = float(np.sum((y == 0.0) & (yhat == 1.0)))
    fn = float(np.sum((y == 1.0) & (yhat == 0.0)))
    denom = 2 * tp + fp + fn
    if denom == 0:
        raise UndefinedMetricError("micro-F1 undefined: no positive cell in truth or prediction")
    return 2 * tp / denom


def precision_at_k(y, s, k: int) -> float:
    """Mean fraction of relevant labels among the k top-ranked ones."""
    y, s = _pair(y, s)
    if not 1 <= k <= y.shape[1]:
        raise InputError(f"k must be in [1, {y.shape[1]}], got {k}")
    hits = 0.0
    for i in range(y.shape[0]):
        top = _ranking(s[i])[:k]
        hits += float(y[i, top].sum()) / k
    return hits / y.shape[0]


def ndcg_at_k(y, s, k: int) -> float:
    """Discounted cumulative gain at k over its ideal value, averaged."""
    y, s = _pair(y, s)
    if not 1 <= k <= y.shape[1]:
        raise InputError(f"k must be in [1, {y.shape[1]}], got {k}")
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    total, counted = 0.0, 0
    for i in range(y.shape[0]):
        n_rel = int((y[i] == 1.0).sum())
        if n_rel == 0:
            continue
        top = _ranking(s[i])[:k]
        dcg = float(np.sum(y[i, top] * discounts))
        ideal = float(np.sum(discounts[: min(k, n_rel)]))
        total += dcg / ideal
        counted += 1
    if counted == 0:
        raise UndefinedMetricError("nDCG undefined: all label sets empty")
    return total / counted


def theorem1_bound(y, yhat, delta: float):
    """Misclassification count, its squared-error bound, and whether it holds.

    Predicted-positive uses >= delta inside this diagnostic. The bound is
    tau * ||yhat - y||^2 with tau = max(1/delta^2, 1/(1-delta)^2); tau
    reaches its minimum of 4 at delta = 0.5.
    """
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise InputError("y and yhat must be 1-D vectors of equal length")
    _check_binary(y.reshape(1, -1), "y")
    pred_pos = yhat >= delta
    n_mis = int(np.sum(pred_pos & (y == 0.0)) + np.sum(~pred_pos & (y == 1.0)))
    tau = max(1.0 / delta**2, 1.0 / (1.0 - delta) ** 2)
    bound = tau * float(np.sum((yhat - y) ** 2))
    return n_mis, bound, n_mis <= bound


@dataclass(frozen=True)
class BoundReport:
    """Per-strategy realized bound values on one held-out split."""

    n_mis: dict
    bounds: dict

    def mean_bound(self, name: str) -> float:
        return float(np.mean(self.bounds[name]))

    def mean_n_mis(self, name: str) -> float:
        return float(np.mean(self.n_mis[name]))


def bound_diagnostics(pipelines: dict, x_test, y_test) -> BoundReport:
    """Evaluate the misclassification bound per strategy on a shared split.

    `pipelines` maps strategy names (e.g. feature-only / label-only / joint)
    to fitted Pipeline objects trained on the same training split.
    """
    x = as_matrix(x_test, "X_test")
    y = as_matrix(y_test, "Y_test")
    if x.shape[0] != y.shape[0]:
        raise InputError(
            f"mismatched split: X_test has {x.shape[0]} rows, Y_test has {y.shape[0]}"
        )
    _check_binary(y, "Y_test")
    n_mis: dict = {}
    bounds: dict = {}
    for name, pipe in pipelines.items():
        if not isinstance(pipe, Pipeline):
            raise InputError(f"strategy {name!r} is not a fitted pipeline")
        scores = predict_scores(pipe, x)
        mis = np.empty(x.shape[0])
        bnd = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            mis[i], bnd[i], _ = theorem1_bound(y[i], scores[i], pipe.delta)
        n_mis[name] = mis
        bounds[name] = bnd
    return BoundReport(n_mis=n_mis, bounds=bounds)

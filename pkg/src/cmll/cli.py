"""Command-line harness.

Subcommands: fit, predict, eval, cv, grid, sensitivity, bounds.
Exit codes: 0 success, 2 usage error, 3 parse error, 4 numeric failure.
All randomness flows from --seed. When --out is given, grid/sensitivity/
bounds also render PNG figures next to the delimited output (suppress with
--no-figures).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import figures
from .data import parse_dataset_file, split_folds
from .errors import (
    InputError,
    InvalidStateError,
    ModelFormatError,
    NumericError,
    ParseError,
)
from .harness import (
    ExperimentConfig,
    alpha_sensitivity,
    cross_validate,
    fit_pipeline,
    full_ratio_grid,
    ratio_grid_search,
)
from .kernels import MEDIAN_HEURISTIC, KernelSpec
from .learner import Pipeline, binarize, predict_scores
from .metrics import (
    METRIC_NAMES,
    UndefinedMetricError,
    average_precision,
    bound_diagnostics,
    micro_f1,
    ndcg_at_k,
    one_error,
    precision_at_k,
    ranking_loss,
)
from .modelio import load_model_file, save_model_file
from .report import FORMATS, emit_report

DEFAULT_ALPHAS = "1e-4,1e-3,1e-2,1e-1,1,1e1,1e2,1e3,1e4"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset file (text format)")
    p.add_argument("--method", default="cmll",
                   choices=["cmll", "kcmll", "cmll_y", "mddm", "ori"])
    p.add_argument("--mu", type=float, default=1.0, help="feature compression ratio d/D")
    p.add_argument("--nu", type=float, default=1.0, help="label compression ratio m/M")
    p.add_argument("--alpha", type=float, default=1.0, help="dependence/recovery balance")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0,
                   help="decoder ridge coefficient")
    p.add_argument("--rho", type=float, default=1e-2, help="learner ridge coefficient")
    p.add_argument("--delta", type=float, default=0.5, help="binarization threshold")
    p.add_argument("--kernel", choices=["linear", "rbf"], default=None)
    p.add_argument("--gamma", default="median",
                   help="rbf bandwidth: a float or 'median'")
    p.add_argument("--tol", type=float, default=1e-5, help="convergence tolerance")
    p.add_argument("--maxc", type=int, default=50, help="maximum alternation sweeps")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", action="store_true",
                   help="standardize features on the training split")
    p.add_argument("--model", default=None, help="model file path")
    p.add_argument("--out", default=None, help="report output path (default stdout)")
    p.add_argument("--format", dest="fmt", default="text", choices=list(FORMATS))
    p.add_argument("--jobs", type=int, default=1, help="worker threads for folds/cells")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG figures next to --out")


def _kernel_spec(args) -> KernelSpec | None:
    if args.kernel is None:
        return None
    if args.kernel == "linear":
        return KernelSpec(kind="linear")
    if args.gamma == "median":
        return KernelSpec(kind="rbf", gamma=MEDIAN_HEURISTIC)
    try:
        gamma = float(args.gamma)
    except ValueError:
        raise InputError(f"--gamma must be a float or 'median', got {args.gamma!r}") from None
    return KernelSpec(kind="rbf", gamma=gamma)


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        method=args.method, mu=args.mu, nu=args.nu, alpha=args.alpha, lam=args.lam,
        rho=args.rho, delta=args.delta, tol=args.tol, maxc=args.maxc,
        folds=args.folds, seed=args.seed, kernel=_kernel_spec(args),
        standardize=args.standardize, jobs=args.jobs,
    )


def _write_report(rows, args, columns=None) -> None:
    data = emit_report(rows, args.fmt, columns=columns)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _figure_path(args, suffix: str) -> Path:
    base = Path(args.out)
    return base.with_name(base.stem + suffix + ".png")


def _load_pipeline(path) -> Pipeline:
    model = load_model_file(path)
    if not isinstance(model, Pipeline):
        raise InputError(f"{path} does not contain a prediction pipeline")
    return model


def cmd_fit(args) -> int:
    if not args.model:
        raise InputError("fit requires --model to store the fitted pipeline")
    data = parse_dataset_file(args.data)
    pipe = fit_pipeline(data, _config(args))
    save_model_file(pipe, args.model)
    if pipe.embedding is not None and pipe.embedding.trace:
        gamma, delta = pipe.embedding.trace[-1]
        print(f"fitted {args.method} in {len(pipe.embedding.trace)} sweep(s); "
              f"objective {gamma:.6g} (last rel. change {delta:.3g})")
    else:
        print(f"fitted {args.method}")
    print(f"model written to {args.model}")
    return 0


def cmd_predict(args) -> int:
    if not args.model:
        raise InputError("predict requires --model")
    pipe = _load_pipeline(args.model)
    data = parse_dataset_file(args.data)
    scores = predict_scores(pipe, data.X)
    yhat = binarize(scores, pipe.delta)
    rows = []
    for i in range(scores.shape[0]):
        labels = ",".join(str(j) for j in np.flatnonzero(yhat[i])) or "-"
        row = {"instance": i, "labels": labels}
        for j in range(scores.shape[1]):
            row[f"s{j}"] = float(scores[i, j])
        rows.append(row)
    _write_report(rows, args)
    return 0


def cmd_eval(args) -> int:
    if not args.model:
        raise InputError("eval requires --model")
    pipe = _load_pipeline(args.model)
    data = parse_dataset_file(args.data)
    scores = predict_scores(pipe, data.X)
    yhat = binarize(scores, pipe.delta)
    computations = [
        ("average_precision", lambda: average_precision(data.Y, scores)),
        ("micro_f1", lambda: micro_f1(data.Y, yhat)),
        ("ranking_loss", lambda: ranking_loss(data.Y, scores)),
        ("one_error", lambda: one_error(data.Y, scores)),
    ]
    if data.n_labels >= 3:
        computations.append(("precision_at_k", lambda: precision_at_k(data.Y, scores, 3)))
        computations.append(("ndcg_at_k", lambda: ndcg_at_k(data.Y, scores, 3)))
    rows = []
    for name, fn in computations:
        try:
            rows.append({"metric": name, "value": fn()})
        except UndefinedMetricError:
            rows.append({"metric": name, "value": "undefined"})
    _write_report(rows, args, columns=["metric", "value"])
    return 0


def cmd_cv(args) -> int:
    data = parse_dataset_file(args.data)
    report = cross_validate(data, _config(args))
    rows = [{"metric": name, "mean": report.stats[name][0], "std": report.stats[name][1]}
            for name in METRIC_NAMES if name in report.stats]
    _write_report(rows, args, columns=["metric", "mean", "std"])
    return 0


def cmd_grid(args) -> int:
    data = parse_dataset_file(args.data)
    cfg = _config(args)
    cols = ["stage", "mu", "nu", "mean", "std"]
    if args.full:
        rows = full_ratio_grid(data, cfg, metric=args.metric)
        _write_report(rows, args, columns=cols)
        if args.out and not args.no_figures:
            path = figures.plot_grid_heatmap(rows, args.metric, _figure_path(args, "_grid"))
            print(f"figure written to {path}", file=sys.stderr)
        return 0
    result = ratio_grid_search(data, cfg, nu0=args.nu0, metric=args.metric)
    rows = result.mu_scan + result.nu_scan + [
        {"stage": "selected", "mu": result.mu_star, "nu": result.nu_star,
         "mean": "", "std": ""}
    ]
    _write_report(rows, args, columns=cols)
    if args.out and not args.no_figures:
        for scan, suffix in ((result.mu_scan, "_mu"), (result.nu_scan, "_nu")):
            path = figures.plot_ratio_scan(scan, args.metric, _figure_path(args, suffix))
            print(f"figure written to {path}", file=sys.stderr)
    print(f"selected mu*={result.mu_star:g} nu*={result.nu_star:g} by {args.metric}",
          file=sys.stderr)
    return 0


def cmd_sensitivity(args) -> int:
    data = parse_dataset_file(args.data)
    cfg = _config(args)
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    except ValueError:
        raise InputError(f"--alphas must be comma-separated floats, got {args.alphas!r}") from None
    report = alpha_sensitivity(data, cfg, alphas)
    rows = []
    for i, a in enumerate(report.alphas):
        row = {"alpha": a, "dep": report.dep[i], "rec": report.rec[i],
               "dep_norm": report.dep_norm[i], "rec_norm": report.rec_norm[i]}
        for name in METRIC_NAMES:
            if name in report.metric_stats[i]:
                row[name] = report.metric_stats[i][name][0]
        rows.append(row)
    _write_report(rows, args)
    if args.out and not args.no_figures:
        path = figures.plot_sensitivity(report, args.metric, _figure_path(args, "_alpha"))
        print(f"figure written to {path}", file=sys.stderr)
    return 0


def cmd_bounds(args) -> int:
    from dataclasses import replace

    data = parse_dataset_file(args.data)
    cfg = _config(args)
    plan = split_folds(data.n, cfg.folds, cfg.seed)
    train = data.subset(plan.train_indices(0))
    test = data.subset(plan.test_indices(0))
    pipes = {
        "feature-only": fit_pipeline(train, replace(cfg, method="mddm")),
        "label-only": fit_pipeline(train, replace(cfg, method="cmll_y")),
        "joint": fit_pipeline(train, replace(cfg, method="cmll")),
    }
    diag = bound_diagnostics(pipes, test.X, test.Y)
    rows = [
        {"strategy": name,
         "mean_bound": diag.mean_bound(name),
         "mean_n_mis": diag.mean_n_mis(name),
         "max_bound": float(np.max(diag.bounds[name])),
         "instances": int(diag.bounds[name].shape[0])}
        for name in pipes
    ]
    _write_report(rows, args)
    if args.out and not args.no_figures:
        path = figures.plot_bound_summary(rows, _figure_path(args, "_bounds"))
        print(f"figure written to {path}", file=sys.stderr)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmll",
        description="Compact multi-label learning: joint feature/label embedding toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    handlers = {
        "fit": (cmd_fit, "fit a pipeline on the full dataset and save it"),
        "predict": (cmd_predict, "score new instances with a saved pipeline"),
        "eval": (cmd_eval, "evaluate a saved pipeline on a labeled dataset"),
        "cv": (cmd_cv, "k-fold cross-validation of one configuration"),
        "grid": (cmd_grid, "compression-ratio search (or --full grid)"),
        "sensitivity": (cmd_sensitivity, "balance-parameter sweep with dep/rec terms"),
        "bounds": (cmd_bounds, "misclassification-bound diagnostics per strategy"),
    }
    for name, (fn, help_text) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=fn)
        if name == "grid":
            p.add_argument("--metric", default="average_precision", choices=list(METRIC_NAMES))
            p.add_argument("--nu0", type=float, default=0.5,
                           help="pinned nu for the first scan stage")
            p.add_argument("--full", action="store_true", help="evaluate all 100 ratio pairs")
        if name == "sensitivity":
            p.add_argument("--metric", default="average_precision", choices=list(METRIC_NAMES))
            p.add_argument("--alphas", default=DEFAULT_ALPHAS,
                           help="comma-separated alpha grid")
    return parser


def main(argv=None) -> int:
    try:
        try:
            args = _parser().parse_args(argv)
        except SystemExit as exc:  # argparse reports usage errors itself
            return int(exc.code or 0)
        return args.func(args)
    except (ParseError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except (InputError, InvalidStateError, UndefinedMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

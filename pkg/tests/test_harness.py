import json
from dataclasses import replace

import numpy as np
import pytest

from cmll import (
    ExperimentConfig,
    InputError,
    KernelSpec,
    alpha_sensitivity,
    cross_validate,
    emit_report,
    fit_pipeline,
    full_ratio_grid,
    make_synthetic,
    ratio_grid_search,
    save_model,
    sym_eig_topk,
)
from cmll.harness import RATIO_GRID, embedded_dims

from conftest import random_dataset


# ---------------------------------------------------------------------------
# configuration plumbing

def test_config_validation():
    with pytest.raises(InputError):
        ExperimentConfig(method="pca")
    with pytest.raises(InputError):
        ExperimentConfig(mu=0.0)
    with pytest.raises(InputError):
        ExperimentConfig(nu=1.5)
    with pytest.raises(InputError):
        ExperimentConfig(folds=1)


def test_embedded_dims_rounding_and_overrides():
    cfg = ExperimentConfig(method="cmll", mu=0.25, nu=0.5)
    assert embedded_dims(cfg, 10, 7) == (4, 3)  # round half up, floor 1
    assert embedded_dims(ExperimentConfig(method="cmll", mu=0.01, nu=0.01), 10, 7) == (1, 1)
    assert embedded_dims(ExperimentConfig(method="cmll_y", mu=0.2, nu=0.5), 10, 7) == (4, 10)
    assert embedded_dims(ExperimentConfig(method="mddm", mu=0.2, nu=0.5), 10, 7) == (7, 2)


def test_beta_combines_alpha_and_lambda():
    cfg = ExperimentConfig(alpha=3.0, lam=0.5)
    assert cfg.beta == 4.5


# ---------------------------------------------------------------------------
# cross_validate

def test_cv_deterministic(rng):
    ds = random_dataset(rng, n=40, n_features=8, n_labels=5)
    cfg = ExperimentConfig(method="cmll", mu=0.5, nu=0.6, folds=4, seed=7)
    a = cross_validate(ds, cfg)
    b = cross_validate(ds, cfg)
    assert a.stats == b.stats
    assert a.fold_values == b.fold_values


def test_cv_all_methods_produce_reports(rng):
    ds = random_dataset(rng, n=36, n_features=6, n_labels=5)
    for method in ("ori", "cmll", "cmll_y", "mddm", "kcmll"):
        cfg = ExperimentConfig(
            method=method, mu=0.5, nu=0.6, folds=3,
            kernel=KernelSpec(kind="rbf", gamma="median-heuristic"),
        )
        report = cross_validate(ds, cfg)
        assert "average_precision" in report.stats
        for name, (mean, std) in report.stats.items():
            assert np.isfinite(mean) and np.isfinite(std)


def test_cv_serial_parallel_identical(rng):
    ds = random_dataset(rng, n=40, n_features=8, n_labels=5)
    cfg = ExperimentConfig(method="cmll", mu=0.5, nu=0.6, folds=4, seed=3)
    serial = cross_validate(ds, replace(cfg, jobs=1))
    parallel = cross_validate(ds, replace(cfg, jobs=3))
    assert serial.stats == parallel.stats


def test_cv_no_test_fold_leakage(rng):
    # perturbing test-fold features must not change the fitted model bytes
    from cmll import split_folds

    ds = random_dataset(rng, n=30, n_features=6, n_labels=4)
    cfg = ExperimentConfig(method="cmll", mu=0.5, nu=0.5, folds=3, seed=1, standardize=True)
    plan = split_folds(ds.n, cfg.folds, cfg.seed)
    train = ds.subset(plan.train_indices(0))
    before = save_model(fit_pipeline(train, cfg))
    x_mut = ds.X.copy()
    x_mut[plan.test_indices(0)] += 100.0
    mutated = type(ds)(x_mut, ds.Y).subset(plan.train_indices(0))
    after = save_model(fit_pipeline(mutated, cfg))
    assert before == after


def test_cv_skips_undefined_fold_metric(rng):
    # fold 0's test labels forced all-empty: ranking metrics skipped there
    from cmll import Dataset, split_folds

    x = rng.standard_normal((12, 4))
    cfg = ExperimentConfig(method="ori", folds=3, seed=0)
    plan = split_folds(12, cfg.folds, cfg.seed)
    y = (rng.random((12, 3)) < 0.6).astype(float)
    y[plan.test_indices(0)] = 0.0
    y[plan.test_indices(1)] = 1.0  # keep labels informative elsewhere
    ds = Dataset(x, y)
    with pytest.warns(UserWarning):
        report = cross_validate(ds, cfg)
    # ranking metrics defined on 2 of 3 folds only
    assert len(report.fold_values["average_precision"]) == 2


def test_cv_synthetic_compression_beats_baseline():
    # labels driven by few latents hidden in redundant noisy features:
    # compressed pipeline should rank at least as well as the raw baseline
    ds = make_synthetic(n=240, latent=4, noise_dims=36, n_labels=10, seed=5)
    base = ExperimentConfig(method="ori", folds=3, seed=5, rho=1e-2)
    cmll_cfg = replace(base, method="cmll", mu=0.2, nu=0.6, alpha=1e-2)
    ap_ori = cross_validate(ds, base).mean("average_precision")
    ap_cmll = cross_validate(ds, cmll_cfg).mean("average_precision")
    assert ap_cmll >= ap_ori


# ---------------------------------------------------------------------------
# ratio_grid_search

def test_grid_scan_set_matches_percent_steps():
    assert RATIO_GRID == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def test_grid_search_structure(rng):
    ds = random_dataset(rng, n=30, n_features=5, n_labels=4)
    cfg = ExperimentConfig(method="cmll", folds=2, maxc=10, seed=2)
    result = ratio_grid_search(ds, cfg, nu0=0.5)
    assert len(result.mu_scan) == 10 and len(result.nu_scan) == 10
    assert result.mu_star in RATIO_GRID and result.nu_star in RATIO_GRID
    assert all(row["nu"] == 0.5 for row in result.mu_scan)
    assert all(row["mu"] == result.mu_star for row in result.nu_scan)


def test_grid_search_tie_prefers_smaller_ratio(rng, monkeypatch):
    ds = random_dataset(rng, n=24, n_features=5, n_labels=4)
    cfg = ExperimentConfig(method="cmll", folds=2, maxc=5)
    import cmll.harness as harness

    # constant metric everywhere: every cell ties, smallest ratio must win
    def fake_cv(data, c):
        from cmll.metrics import EvalReport

        return EvalReport(stats={"average_precision": (0.5, 0.0)}, fold_values={})

    monkeypatch.setattr(harness, "cross_validate", fake_cv)
    result = harness.ratio_grid_search(ds, cfg, nu0=0.5)
    assert result.mu_star == 0.1 and result.nu_star == 0.1


def test_grid_search_loss_metric_minimized(rng, monkeypatch):
    ds = random_dataset(rng, n=24, n_features=5, n_labels=4)
    cfg = ExperimentConfig(method="cmll", folds=2, maxc=5)
    import cmll.harness as harness

    def fake_cv(data, c):
        from cmll.metrics import EvalReport

        # ranking loss smallest at mu = 0.3 / nu = 0.7
        val = abs(c.mu - 0.3) + abs(c.nu - 0.7)
        return EvalReport(stats={"ranking_loss": (val, 0.0)}, fold_values={})

    monkeypatch.setattr(harness, "cross_validate", fake_cv)
    result = harness.ratio_grid_search(ds, cfg, nu0=0.7, metric="ranking_loss")
    assert result.mu_star == 0.3 and result.nu_star == 0.7


def test_grid_search_rejects_single_ratio_methods(rng):
    ds = random_dataset(rng, n=20, n_features=5, n_labels=4)
    with pytest.raises(InputError):
        ratio_grid_search(ds, ExperimentConfig(method="mddm", folds=2), nu0=0.5)
    with pytest.raises(InputError):
        ratio_grid_search(ds, ExperimentConfig(method="cmll", folds=2), nu0=0.55)


def test_full_grid_has_all_cells(rng):
    ds = random_dataset(rng, n=24, n_features=5, n_labels=4)
    cfg = ExperimentConfig(method="cmll", folds=2, maxc=5)
    rows = full_ratio_grid(ds, cfg)
    assert len(rows) == 100
    assert {(r["mu"], r["nu"]) for r in rows} == {(m, n) for m in RATIO_GRID for n in RATIO_GRID}


# ---------------------------------------------------------------------------
# alpha_sensitivity

def test_sensitivity_anchor_recovery_is_label_spectrum(rng):
    ds = random_dataset(rng, n=30, n_features=6, n_labels=5)
    cfg = ExperimentConfig(method="cmll", mu=0.5, nu=0.6, folds=2, lam=0.0)
    report = alpha_sensitivity(ds, cfg, [1e-2, 1.0, 1e2])
    m, _ = embedded_dims(cfg, ds.n_features, ds.n_labels)
    top = sym_eig_topk(ds.Y @ ds.Y.T, m).values.sum()
    assert abs(report.anchors.rec_max - top) <= 1e-8 * max(top, 1.0)


def test_sensitivity_norms_in_range_and_ordered(rng):
    ds = random_dataset(rng, n=40, n_features=8, n_labels=5)
    cfg = ExperimentConfig(method="cmll", mu=0.5, nu=0.5, folds=2, lam=0.0, seed=4)
    report = alpha_sensitivity(ds, cfg, [1e-4, 1e-1, 1.0, 1e1, 1e4])
    for v in report.dep_norm + report.rec_norm:
        assert -1e-6 <= v <= 1 + 1e-6
    assert report.dep_norm[-1] >= report.dep_norm[0]
    assert report.rec_norm[0] >= report.rec_norm[-1]
    assert len(report.metric_stats) == 5


def test_sensitivity_rejects_bad_alphas(rng):
    ds = random_dataset(rng, n=20, n_features=5, n_labels=4)
    cfg = ExperimentConfig(method="cmll", folds=2)
    with pytest.raises(InputError):
        alpha_sensitivity(ds, cfg, [])
    with pytest.raises(InputError):
        alpha_sensitivity(ds, cfg, [1.0, -2.0])


# ---------------------------------------------------------------------------
# emit_report

def test_report_empty_is_header_only():
    out = emit_report([], "csv", columns=["metric", "mean", "std"])
    assert out == b"metric,mean,std\n"
    text = emit_report([], "text", columns=["metric", "mean", "std"])
    assert text.decode().strip() == "metric  mean±std"


def test_report_text_mean_std_merged():
    rows = [{"metric": "average_precision", "mean": 0.57334567, "std": 0.0252}]
    out = emit_report(rows, "text", columns=["metric", "mean", "std"]).decode()
    lines = out.strip().split("\n")
    assert len(lines) == 2
    assert "0.573346±0.0252" in lines[1]


def test_report_csv_quoting():
    rows = [{"name": 'has,comma and "quote"', "value": 1.0}]
    out = emit_report(rows, "csv", columns=["name", "value"]).decode()
    assert '"has,comma and ""quote"""' in out


def test_report_jsonl_round_trips():
    rows = [{"metric": "ap", "mean": 0.123456789, "std": 0.01},
            {"metric": "rl", "mean": 0.5, "std": 0.02}]
    out = emit_report(rows, "jsonl", columns=["metric", "mean", "std"])
    parsed = [json.loads(line) for line in out.decode().strip().split("\n")]
    assert parsed[0]["metric"] == "ap"
    assert parsed[0]["mean"] == 0.123457  # 6 significant digits
    assert len(parsed) == 2


def test_report_six_significant_digits():
    out = emit_report([{"v": 1234567.891}], "csv", columns=["v"]).decode()
    assert "1.23457e+06" in out


def test_report_unknown_format_rejected():
    with pytest.raises(InputError):
        emit_report([], "xml", columns=["a"])

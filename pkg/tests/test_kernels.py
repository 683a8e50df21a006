import numpy as np
import pytest

from cmll import (
    CmllParams,
    Dataset,
    InputError,
    InvalidStateError,
    KernelSpec,
    fit_cmll,
    fit_kcmll,
    kernel_matrix,
    kernel_project,
    resolve_gamma_median,
    resolve_spec,
    sym_eig_topk,
)

from conftest import random_dataset, structured_dataset
from oracles import principal_angles


# ---------------------------------------------------------------------------
# kernel_matrix

def test_linear_kernel_identity_rows():
    a = np.eye(2)
    assert np.array_equal(kernel_matrix(KernelSpec(kind="linear"), a, a), np.eye(2))


def test_rbf_unit_diagonal(rng):
    x = rng.standard_normal((6, 3))
    k = kernel_matrix(KernelSpec(kind="rbf", gamma=0.7), x, x)
    assert np.array_equal(np.diag(k), np.ones(6))
    assert np.array_equal(k, k.T)


def test_rbf_single_pair_value():
    a = np.array([[0.0]])
    b = np.array([[1.0]])
    k = kernel_matrix(KernelSpec(kind="rbf", gamma=1.0), a, b)
    assert abs(k[0, 0] - np.exp(-1.0)) <= 1e-12
    assert abs(k[0, 0] - 0.36787944) <= 1e-7


def test_kernel_psd(rng):
    x = rng.standard_normal((15, 4))
    for spec in (KernelSpec(kind="linear"), KernelSpec(kind="rbf", gamma=0.3)):
        k = kernel_matrix(spec, x, x)
        w = np.linalg.eigvalsh(k)
        assert w.min() >= -1e-10 * max(1.0, w.max())


def test_rbf_unresolved_gamma_rejected(rng):
    x = rng.standard_normal((4, 2))
    with pytest.raises(InvalidStateError):
        kernel_matrix(KernelSpec(kind="rbf", gamma="median-heuristic"), x, x)
    with pytest.raises(InvalidStateError):
        kernel_matrix(KernelSpec(kind="rbf"), x, x)


def test_kernel_rejects_width_mismatch(rng):
    with pytest.raises(InputError):
        kernel_matrix(KernelSpec(kind="linear"), np.zeros((2, 3)), np.zeros((2, 4)))


def test_unknown_kernel_kind_rejected():
    with pytest.raises(InputError):
        KernelSpec(kind="poly")


# ---------------------------------------------------------------------------
# resolve_gamma_median

def test_median_two_points():
    x = np.array([[0.0], [2.0]])
    assert abs(resolve_gamma_median(x) - 0.25) <= 1e-15


def test_median_duplicate_rows_rejected():
    with pytest.raises(InputError):
        resolve_gamma_median(np.ones((5, 2)))


def test_median_matches_exhaustive_pairs(rng):
    x = rng.standard_normal((50, 3))
    dists = [
        float(np.sum((x[i] - x[j]) ** 2))
        for i in range(50)
        for j in range(i + 1, 50)
    ]
    assert len(dists) == 1225
    expected = 1.0 / float(np.median(dists))
    assert abs(resolve_gamma_median(x) - expected) <= 1e-12 * expected


def test_median_sampling_deterministic(rng):
    x = rng.standard_normal((1500, 2))
    assert resolve_gamma_median(x, seed=3) == resolve_gamma_median(x, seed=3)
    assert resolve_gamma_median(x, seed=3, max_rows=100) == resolve_gamma_median(x, seed=3, max_rows=100)


def test_resolve_spec(rng):
    x = rng.standard_normal((10, 2))
    spec = resolve_spec(KernelSpec(kind="rbf", gamma="median-heuristic"), x, seed=1)
    assert spec.is_resolved() and spec.gamma > 0
    lin = resolve_spec(KernelSpec(kind="linear"), x)
    assert lin.kind == "linear"


# ---------------------------------------------------------------------------
# fit_kcmll

def test_kcmll_beta_zero_matches_label_pca(rng):
    ds = random_dataset(rng, n=25, n_features=5, n_labels=4)
    model = fit_kcmll(ds, KernelSpec(kind="rbf", gamma=0.5),
                      CmllParams(beta=0.0, lam=0.0, m=2, d=3))
    pairs = sym_eig_topk(ds.Y @ ds.Y.T, 2)
    assert principal_angles(model.V, pairs.vectors).max() <= 1e-6


def test_kcmll_metric_constraint_every_sweep(rng):
    ds = random_dataset(rng, n=20, n_features=5, n_labels=4)
    q = kernel_matrix(KernelSpec(kind="rbf", gamma=0.4), ds.X, ds.X)
    ridge = 1e-8 * np.trace(q) / 20
    qt = q + ridge * np.eye(20)
    for sweeps in (1, 2, 4):
        model = fit_kcmll(ds, KernelSpec(kind="rbf", gamma=0.4),
                          CmllParams(beta=1.2, lam=0.0, m=2, d=3, maxc=sweeps, tol=1e-14))
        assert np.abs(model.R.T @ qt @ model.R - np.eye(3)).max() <= 1e-6
        assert np.abs(model.V.T @ model.V - np.eye(2)).max() <= 1e-8


def test_kcmll_monotone_trace(rng):
    ds = random_dataset(rng, n=30, n_features=6, n_labels=5)
    model = fit_kcmll(ds, KernelSpec(kind="rbf", gamma=0.3),
                      CmllParams(beta=2.0, lam=0.1, m=2, d=4, maxc=50))
    gammas = [g for g, _ in model.trace]
    for a, b in zip(gammas, gammas[1:]):
        assert b >= a - 1e-9 * max(abs(a), 1.0)


def test_kcmll_linear_matches_linear_fit(rng):
    ds = structured_dataset(rng, n=60, n_features=10, n_labels=6)
    params = CmllParams(beta=1.0, lam=0.1, m=3, d=4, maxc=800, tol=1e-11, seed=1)
    lin = fit_cmll(ds, params)
    ker = fit_kcmll(ds, KernelSpec(kind="linear"), params)
    g1, g2 = lin.trace[-1][0], ker.trace[-1][0]
    assert abs(g1 - g2) <= 1e-6 * abs(g1)


def test_kcmll_tiny_gamma_still_terminates(rng):
    ds = random_dataset(rng, n=15, n_features=4, n_labels=3)
    model = fit_kcmll(ds, KernelSpec(kind="rbf", gamma=1e-12),
                      CmllParams(beta=1.0, lam=0.0, m=2, d=2, maxc=50))
    q = kernel_matrix(KernelSpec(kind="rbf", gamma=1e-12), ds.X, ds.X)
    ridge = 1e-8 * np.trace(q) / 15
    qt = q + ridge * np.eye(15)
    assert np.abs(model.R.T @ qt @ model.R - np.eye(2)).max() <= 1e-6
    assert len(model.trace) <= 50


def test_kcmll_unresolved_spec_rejected(rng):
    ds = random_dataset(rng, n=10, n_features=3, n_labels=3)
    with pytest.raises(InvalidStateError):
        fit_kcmll(ds, KernelSpec(kind="rbf", gamma="median-heuristic"),
                  CmllParams(beta=1.0, lam=0.0, m=2, d=2))


def test_kcmll_d_up_to_n_allowed(rng):
    ds = random_dataset(rng, n=12, n_features=3, n_labels=3)
    model = fit_kcmll(ds, KernelSpec(kind="rbf", gamma=0.5),
                      CmllParams(beta=1.0, lam=0.0, m=2, d=8, maxc=5))
    assert model.R.shape == (12, 8)
    with pytest.raises(InputError):
        fit_kcmll(ds, KernelSpec(kind="rbf", gamma=0.5),
                  CmllParams(beta=1.0, lam=0.0, m=2, d=13, maxc=5))


# ---------------------------------------------------------------------------
# kernel_project

def test_project_training_rows_match_internal(rng):
    ds = random_dataset(rng, n=20, n_features=5, n_labels=4)
    spec = KernelSpec(kind="rbf", gamma=0.6)
    model = fit_kcmll(ds, spec, CmllParams(beta=1.0, lam=0.0, m=2, d=3, maxc=10))
    q = kernel_matrix(spec, ds.X, ds.X)
    internal = (q - q.mean(axis=0)[None, :]) @ model.R
    assert np.abs(kernel_project(model, ds.X) - internal).max() <= 1e-10


def test_project_hand_computed_toy():
    # 3 training points in 1-D, linear kernel, hand-checkable R^t q
    x = np.array([[1.0], [2.0], [3.0]])
    y = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    ds = Dataset(x, y)
    model = fit_kcmll(ds, KernelSpec(kind="linear"),
                      CmllParams(beta=1.0, lam=0.0, m=2, d=1, maxc=30))
    x_new = np.array([[4.0]])
    q_vec = (x @ x_new.T).ravel()          # [4, 8, 12]
    q_train = x @ x.T
    col_means = q_train.mean(axis=0)       # [4, 8, 12] too
    want = model.R.T @ (q_vec - col_means)
    assert np.abs(kernel_project(model, x_new)[0] - want).max() <= 1e-12


def test_project_linear_predictions_match_linear_model(rng):
    from cmll import Pipeline, predict_scores, ridge_fit, encode_features

    ds = structured_dataset(rng, n=50, n_features=8, n_labels=5)
    # unreachable tol: both runs polish for the full fixed sweep count, which
    # contracts the iterates well past what the objective-change stop resolves
    params = CmllParams(beta=1.0, lam=0.0, m=3, d=3, maxc=300, tol=1e-300, seed=2)
    lin = fit_cmll(ds, params)
    ker = fit_kcmll(ds, KernelSpec(kind="linear"), params)
    u_lin = encode_features(lin, ds.X)
    u_ker = kernel_project(ker, ds.X)
    pipe_lin = Pipeline(regressor=ridge_fit(u_lin, lin.V, 0.01), embedding=lin, method="cmll")
    pipe_ker = Pipeline(regressor=ridge_fit(u_ker, ker.V, 0.01), embedding=ker, method="kcmll")
    x_test = rng.standard_normal((12, 8))
    s1 = predict_scores(pipe_lin, x_test)
    s2 = predict_scores(pipe_ker, x_test)
    assert np.abs(s1 - s2).max() <= 1e-6


def test_project_rejects_width_mismatch(rng):
    ds = random_dataset(rng, n=10, n_features=4, n_labels=3)
    model = fit_kcmll(ds, KernelSpec(kind="rbf", gamma=0.5),
                      CmllParams(beta=1.0, lam=0.0, m=2, d=2, maxc=5))
    with pytest.raises(InputError):
        kernel_project(model, np.zeros((2, 3)))

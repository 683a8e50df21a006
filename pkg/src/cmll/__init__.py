"""Compact multi-label learning toolkit.

Joint feature/label embedding by dependence maximization with label-recovery
control, its kernelized variant, degenerate special cases, ranking metrics,
and an experiment harness.
"""

from .data import Dataset, FoldPlan, parse_dataset, parse_dataset_file, split_folds, write_dataset
from .embedding import (
    CmllModel,
    CmllParams,
    decoder_w,
    encode_features,
    fit_cmll,
    fit_cmll_y,
    fit_mddm,
    objective_gamma,
)
from .errors import (
    CmllError,
    InputError,
    InvalidStateError,
    ModelFormatError,
    NumericError,
    ParseError,
    UndefinedMetricError,
)
from .harness import (
    ExperimentConfig,
    GridSearchResult,
    SensitivityReport,
    alpha_sensitivity,
    cross_validate,
    fit_pipeline,
    full_ratio_grid,
    ratio_grid_search,
)
from .kernels import (
    KcmllModel,
    KernelSpec,
    fit_kcmll,
    kernel_matrix,
    kernel_project,
    resolve_gamma_median,
    resolve_spec,
)
from .learner import Pipeline, Regressor, Scaler, binarize, kridge_fit, predict_scores, ridge_fit
from .linalg import EigPairs, center_columns, gen_sym_eig_topk, sym_eig_topk
from .metrics import (
    EvalReport,
    average_precision,
    bound_diagnostics,
    micro_f1,
    ndcg_at_k,
    one_error,
    precision_at_k,
    ranking_loss,
    theorem1_bound,
)
from .modelio import load_model, load_model_file, save_model, save_model_file
from .report import emit_report
from .synthetic import make_synthetic

__version__ = "0.1.0"

__all__ = [
    "CmllError", "InputError", "InvalidStateError", "ModelFormatError",
    "NumericError", "ParseError", "UndefinedMetricError",
    "EigPairs", "center_columns", "sym_eig_topk", "gen_sym_eig_topk",
    "Dataset", "FoldPlan", "parse_dataset", "parse_dataset_file",
    "write_dataset", "split_folds",
    "CmllParams", "CmllModel", "objective_gamma", "decoder_w",
    "fit_cmll", "fit_cmll_y", "fit_mddm", "encode_features",
    "KernelSpec", "KcmllModel", "kernel_matrix", "resolve_gamma_median",
    "resolve_spec", "fit_kcmll", "kernel_project",
    "Regressor", "Scaler", "Pipeline", "ridge_fit", "kridge_fit",
    "predict_scores", "binarize",
    "EvalReport", "average_precision", "micro_f1", "ranking_loss",
    "one_error", "precision_at_k", "ndcg_at_k", "theorem1_bound",
    "bound_diagnostics",
    "save_model", "load_model", "save_model_file", "load_model_file",
    "ExperimentConfig", "GridSearchResult", "SensitivityReport",
    "cross_validate", "fit_pipeline", "ratio_grid_search", "full_ratio_grid",
    "alpha_sensitivity",
    "emit_report", "make_synthetic",
    "__version__",
]

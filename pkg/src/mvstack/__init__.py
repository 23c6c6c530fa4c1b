"""Multi-view stacking for binary classification.

A base learner (cross-validation tuned logistic ridge) is fit per view; a
meta-learner combines the views' cross-validated predictions and, through
nonnegativity and sparsity, performs view selection. The package also ships
a block-correlated data simulator, selection/classification metrics, and a
batch experiment harness with a CLI.
"""

__version__ = "0.1.0"

from .dataset import (FoldAssignment, MultiViewDataset, apply_standardization,
                      load_multiview_csv, log2_transform, make_folds,
                      standardize_features, write_multiview_csv)
from .glm import (GlmFit, LambdaPath, PenaltySpec, binomial_deviance, cv_tune,
                  fit_penalized_logistic, fit_unpenalized_logistic, lambda_path,
                  predict_proba)
from .numerics import RngStream, cholesky, sigmoid, soft_threshold

__all__ = [
    "FoldAssignment", "MultiViewDataset", "apply_standardization",
    "load_multiview_csv", "log2_transform", "make_folds",
    "standardize_features", "write_multiview_csv",
    "GlmFit", "LambdaPath", "PenaltySpec", "binomial_deviance", "cv_tune",
    "fit_penalized_logistic", "fit_unpenalized_logistic", "lambda_path",
    "predict_proba",
    "RngStream", "cholesky", "sigmoid", "soft_threshold",
    "__version__",
]

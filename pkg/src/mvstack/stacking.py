"""The multi-view stacking pipeline.

A cross-validation tuned logistic ridge is trained per view; K-fold
cross-validation produces held-out probability predictions per view, which
are collected column-wise into the n x V matrix Z; a meta-learner fit on
(Z, y) combines the views. The final classifier applies the meta-model to
the full-data base models' predictions.
"""

import json
from dataclasses import dataclass

import numpy as np

from .dataset import FoldAssignment, make_folds
from .errors import BaseFitError, ViewStructureMismatch
from .glm import GlmFit, PenaltySpec, cv_tune, fit_penalized_logistic, predict_proba
from .meta import MetaModel, fit_meta, meta_model_from_dict

SCHEMA_VERSION = 1


@dataclass
class CvPredictionMatrix:
    """Held-out base-learner probabilities, one column per view."""

    Z: np.ndarray
    fold_assignment: FoldAssignment
    base_lambdas: dict  # view name -> lambda (full data) or (view, fold) -> lambda


@dataclass
class StackedClassifier:
    base_models: list        # one GlmFit per view, full-data refits
    meta: MetaModel
    view_names: list
    view_sizes: tuple
    preprocessing: dict = None  # optional {"means": ..., "sds": ...}

    def to_json(self):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "view_names": list(self.view_names),
            "view_sizes": list(self.view_sizes),
            "base_models": [
                {
                    "view": nm,
                    "lambda": f.lambda_used,
                    "alpha": f.alpha_used,
                    "intercept": f.intercept,
                    "coefficients": f.coefficients.tolist(),
                }
                for nm, f in zip(self.view_names, self.base_models)
            ],
            "meta": self.meta.to_dict(),
            "preprocessing": None if self.preprocessing is None else {
                "means": np.asarray(self.preprocessing["means"]).tolist(),
                "sds": np.asarray(self.preprocessing["sds"]).tolist(),
            },
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema {doc.get('schema_version')!r}")
        base = [
            GlmFit(intercept=b["intercept"],
                   coefficients=np.asarray(b["coefficients"]),
                   lambda_used=b["lambda"], alpha_used=b["alpha"],
                   converged=True, n_iterations=0, deviance=float("nan"))
            for b in doc["base_models"]
        ]
        pre = doc.get("preprocessing")
        if pre is not None:
            pre = {"means": np.asarray(pre["means"]), "sds": np.asarray(pre["sds"])}
        return cls(base_models=base, meta=meta_model_from_dict(doc["meta"]),
                   view_names=doc["view_names"],
                   view_sizes=tuple(doc["view_sizes"]), preprocessing=pre)


_BASE_ALPHA = 0.0  # logistic ridge base learner


def _tune_base(X, y, rng):
    return cv_tune(X, y, alpha=_BASE_ALPHA, nonnegative=False, K=10, rng=rng,
                   standardize=True)


def fit_base_models(d, rng):
    """Full-data cross-validation tuned logistic ridge per view."""
    fits, lambdas = [], {}
    for v, name in enumerate(d.view_names):
        try:
            lam, fit = _tune_base(d.views[v], d.outcome, rng.substream(f"view:{name}"))
        except Exception as exc:
            raise BaseFitError(f"base fit failed for view {name!r}: {exc}",
                               view=name) from exc
        fits.append(fit)
        lambdas[name] = lam
    return fits, lambdas


def build_cv_predictions(d, K=10, rng=None, folds=None, base_lambdas=None):
    """Held-out probability matrix Z via one shared stratified fold split.

    With base_lambdas (a view-name -> lambda mapping from a full-data tune),
    each fold refits at that fixed penalty; otherwise the penalty is re-tuned
    inside every training fold (fully nested, the default).
    """
    if K < 2:
        raise ValueError("need at least 2 folds")
    if folds is None:
        folds = make_folds(d.n, K, rng.substream("folds"), stratify_labels=d.outcome)
    Z = np.empty((d.n, d.n_views))
    lambdas = {}
    for v, name in enumerate(d.view_names):
        X = d.views[v]
        for k in range(1, folds.K + 1):
            tr, te = folds.train_indices(k), folds.test_indices(k)
            try:
                if base_lambdas is None:
                    lam, fit = _tune_base(X[tr], d.outcome[tr],
                                          rng.substream(f"view:{name}/fold:{k}"))
                else:
                    lam = base_lambdas[name]
                    fit = fit_penalized_logistic(
                        X[tr], d.outcome[tr],
                        PenaltySpec(lam=lam, alpha=_BASE_ALPHA,
                                    standardize_inputs=True))
            except Exception as exc:
                raise BaseFitError(
                    f"base fit failed for view {name!r}, fold {k}: {exc}",
                    view=name, fold=k) from exc
            lambdas[(name, k)] = lam
            Z[te, v] = predict_proba(fit, X[te])
    return CvPredictionMatrix(Z=Z, fold_assignment=folds, base_lambdas=lambdas)


def fit_mvs(d, meta_kind, K=10, rng=None, base_tune_once=False,
            preprocessing=None, **meta_options):
    """Fit the full stacking pipeline with the named meta-learner.

    base_tune_once reuses the full-data penalty when building Z instead of
    re-tuning inside each training fold; cheaper, recorded by the harness.
    """
    base_models, base_lambdas, cvpred = fit_base_and_z(
        d, K=K, rng=rng, base_tune_once=base_tune_once)
    meta = fit_meta(meta_kind, cvpred.Z, d.outcome,
                    rng.substream(f"meta:{meta_kind}"),
                    view_names=d.view_names, **meta_options)
    return StackedClassifier(base_models=base_models, meta=meta,
                             view_names=list(d.view_names),
                             view_sizes=d.view_sizes, preprocessing=preprocessing)


def fit_base_and_z(d, K=10, rng=None, base_tune_once=False):
    """Steps shared by every meta-learner: base models and the Z matrix."""
    base_models, base_lambdas = fit_base_models(d, rng.substream("base"))
    cvpred = build_cv_predictions(
        d, K=K, rng=rng.substream("z"),
        base_lambdas=base_lambdas if base_tune_once else None)
    return base_models, base_lambdas, cvpred


def base_prediction_matrix(clf, d):
    """Per-view probability predictions of the fitted base models."""
    if d.n_views != len(clf.base_models) or d.view_sizes != tuple(clf.view_sizes):
        raise ViewStructureMismatch(
            f"expected views {tuple(clf.view_sizes)}, got {d.view_sizes}")
    if d.view_names is not None and list(d.view_names) != list(clf.view_names):
        raise ViewStructureMismatch("view names do not match the fitted model")
    z = np.empty((d.n, d.n_views))
    for v in range(d.n_views):
        z[:, v] = predict_proba(clf.base_models[v], d.views[v])
    return z


def predict(clf, newdata):
    """Stacked probability predictions on new data.

    Stored preprocessing statistics (from the training data) are applied
    first; the meta-model then combines the per-view base probabilities.
    """
    d = newdata
    if clf.preprocessing is not None:
        from .dataset import apply_standardization
        d = apply_standardization(d, clf.preprocessing["means"],
                                  clf.preprocessing["sds"])
    return clf.meta.predict(base_prediction_matrix(clf, d))

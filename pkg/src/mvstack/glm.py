"""Penalized and unpenalized logistic regression.

The penalized solver minimizes

    mean negative log-likelihood
      + lambda * sum_j w_j * [ (1-alpha)/2 * beta_j^2 + alpha * |beta_j| ]

by cyclic coordinate descent on a quadratic upper bound of the loss. With
the nonnegative flag, coordinate updates that would go negative clamp to
zero; the intercept is never penalized or clamped. A non-finite feature
weight excludes that column outright, which is how an "infinite" adaptive
penalty is realized without arithmetic on infinities.
"""

from dataclasses import dataclass, field

import numpy as np

from ._cd import cd_sweeps
from .dataset import make_folds
from .errors import DimensionMismatch, NullPath
from .numerics import log1pexp, sigmoid

MAX_SWEEPS = 100_000
COEF_CHANGE_TOL = 1e-7
PATH_LENGTH = 100
PATH_RATIO = 1e-4
SEPARATION_NORM_CAP = 1e3


@dataclass
class PenaltySpec:
    """Penalty and preprocessing switches for one logistic fit."""

    lam: float = 0.0
    alpha: float = 1.0
    feature_weights: np.ndarray = None  # None = all ones; np.inf excludes a column
    nonnegative: bool = False
    standardize_inputs: bool = False
    fit_intercept: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.feature_weights is not None:
            self.feature_weights = np.asarray(self.feature_weights, dtype=np.float64)
            if np.any(self.feature_weights < 0):
                raise ValueError("feature weights must be nonnegative")

    def weights_for(self, p):
        if self.feature_weights is None:
            return np.ones(p)
        if self.feature_weights.shape[0] != p:
            raise DimensionMismatch("feature_weights length must match column count")
        return self.feature_weights


@dataclass
class GlmFit:
    intercept: float
    coefficients: np.ndarray
    lambda_used: float
    alpha_used: float
    converged: bool
    n_iterations: int
    deviance: float


@dataclass
class LambdaPath:
    """Strictly decreasing penalty grid; last/first value ratio is 1e-4."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(np.diff(self.values) >= 0):
            raise ValueError("path values must be strictly decreasing")


def _validate_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X is {X.shape}, y has length {y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must not contain NaN or infinities")
    return X, y


def _standardize_columns(X):
    """Column-wise center/scale with population sd; constant columns get scale 1."""
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (X - center) / scale, center, scale


def _prep_columns(X, spec):
    """Solver-side reparametrization of the columns.

    Standardization is the caller-visible switch. Even without it, columns
    are centered whenever an intercept is fit: the intercept absorbs the
    shift exactly, penalties see the same coefficients, and the coordinate
    updates decouple from the intercept.
    """
    p = X.shape[1]
    if p == 0:
        return X, np.zeros(0), np.ones(0)
    if spec.standardize_inputs:
        return _standardize_columns(X)
    if spec.fit_intercept:
        center = X.mean(axis=0)
        return X - center, center, np.ones(p)
    return X, np.zeros(p), np.ones(p)


def _null_intercept(y):
    """Intercept of the intercept-only model, logit of the clipped class rate."""
    pbar = min(max(float(np.mean(y)), 1e-12), 1 - 1e-12)
    return float(np.log(pbar / (1 - pbar)))


def binomial_deviance(y, p_hat):
    """-2 * sum of Bernoulli log-likelihoods; probabilities clipped away from 0/1."""
    y = np.asarray(y, dtype=np.float64)
    p = np.clip(np.asarray(p_hat, dtype=np.float64), 1e-12, 1 - 1e-12)
    return float(-2.0 * np.sum(y * np.log(p) + (1 - y) * np.log1p(-p)))


def mean_nll(X, y, intercept, coef):
    """Mean logistic negative log-likelihood at the given parameters."""
    eta = intercept + X @ coef
    return float(np.mean(log1pexp(eta) - y * eta))


def penalized_objective(X, y, intercept, coef, spec):
    """Mean NLL plus the elastic-net penalty, on the scale of the given X."""
    w = spec.weights_for(X.shape[1])
    finite = np.isfinite(w)
    pen = np.sum(w[finite] * ((1 - spec.alpha) / 2 * coef[finite] ** 2
                              + spec.alpha * np.abs(coef[finite])))
    return mean_nll(X, y, intercept, coef) + spec.lam * pen


def _run_cd(Xf, y, w, spec, beta0, beta, max_sweeps, tol):
    sweeps, converged = cd_sweeps(
        Xf, y, w, float(spec.lam), float(spec.alpha), bool(spec.nonnegative),
        bool(spec.fit_intercept), beta0, beta, int(max_sweeps), float(tol))
    return sweeps, converged


def fit_penalized_logistic(X, y, spec, max_sweeps=MAX_SWEEPS, tol=COEF_CHANGE_TOL,
                           init=None):
    """Fit one penalized logistic regression.

    Coefficients are reported on the original input scale even when
    standardize_inputs is set. Convergence means the largest coefficient
    change over a full sweep dropped below tol; otherwise the best (latest)
    iterate is returned with converged=False.

    init, when given, is an (intercept, coefficients) pair on the original
    scale used as a warm start.
    """
    X, y = _validate_xy(X, y)
    n, p = X.shape
    w = spec.weights_for(p)

    Xw, center, scale = _prep_columns(X, spec)
    Xf = np.asfortranarray(Xw)

    beta = np.zeros(p)
    beta0 = np.zeros(1)
    if init is not None:
        init_b0, init_beta = init
        beta = np.asarray(init_beta, dtype=np.float64).copy() * scale
        beta0[0] = float(init_b0) + float(center @ np.asarray(init_beta))
    elif spec.fit_intercept:
        beta0[0] = _null_intercept(y)
    excl = ~np.isfinite(w)
    beta[excl] = 0.0

    sweeps, converged = _run_cd(Xf, y, w, spec, beta0, beta, max_sweeps, tol)

    coef = beta / scale
    intercept = float(beta0[0] - (center / scale) @ beta)
    dev = binomial_deviance(y, sigmoid(intercept + X @ coef))
    return GlmFit(intercept=intercept, coefficients=coef,
                  lambda_used=float(spec.lam), alpha_used=float(spec.alpha),
                  converged=bool(converged), n_iterations=int(sweeps), deviance=dev)


def lambda_path(X, y, spec):
    """Penalty grid anchored at the null-model boundary.

    The top value is the largest score |x_j'(y - ybar)| / (n * max(alpha,1e-3)
    * w_j) over admissible features; with the nonnegative flag only features
    with a positive score are admissible. Raises NullPath when no feature
    qualifies, meaning the all-zero model is optimal at every penalty.
    """
    X, y = _validate_xy(X, y)
    n, p = X.shape
    w = spec.weights_for(p)
    Xw, _, _ = _prep_columns(X, spec)
    scores = Xw.T @ (y - y.mean()) / n
    alpha_eff = max(spec.alpha, 1e-3)
    admissible = np.isfinite(w) & (w > 0)
    if spec.nonnegative:
        admissible &= scores > 0
    else:
        admissible &= scores != 0
    if not np.any(admissible):
        raise NullPath("no admissible feature at the top of the path")
    lam_max = np.max(np.abs(scores[admissible]) / (alpha_eff * w[admissible]))
    # summation order in the solver differs from the BLAS reduction here, so
    # the boundary score can round a hair above lam_max; nudge the anchor up
    # so the null model is exact at values[0]
    lam_max *= 1.0 + 1e-12
    return LambdaPath(values=np.geomspace(lam_max, lam_max * PATH_RATIO, PATH_LENGTH))


def fit_path(X, y, spec, lambdas, max_sweeps=MAX_SWEEPS, tol=COEF_CHANGE_TOL,
             stop_at_support=None):
    """Warm-started fits along a decreasing penalty grid.

    Returns a list of GlmFit in grid order. Standardization statistics are
    computed once from this X, matching a sequence of cold fits. With
    stop_at_support, the descent halts after the first grid point whose
    fit has at least that many active coefficients.
    """
    X, y = _validate_xy(X, y)
    n, p = X.shape
    w = spec.weights_for(p)
    Xw, center, scale = _prep_columns(X, spec)
    Xf = np.asfortranarray(Xw)

    beta = np.zeros(p)
    beta0 = np.zeros(1)
    if spec.fit_intercept:
        beta0[0] = _null_intercept(y)
    fits = []
    for lam in lambdas:
        step = PenaltySpec(lam=float(lam), alpha=spec.alpha,
                           feature_weights=spec.feature_weights,
                           nonnegative=spec.nonnegative,
                           standardize_inputs=False,
                           fit_intercept=spec.fit_intercept)
        sweeps, converged = _run_cd(Xf, y, w, step, beta0, beta, max_sweeps, tol)
        coef = beta / scale
        intercept = float(beta0[0] - (center / scale) @ beta)
        dev = binomial_deviance(y, sigmoid(intercept + X @ coef))
        fits.append(GlmFit(intercept=intercept, coefficients=coef.copy(),
                           lambda_used=float(lam), alpha_used=float(spec.alpha),
                           converged=bool(converged), n_iterations=int(sweeps),
                           deviance=dev))
        if stop_at_support is not None and np.count_nonzero(beta) >= stop_at_support:
            break
    return fits


def cv_tune(X, y, alpha, nonnegative=False, weights=None, K=10, rng=None,
            standardize=False, fit_intercept=True, loss="deviance"):
    """Pick lambda by K-fold cross-validation over the shared penalty path.

    The path is anchored on the full data; each training fold refits the
    whole path warm-started, and the held-out binomial deviance (or, behind
    the flag, misclassification rate) is pooled across folds. Ties break
    toward the larger lambda. Returns (best_lambda, full-data fit at it).
    """
    if K < 2:
        raise ValueError("need at least 2 folds")
    if rng is None:
        raise ValueError("cv_tune requires an RngStream")
    X, y = _validate_xy(X, y)
    n = X.shape[0]
    spec = PenaltySpec(alpha=alpha, feature_weights=weights, nonnegative=nonnegative,
                       standardize_inputs=standardize, fit_intercept=fit_intercept)
    path = lambda_path(X, y, spec)
    folds = make_folds(n, K, rng, stratify_labels=y)

    crit = np.zeros(path.values.size)
    for k in range(1, K + 1):
        tr, te = folds.train_indices(k), folds.test_indices(k)
        fits = fit_path(X[tr], y[tr], spec, path.values)
        for i, f in enumerate(fits):
            p_hat = sigmoid(f.intercept + X[te] @ f.coefficients)
            if loss == "deviance":
                crit[i] += binomial_deviance(y[te], p_hat)
            elif loss == "accuracy":
                crit[i] += np.sum((p_hat >= 0.5) != y[te])
            else:
                raise ValueError(f"unknown tuning loss {loss!r}")
    crit /= n

    best_idx = int(np.argmin(crit))  # first occurrence = largest lambda
    full_fits = fit_path(X, y, spec, path.values[:best_idx + 1])
    return float(path.values[best_idx]), full_fits[-1]


def fit_unpenalized_logistic(X, y, nonnegative=False):
    """Maximum-likelihood logistic fit.

    Unconstrained fits use damped Newton iterations; the nonnegative variant
    is the small-ridge limit of the penalized solver (lambda = 1e-8, pure L2).
    Separation is guarded by a cap of 1e3 on the coefficient norm; a capped
    fit is returned with converged=False.
    """
    X, y = _validate_xy(X, y)
    n, p = X.shape
    if p > n:
        raise DimensionMismatch(f"need at least as many rows as columns ({n} < {p})")

    if nonnegative:
        spec = PenaltySpec(lam=1e-8, alpha=0.0, nonnegative=True,
                           standardize_inputs=False, fit_intercept=True)
        fit = fit_penalized_logistic(X, y, spec)
        norm = float(np.linalg.norm(fit.coefficients))
        if norm > SEPARATION_NORM_CAP:
            fit.coefficients = fit.coefficients * (SEPARATION_NORM_CAP / norm)
            fit.converged = False
            fit.deviance = binomial_deviance(
                y, sigmoid(fit.intercept + X @ fit.coefficients))
        fit.lambda_used = 0.0
        return fit

    X1 = np.hstack([np.ones((n, 1)), X])
    theta = np.zeros(p + 1)
    converged = False
    capped = False
    it = 0
    for it in range(1, 201):
        eta = X1 @ theta
        prob = sigmoid(eta)
        g = X1.T @ (prob - y) / n
        if np.max(np.abs(g)) < 1e-10:
            converged = True
            break
        wdiag = prob * (1 - prob)
        H = (X1 * wdiag[:, None]).T @ X1 / n + 1e-10 * np.eye(p + 1)
        step = np.linalg.solve(H, g)
        f0 = mean_nll(X, y, theta[0], theta[1:])
        t = 1.0
        for _ in range(60):
            cand = theta - t * step
            if mean_nll(X, y, cand[0], cand[1:]) <= f0 - 1e-4 * t * float(g @ step):
                break
            t *= 0.5
        theta = theta - t * step
        if np.linalg.norm(theta[1:]) > SEPARATION_NORM_CAP:
            theta[1:] *= SEPARATION_NORM_CAP / np.linalg.norm(theta[1:])
            capped = True
            break

    dev = binomial_deviance(y, sigmoid(theta[0] + X @ theta[1:]))
    return GlmFit(intercept=float(theta[0]), coefficients=theta[1:].copy(),
                  lambda_used=0.0, alpha_used=0.0,
                  converged=converged and not capped, n_iterations=it, deviance=dev)


def predict_proba(fit, X):
    """sigmoid(intercept + X @ coefficients), elementwise."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != fit.coefficients.shape[0]:
        raise DimensionMismatch(
            f"X has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"fit has {fit.coefficients.shape[0]} coefficients")
    return sigmoid(fit.intercept + X @ fit.coefficients)


def log_likelihood(fit, X, y):
    """Total Bernoulli log-likelihood of a fit on (X, y)."""
    X, y = _validate_xy(X, y)
    return -X.shape[0] * mean_nll(X, y, fit.intercept, fit.coefficients)


def kkt_residual(X, y, fit, spec):
    """Largest violation of the stationarity conditions at a fit.

    The smooth part of the gradient includes the L2 penalty term. For a
    nonnegative fit the condition at an active coordinate is
    |g_j + lam*alpha*w_j| = 0 and at a zero coordinate g_j + lam*alpha*w_j
    >= 0; unconstrained fits use the usual soft-threshold subgradient box.
    Checked on the scale the solver actually ran on.
    """
    X, y = _validate_xy(X, y)
    p = X.shape[1]
    w = spec.weights_for(p)
    Xw, center, scale = _prep_columns(X, spec)
    beta = fit.coefficients * scale
    intercept = fit.intercept + float(center @ fit.coefficients)
    n = X.shape[0]
    prob = sigmoid(intercept + Xw @ beta)
    g = Xw.T @ (prob - y) / n + spec.lam * (1 - spec.alpha) * w * beta

    worst = 0.0
    if spec.fit_intercept:
        worst = abs(float(np.mean(prob - y)))
    for j in range(p):
        if not np.isfinite(w[j]):
            continue
        t = spec.lam * spec.alpha * w[j]
        if spec.nonnegative:
            if beta[j] > 0:
                worst = max(worst, abs(g[j] + t))
            else:
                worst = max(worst, max(0.0, -(g[j] + t)))
        else:
            if beta[j] != 0:
                worst = max(worst, abs(g[j] + t * np.sign(beta[j])))
            else:
                worst = max(worst, max(0.0, abs(g[j]) - t))
    return float(worst)

"""The seven view-combining meta-learners.

All consume an n x V matrix Z of cross-validated base-learner probabilities
plus the outcome, and produce a MetaModel with nonnegative coefficients whose
support is the selected view set. Z columns are never re-standardized: their
dispersion carries information about the base classifiers' confidence.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import make_folds
from .errors import Infeasible, NullPath
from .glm import (PenaltySpec, binomial_deviance, cv_tune, fit_path,
                  fit_penalized_logistic, fit_unpenalized_logistic, lambda_path,
                  log_likelihood)
from .numerics import sigmoid

META_KINDS = ("interpolating", "nn_ridge", "nn_enet", "nn_lasso",
              "nn_adaptive_lasso", "stability_selection", "nnfs")


@dataclass
class MetaModel:
    """A fitted view combiner: nonnegative coefficients over views.

    selected is always the support of the coefficient vector. The
    interpolating kind has no intercept and coefficients summing to one.
    """

    kind: str
    intercept: float  # None for the interpolating predictor
    coefficients: np.ndarray
    selected: np.ndarray
    view_names: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_selected(self):
        return int(self.selected.size)

    @property
    def selected_names(self):
        return [self.view_names[v] for v in self.selected]

    def predict(self, Z):
        Z = np.asarray(Z, dtype=np.float64)
        if self.kind == "interpolating":
            return Z @ self.coefficients
        return sigmoid(self.intercept + Z @ self.coefficients)

    def to_dict(self):
        return {
            "kind": self.kind,
            "intercept": self.intercept,
            "coefficients": {nm: float(c) for nm, c
                             in zip(self.view_names, self.coefficients)},
            "selected": self.selected_names,
            "diagnostics": _jsonify(self.diagnostics),
        }


@dataclass
class StabilityDiagnostics:
    pi_hat: np.ndarray
    q: int
    B: int
    pi_thr: float
    pfer_max: float
    n_path_exhausted: int = 0


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, StabilityDiagnostics):
        return _jsonify(obj.__dict__)
    return obj


def meta_model_from_dict(d):
    names = list(d["coefficients"].keys())
    coef = np.array([d["coefficients"][nm] for nm in names])
    return _make_model(d["kind"], d["intercept"], coef, names,
                       d.get("diagnostics", {}))


def _check_z(Z, y):
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
        raise ValueError("Z must be n x V with one row per outcome")
    if np.any(Z < 0) or np.any(Z > 1):
        raise ValueError("Z entries must be probabilities in [0, 1]")
    return Z, y


def _names(view_names, V):
    if view_names is None:
        return [f"v{i + 1}" for i in range(V)]
    return list(view_names)


def _make_model(kind, intercept, coef, view_names, diagnostics):
    coef = np.asarray(coef, dtype=np.float64)
    return MetaModel(kind=kind, intercept=intercept, coefficients=coef,
                     selected=np.flatnonzero(coef > 0), view_names=view_names,
                     diagnostics=diagnostics)


def _intercept_only(kind, y, view_names, V, diagnostics):
    fit = fit_unpenalized_logistic(np.empty((y.shape[0], 0)), y)
    return _make_model(kind, fit.intercept, np.zeros(V), view_names, diagnostics)


# ---------------------------------------------------------------------------
# penalized logistic meta-learners

def fit_nonneg_glmnet_meta(Z, y, alpha, rng, view_names=None):
    """Nonnegative ridge (alpha 0), elastic net (0.5), or lasso (1) on Z,
    with lambda picked by 10-fold cross-validated deviance."""
    Z, y = _check_z(Z, y)
    V = Z.shape[1]
    view_names = _names(view_names, V)
    kind = {0.0: "nn_ridge", 1.0: "nn_lasso"}.get(float(alpha), "nn_enet")
    try:
        lam, fit = cv_tune(Z, y, alpha=alpha, nonnegative=True, K=10, rng=rng,
                           standardize=False)
    except NullPath:
        return _intercept_only(kind, y, view_names, V, {"null_path": True})
    diag = {"lambda": lam, "alpha": float(alpha)}
    return _make_model(kind, fit.intercept, fit.coefficients, view_names, diag)


def fit_nonneg_adaptive_lasso(Z, y, rng, gamma_grid=(0.5, 1.0, 2.0),
                              view_names=None):
    """Two-stage weighted lasso on Z.

    Stage one fits a cross-validation tuned nonnegative ridge; its
    coefficients define per-view weights 1/beta_v^gamma, with zero-coefficient
    views excluded outright. Stage two tunes (lambda, gamma) jointly by
    10-fold deviance over the gamma grid, each gamma with its own weighted
    path; ties prefer smaller gamma, then larger lambda. A null stage-one
    ridge yields the intercept-only model.
    """
    Z, y = _check_z(Z, y)
    n, V = Z.shape
    view_names = _names(view_names, V)
    kind = "nn_adaptive_lasso"

    try:
        _, ridge = cv_tune(Z, y, alpha=0.0, nonnegative=True, K=10,
                           rng=rng.substream("stage1"), standardize=False)
    except NullPath:
        ridge = None
    if ridge is None or not np.any(ridge.coefficients > 0):
        return _intercept_only(kind, y, view_names, V,
                               {"all_views_excluded": True})
    init = ridge.coefficients

    folds = make_folds(n, 10, rng.substream("stage2"), stratify_labels=y)
    best = None  # (deviance, gamma, lam_idx, gamma_idx)
    paths = {}
    for gi, gamma in enumerate(gamma_grid):
        with np.errstate(divide="ignore"):
            w = np.where(init > 0, 1.0 / np.maximum(init, 1e-300) ** gamma, np.inf)
        spec = PenaltySpec(alpha=1.0, feature_weights=w, nonnegative=True)
        try:
            path = lambda_path(Z, y, spec)
        except NullPath:
            continue
        paths[gi] = (w, path)
        crit = np.zeros(path.values.size)
        for k in range(1, folds.K + 1):
            tr, te = folds.train_indices(k), folds.test_indices(k)
            for i, f in enumerate(fit_path(Z[tr], y[tr], spec, path.values)):
                p_hat = sigmoid(f.intercept + Z[te] @ f.coefficients)
                crit[i] += binomial_deviance(y[te], p_hat)
        idx = int(np.argmin(crit))  # first = largest lambda
        if best is None or crit[idx] < best[0]:
            best = (crit[idx], gamma, idx, gi)

    if best is None:
        return _intercept_only(kind, y, view_names, V,
                               {"all_views_excluded": True})
    _, gamma, idx, gi = best
    w, path = paths[gi]
    spec = PenaltySpec(alpha=1.0, feature_weights=w, nonnegative=True)
    fit = fit_path(Z, y, spec, path.values[:idx + 1])[-1]
    diag = {"gamma": float(gamma), "lambda": float(path.values[idx]),
            "stage1_coefficients": init}
    return _make_model(kind, fit.intercept, fit.coefficients, view_names, diag)


# ---------------------------------------------------------------------------
# interpolating predictor

def _simplex_least_squares(Z, y, max_iter=None):
    """Exact minimizer of ||Z b - y||^2 over the probability simplex.

    Primal active-set method: repeatedly solve the equality-constrained
    problem on the free coordinates, pin variables that a feasibility line
    search drives to zero, and release pinned variables with negative duals.
    A 1e-12 ridge keeps the KKT systems solvable when Z columns are
    collinear.
    """
    Z = np.asarray(Z, dtype=np.float64)
    n, V = Z.shape
    Q = Z.T @ Z + 1e-12 * np.eye(V)
    c = Z.T @ y
    beta = np.full(V, 1.0 / V)
    free = np.ones(V, dtype=bool)
    if max_iter is None:
        max_iter = 20 * (V + 1)

    for _ in range(max_iter):
        F = np.flatnonzero(free)
        k = F.size
        kkt = np.empty((k + 1, k + 1))
        kkt[:k, :k] = Q[np.ix_(F, F)]
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        kkt[k, k] = 0.0
        rhs = np.concatenate([c[F], [1.0]])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        x, mu = sol[:k], sol[k]

        if x.min() >= -1e-12:
            beta = np.zeros(V)
            beta[F] = np.maximum(x, 0.0)
            pinned = np.flatnonzero(~free)
            if pinned.size == 0:
                return beta
            duals = (Q @ beta - c)[pinned] + mu
            worst = int(np.argmin(duals))
            if duals[worst] >= -1e-9:
                return beta
            free[pinned[worst]] = True
            continue

        d = x - beta[F]
        neg = d < -1e-15
        steps = np.where(neg, -beta[F] / np.where(neg, d, -1.0), np.inf)
        t = min(1.0, float(steps.min()))
        bF = beta[F] + t * d
        beta = np.zeros(V)
        beta[F] = np.maximum(bF, 0.0)
        free[F[bF <= 1e-14]] = False
    return beta


def fit_interpolating_predictor(Z, y, view_names=None):
    """Simplex-constrained least-squares combination of the base predictions.

    Coefficients below max(1e-2/V, 1e-8) are zeroed and the survivors
    renormalized to sum one, so predictions remain convex combinations of the
    per-view probabilities (never outside their row-wise range). No intercept.
    """
    Z, y = _check_z(Z, y)
    V = Z.shape[1]
    view_names = _names(view_names, V)
    beta = _simplex_least_squares(Z, y)
    raw = beta.copy()
    cut = max(1e-2 / V, 1e-8)
    beta = np.where(beta < cut, 0.0, beta)
    beta = beta / beta.sum()
    diag = {"pre_threshold_coefficients": raw, "threshold": cut}
    return _make_model("interpolating", None, beta, view_names, diag)


# ---------------------------------------------------------------------------
# nonnegative forward selection

def fit_nnfs(Z, y, view_names=None):
    """Greedy forward selection by AIC with a sign guard.

    Starting from the intercept-only model, each round ranks candidate views
    by the AIC of the unpenalized logistic fit that would include them; the
    best reducer whose resulting coefficients are all nonnegative is added.
    A candidate whose fit turns any coefficient negative is dropped from
    that round only. Stops when no remaining candidate reduces AIC.
    """
    Z, y = _check_z(Z, y)
    n, V = Z.shape
    view_names = _names(view_names, V)

    def aic_of(cols):
        fit = fit_unpenalized_logistic(Z[:, cols] if cols else np.empty((n, 0)), y)
        k = 1 + len(cols)
        return 2 * k - 2 * log_likelihood(fit, Z[:, cols] if cols else np.empty((n, 0)), y), fit

    included = []
    current_aic, current_fit = aic_of(included)
    aic_trace = [current_aic]
    separations = []

    while len(included) < V:
        candidates = [v for v in range(V) if v not in included]
        scored = []
        for v in candidates:
            cols = included + [v]
            a, f = aic_of(cols)
            if not f.converged:
                separations.append(v)
            scored.append((a, v, f))
        scored.sort(key=lambda t: (t[0], t[1]))  # ties: lower view index
        accepted = None
        for a, v, f in scored:
            if a >= current_aic:
                break  # no remaining candidate reduces AIC
            if np.all(f.coefficients >= 0):
                accepted = (a, v, f)
                break
            # negative coefficient: drop from this round's list, try next
        if accepted is None:
            break
        current_aic, v, current_fit = accepted
        included.append(v)
        aic_trace.append(current_aic)

    coef = np.zeros(V)
    coef[included] = current_fit.coefficients
    diag = {"aic_trace": aic_trace, "included_order": list(included),
            "separation_events": sorted(set(separations))}
    return _make_model("nnfs", current_fit.intercept, coef, view_names, diag)


# ---------------------------------------------------------------------------
# stability selection

def pfer_bound(pi_thr, q, V, B):
    """Expected false selections of complementary-pairs selection under the
    unimodality assumption, for per-subsample selection size q out of V.

    Piecewise in the threshold: one form on (1/2 + q/V, 3/4], another on
    (3/4, 1]. Returns inf where the bound does not apply.
    """
    theta = q / V
    if not 0.5 < pi_thr <= 1.0:
        return np.inf
    if pi_thr <= 0.75:
        if pi_thr < 0.5 + theta:
            return np.inf
        denom = 2.0 * (2.0 * pi_thr - 1.0 - 1.0 / (2.0 * B))
        if denom <= 0:
            return np.inf
        return q ** 2 / (V * denom)
    return q ** 2 / V * 4.0 * (1.0 - pi_thr + 1.0 / (2.0 * B)) / (1.0 + 1.0 / B)


def stability_threshold(q, V, B, pfer_max):
    """Smallest 2-decimal threshold in (0.5, 1] whose PFER bound is within
    pfer_max; raises Infeasible when even 1.0 exceeds the bound."""
    if not 1 <= q <= V:
        raise ValueError("need 1 <= q <= V")
    if pfer_max <= 0:
        raise ValueError("pfer_max must be positive")
    for k in range(51, 101):
        thr = k / 100.0
        if pfer_bound(thr, q, V, B) <= pfer_max + 1e-12:
            return thr
    raise Infeasible(
        f"PFER bound exceeds {pfer_max} for every threshold (q={q}, V={V}, B={B})")


def _first_crossing_support(Z, y, q):
    """Support at the first path point activating >= q views of a
    nonnegative lasso; falls back to the terminal support when the path
    never reaches q (reported via the second return value)."""
    spec = PenaltySpec(alpha=1.0, nonnegative=True)
    try:
        path = lambda_path(Z, y, spec)
    except NullPath:
        return np.zeros(Z.shape[1], dtype=bool), True
    fits = fit_path(Z, y, spec, path.values, stop_at_support=q)
    support = fits[-1].coefficients > 0
    return support, int(support.sum()) < q


def fit_stability_selection(Z, y, q, pfer_max, rng, B=50, view_names=None):
    """Complementary-pairs stability selection with the nonnegative lasso.

    Draws B disjoint pairs of half-samples; on each of the 2B subsamples a
    nonnegative lasso path is descended until q views are active and that
    active set recorded. Views whose selection frequency reaches the
    PFER-bound threshold form the stable set, refit by nonnegative logistic
    regression; an empty stable set yields the intercept-only model.
    """
    Z, y = _check_z(Z, y)
    n, V = Z.shape
    if n < 4:
        raise ValueError("stability selection needs at least 4 samples")
    if not 1 <= q <= V:
        raise ValueError("need 1 <= q <= V")
    view_names = _names(view_names, V)
    pi_thr = stability_threshold(q, V, B, pfer_max)

    n2 = n // 2
    counts = np.zeros(V)
    exhausted = 0
    for b in range(B):
        perm = rng.permutation(n)
        for half in (perm[:n2], perm[n2:2 * n2]):
            support, ran_out = _first_crossing_support(Z[half], y[half], q)
            counts += support
            exhausted += ran_out
    pi_hat = counts / (2 * B)
    stable = np.flatnonzero(pi_hat >= pi_thr)

    diag = {"stability": StabilityDiagnostics(
        pi_hat=pi_hat, q=int(q), B=int(B), pi_thr=float(pi_thr),
        pfer_max=float(pfer_max), n_path_exhausted=int(exhausted))}
    if stable.size == 0:
        return _intercept_only("stability_selection", y, view_names, V, diag)
    fit = fit_unpenalized_logistic(Z[:, stable], y, nonnegative=True)
    coef = np.zeros(V)
    coef[stable] = fit.coefficients
    return _make_model("stability_selection", fit.intercept, coef, view_names, diag)


# ---------------------------------------------------------------------------
# dispatch

def fit_meta(kind, Z, y, rng, view_names=None, stability_q=None,
             stability_pfer_max=1.5, stability_B=50, gamma_grid=(0.5, 1.0, 2.0)):
    """Fit the named meta-learner on (Z, y)."""
    if kind == "interpolating":
        return fit_interpolating_predictor(Z, y, view_names=view_names)
    if kind == "nn_ridge":
        return fit_nonneg_glmnet_meta(Z, y, 0.0, rng, view_names=view_names)
    if kind == "nn_enet":
        return fit_nonneg_glmnet_meta(Z, y, 0.5, rng, view_names=view_names)
    if kind == "nn_lasso":
        return fit_nonneg_glmnet_meta(Z, y, 1.0, rng, view_names=view_names)
    if kind == "nn_adaptive_lasso":
        return fit_nonneg_adaptive_lasso(Z, y, rng, gamma_grid=gamma_grid,
                                         view_names=view_names)
    if kind == "stability_selection":
        if stability_q is None:
            raise ValueError("stability_selection requires stability_q")
        return fit_stability_selection(Z, y, stability_q, stability_pfer_max,
                                       rng, B=stability_B, view_names=view_names)
    if kind == "nnfs":
        return fit_nnfs(Z, y, view_names=view_names)
    raise ValueError(f"unknown meta-learner kind {kind!r}")

"""Independent reference implementations used to check the package.

Everything here solves the same problems as the package by a different
route: proximal gradient instead of coordinate descent, exhaustive grid
search instead of active sets, brute-force pair counting instead of rank
statistics, quadrature instead of closed-form integrals. Nothing imports
the solver internals it is checking.
"""

import math

import numpy as np
from numba import njit
from scipy.integrate import simpson


# ---------------------------------------------------------------------------
# proximal (projected) gradient for the penalized logistic objective

@njit(cache=True)
def _ista(X1, y, w, lam, alpha, nonneg, step, max_iter, tol):
    n, p1 = X1.shape
    theta = np.zeros(p1)
    new = np.zeros(p1)
    for it in range(max_iter):
        eta = X1 @ theta
        prob = np.empty(n)
        for i in range(n):
            t = eta[i]
            if t >= 0.0:
                z = np.exp(-t)
                prob[i] = 1.0 / (1.0 + z)
            else:
                z = np.exp(t)
                prob[i] = z / (1.0 + z)
        g = X1.T @ (prob - y) / n
        for j in range(1, p1):
            g[j] += lam * (1.0 - alpha) * w[j - 1] * theta[j]
        delta = 0.0
        for j in range(p1):
            v = theta[j] - step * g[j]
            if j > 0:
                t = step * lam * alpha * w[j - 1]
                if nonneg:
                    v = max(0.0, v - t)
                else:
                    if v > t:
                        v -= t
                    elif v < -t:
                        v += t
                    else:
                        v = 0.0
            if abs(v - theta[j]) > delta:
                delta = abs(v - theta[j])
            new[j] = v
        theta, new = new, theta
        if delta < tol:
            return theta, it + 1
    return theta, max_iter


def projected_gradient_logistic(X, y, lam, alpha, nonneg,
                                max_iter=1_000_000, tol=1e-13):
    """Global minimizer of the penalized logistic objective by ISTA.

    Returns (intercept, coefficients, iterations). The step size is the
    inverse of the smooth part's Lipschitz constant.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    X1 = np.hstack([np.ones((n, 1)), X])
    w = np.ones(p)
    lip = 0.25 * np.linalg.norm(X1, 2) ** 2 / n + lam * (1 - alpha)
    theta, iters = _ista(X1, y, w, float(lam), float(alpha), bool(nonneg),
                         1.0 / lip, int(max_iter), float(tol))
    return float(theta[0]), theta[1:].copy(), iters


def penalized_logistic_objective(X, y, intercept, coef, lam, alpha):
    """Mean NLL plus elastic-net penalty, unit feature weights."""
    eta = intercept + X @ coef
    nll = float(np.mean(np.maximum(eta, 0) + np.log1p(np.exp(-np.abs(eta)))
                        - y * eta))
    pen = lam * float(np.sum((1 - alpha) / 2 * coef ** 2 + alpha * np.abs(coef)))
    return nll + pen


# ---------------------------------------------------------------------------
# simplex-constrained least squares by grid enumeration

def simplex_grid_best(Z, y, step=0.01):
    """Minimum of ||Z b - y||^2 over the 0.01-step grid on the 3-simplex."""
    assert Z.shape[1] == 3
    m = int(round(1.0 / step))
    pts = []
    for i in range(m + 1):
        for j in range(m + 1 - i):
            pts.append((i, j, m - i - j))
    B = np.asarray(pts, dtype=np.float64) / m
    resid = B @ Z.T - y[None, :]
    sse = np.sum(resid ** 2, axis=1)
    k = int(np.argmin(sse))
    return float(sse[k]), B[k]


# ---------------------------------------------------------------------------
# AUC by exhaustive pair counting

def auc_pairwise(y, scores):
    y = np.asarray(y)
    s = np.asarray(scores, dtype=np.float64)
    pos = s[y == 1][:, None]
    neg = s[y == 0][None, :]
    wins = np.sum(pos > neg) + 0.5 * np.sum(pos == neg)
    return wins / (pos.size * neg.size)


# ---------------------------------------------------------------------------
# H measure by fine-grid quadrature over the cost ratio

def _roc_points(y, scores):
    """All empirical ROC points (FPR, TPR), endpoints included; no hull."""
    y = np.asarray(y)
    s = np.asarray(scores, dtype=np.float64)
    n1 = int(np.sum(y == 1))
    n0 = int(np.sum(y == 0))
    order = np.argsort(-s, kind="mergesort")
    ys, ss = y[order], s[order]
    pts = [(0.0, 0.0)]
    c0 = c1 = 0
    for i in range(ys.size):
        c1 += ys[i] == 1
        c0 += ys[i] == 0
        if i + 1 == ys.size or ss[i + 1] != ss[i]:
            pts.append((c0 / n0, c1 / n1))
    return np.asarray(pts)


def h_measure_numeric(y, scores, a=2.0, b=2.0, grid=20001):
    """Quadrature version of the expected-minimum-loss measure.

    The optimal loss at each cost ratio is the minimum over every empirical
    ROC point, which equals the minimum over the convex hull's vertices for
    a linear objective; Simpson's rule integrates against the Beta weight.
    """
    y = np.asarray(y)
    pi1 = float(np.mean(y == 1))
    pi0 = 1.0 - pi1
    pts = _roc_points(y, scores)
    c = np.linspace(0.0, 1.0, grid)
    w = c ** (a - 1) * (1 - c) ** (b - 1) / math.gamma(a) / math.gamma(b) \
        * math.gamma(a + b)
    losses = c[:, None] * pi0 * pts[None, :, 0] \
        + (1 - c[:, None]) * pi1 * (1 - pts[None, :, 1])
    q_star = losses.min(axis=1)
    q_ref = np.minimum(c * pi0, (1 - c) * pi1)
    return 1.0 - simpson(q_star * w, x=c) / simpson(q_ref * w, x=c)

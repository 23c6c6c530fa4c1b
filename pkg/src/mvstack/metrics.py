"""Classification and view-selection performance measures.

Selection-rate conventions: an empty selection has FDR 0 (no discovery, no
false discovery), and TPR is reported as NaN when the truth set is empty so
averages can exclude it. The stability statistic is the chance-corrected
agreement of selected sets across repeated fits; it equals 1 exactly when
every fit selected the same nonempty, non-full set, and its expectation is 0
for random selections of a fixed size.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import betainc

from .errors import DegenerateSelection, OneClassOnly


@dataclass
class SelectionOutcome:
    tpr: float
    fpr: float
    fdr: float


@dataclass
class SelectionMatrix:
    """M x V boolean indicators: which views each of M fitted models selected."""

    indicators: np.ndarray

    def __post_init__(self):
        self.indicators = np.asarray(self.indicators, dtype=bool)
        if self.indicators.ndim != 2:
            raise ValueError("indicators must be an M x V matrix")

    @property
    def M(self):
        return self.indicators.shape[0]

    @property
    def V(self):
        return self.indicators.shape[1]


def accuracy(y, p_hat, threshold=0.5):
    """Fraction of samples with (p_hat >= threshold) equal to the label."""
    y = np.asarray(y)
    p_hat = np.asarray(p_hat)
    if y.shape != p_hat.shape:
        raise ValueError("y and p_hat must have equal length")
    return float(np.mean((p_hat >= threshold) == (y == 1)))


def selection_rates(selected, truth, V):
    """TPR/FPR/FDR of a selected view set against the true signal set."""
    S, T = set(selected), set(truth)
    hits = len(S & T)
    false = len(S - T)
    tpr = hits / len(T) if T else math.nan
    fpr = false / (V - len(T)) if V > len(T) else math.nan
    fdr = false / len(S) if S else 0.0
    return SelectionOutcome(tpr=tpr, fpr=fpr, fdr=fdr)


def auc(y, scores):
    """Probability a random positive outscores a random negative (ties 1/2).

    Computed via the rank statistic with midranks for ties, O(n log n).
    """
    y = np.asarray(y)
    s = np.asarray(scores, dtype=np.float64)
    n1 = int(np.sum(y == 1))
    n0 = int(np.sum(y == 0))
    if n1 == 0 or n0 == 0:
        raise OneClassOnly("AUC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size, dtype=np.float64)
    sorted_s = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum = float(np.sum(ranks[y == 1]))
    return (rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0)


def _roc_hull(y, scores):
    """Vertices of the upper concave ROC hull, from (0,0) to (1,1)."""
    y = np.asarray(y)
    s = np.asarray(scores, dtype=np.float64)
    n1 = int(np.sum(y == 1))
    n0 = int(np.sum(y == 0))
    order = np.argsort(-s, kind="mergesort")
    ys = y[order]
    ss = s[order]
    # one ROC point per distinct score threshold
    pts = [(0.0, 0.0)]
    c0 = c1 = 0
    for i in range(ys.size):
        c1 += ys[i] == 1
        c0 += ys[i] == 0
        if i + 1 == ys.size or ss[i + 1] != ss[i]:
            pts.append((c0 / n0, c1 / n1))
    hull = [pts[0]]
    for pt in pts[1:]:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (pt[1] - y0) - (y1 - y0) * (pt[0] - x0) >= 0:
                hull.pop()  # middle point lies on or below the chord
            else:
                break
        hull.append(pt)
    return np.array(hull)


def _beta_piece(a, b, lo, hi):
    """(integral of c*w, integral of (1-c)*w) over [lo, hi] for Beta(a,b) w."""
    ic = a / (a + b) * (betainc(a + 1, b, hi) - betainc(a + 1, b, lo))
    icc = b / (a + b) * (betainc(a, b + 1, hi) - betainc(a, b + 1, lo))
    return ic, icc


def h_measure(y, scores, severity=(2.0, 2.0)):
    """Expected-minimum-loss measure over a cost-severity distribution.

    One minus the ratio of the optimal classifier's expected loss to the
    trivial classifier's, where the loss at cost ratio c is minimized over
    the ROC convex hull and c is integrated against a Beta severity
    distribution. The default Beta(2,2) weighs both classes' costs
    symmetrically; pass severity="class-prior" for Beta(1+pi1, 1+pi0).
    Returns a value in [0, 1]; 0 for a noninformative classifier.
    """
    y = np.asarray(y)
    n = y.size
    pi1 = float(np.sum(y == 1)) / n
    pi0 = 1.0 - pi1
    if pi1 in (0.0, 1.0):
        raise OneClassOnly("H measure needs both classes present")
    if severity == "class-prior":
        a, b = 1.0 + pi1, 1.0 + pi0
    else:
        a, b = float(severity[0]), float(severity[1])

    hull = _roc_hull(y, scores)
    # cost breakpoints: vertex k is optimal for c in [c_k, c_{k-1}], where
    # c_k is the indifference cost between vertices k and k+1
    dx = np.diff(hull[:, 0])
    dy = np.diff(hull[:, 1])
    cuts = pi1 * dy / (pi0 * dx + pi1 * dy)
    bounds_hi = np.concatenate([[1.0], cuts])
    bounds_lo = np.concatenate([cuts, [0.0]])

    loss = 0.0
    for k in range(hull.shape[0]):
        lo, hi = bounds_lo[k], bounds_hi[k]
        if hi <= lo:
            continue
        ic, icc = _beta_piece(a, b, lo, hi)
        loss += pi0 * hull[k, 0] * ic + pi1 * (1.0 - hull[k, 1]) * icc
    ic, icc = _beta_piece(a, b, pi1, 1.0)
    ref = pi1 * icc
    ic, _ = _beta_piece(a, b, 0.0, pi1)
    ref += pi0 * ic
    return float(1.0 - loss / ref)


def nogueira_stability(sel):
    """Chance-corrected stability of selected-view sets across M fitted models.

    1 - mean_v(s2_v) / ((kbar/V)(1 - kbar/V)) with the M/(M-1)-corrected
    per-view selection-frequency variance s2_v; kbar is the mean number of
    views selected per model. Undefined (DegenerateSelection) when every
    model selected nothing or everything.
    """
    if not isinstance(sel, SelectionMatrix):
        sel = SelectionMatrix(np.asarray(sel))
    M, V = sel.M, sel.V
    if M < 2:
        raise ValueError("stability needs at least two fitted models")
    z = sel.indicators.astype(np.float64)
    p_hat = z.mean(axis=0)
    kbar = float(z.sum(axis=1).mean())
    denom = (kbar / V) * (1.0 - kbar / V)
    if denom == 0.0:
        raise DegenerateSelection("all models selected nothing, or everything")
    s2 = M / (M - 1.0) * p_hat * (1.0 - p_hat)
    return float(1.0 - s2.mean() / denom)

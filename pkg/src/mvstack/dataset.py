"""Multi-view data model: CSV ingestion, per-feature standardization, and
cross-validation fold assignment.

A multi-view dataset is an n-row feature matrix partitioned column-wise into
disjoint views, plus a binary outcome vector. Views keep their load order and
are reported by name everywhere downstream, so selection results are stable
across runs.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NonBinaryOutcome,
    NonPositiveEntry,
    RaggedCsv,
    TooManyFolds,
    UnmappedFeature,
    ZeroVarianceFeature,
)


@dataclass
class MultiViewDataset:
    """Feature blocks (one n x m_v matrix per view) and a 0/1 outcome vector."""

    views: list
    outcome: np.ndarray
    view_names: list = None
    feature_names: list = None  # per view, list of column names

    def __post_init__(self):
        self.views = [np.asarray(v, dtype=np.float64) for v in self.views]
        self.outcome = np.asarray(self.outcome)
        n = self.outcome.shape[0]
        for v in self.views:
            if v.ndim != 2 or v.shape[0] != n:
                raise ValueError("all view blocks must share the outcome's row count")
            if not np.all(np.isfinite(v)):
                raise ValueError("feature entries must be finite")
        if n and not np.all(np.isin(self.outcome, (0, 1))):
            raise NonBinaryOutcome("outcome must contain only 0 and 1")
        self.outcome = self.outcome.astype(np.int64)
        if self.view_names is None:
            self.view_names = [f"v{i + 1}" for i in range(len(self.views))]
        if len(self.view_names) != len(self.views):
            raise ValueError("one name per view required")
        if self.feature_names is not None:
            for names, v in zip(self.feature_names, self.views):
                if len(names) != v.shape[1]:
                    raise ValueError("feature name count must match view width")

    @property
    def n(self):
        return self.outcome.shape[0]

    @property
    def n_views(self):
        return len(self.views)

    @property
    def view_sizes(self):
        return tuple(v.shape[1] for v in self.views)

    def stacked(self):
        """All views concatenated column-wise, in view order."""
        if not self.views:
            return np.empty((self.n, 0))
        return np.hstack(self.views)

    def subset(self, rows):
        """New dataset restricted to the given row indices (order preserved)."""
        rows = np.asarray(rows)
        return MultiViewDataset(
            views=[v[rows] for v in self.views],
            outcome=self.outcome[rows],
            view_names=list(self.view_names),
            feature_names=None if self.feature_names is None
            else [list(f) for f in self.feature_names],
        )


@dataclass
class FoldAssignment:
    """Partition of n rows into K folds; fold ids are 1..K."""

    K: int
    assignment: np.ndarray

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        counts = np.bincount(self.assignment, minlength=self.K + 1)[1:]
        if np.any(counts == 0):
            raise ValueError("every fold must be nonempty")
        if counts.max() - counts.min() > 1:
            raise ValueError("fold sizes may differ by at most 1")

    def test_indices(self, k):
        return np.flatnonzero(self.assignment == k)

    def train_indices(self, k):
        return np.flatnonzero(self.assignment != k)


def _read_csv_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise RaggedCsv(f"{path}: file is empty")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedCsv(f"{path}: row {i} has {len(row)} fields, expected {width}")
    return rows


def load_view_map(path):
    """Read a two-column `feature,view` CSV into an ordered mapping."""
    rows = _read_csv_rows(path)
    start = 1 if [c.strip().lower() for c in rows[0]] == ["feature", "view"] else 0
    mapping = {}
    for i, row in enumerate(rows[start:]):
        if len(row) != 2:
            raise RaggedCsv(f"{path}: row {i + start} is not a feature,view pair")
        feat, view = row[0].strip(), row[1].strip()
        if feat in mapping:
            raise ValueError(f"{path}: duplicate feature {feat!r} in view map")
        mapping[feat] = view
    return mapping


def load_multiview_csv(features_path, viewmap_path, outcome_column):
    """Build a MultiViewDataset from a features CSV and a feature->view map.

    Views are ordered by first appearance in the view map; rows keep file
    order. Every non-outcome column of the features file must be mapped.
    outcome_column may be None for unlabeled data (prediction input); the
    outcome is then all-zero placeholder labels.
    """
    rows = _read_csv_rows(features_path)
    header = [c.strip() for c in rows[0]]
    if outcome_column is not None and outcome_column not in header:
        raise ValueError(f"outcome column {outcome_column!r} not found in header")
    mapping = load_view_map(viewmap_path)

    out_idx = header.index(outcome_column) if outcome_column is not None else -1
    feat_cols = [(j, name) for j, name in enumerate(header) if j != out_idx]
    for _, name in feat_cols:
        if name not in mapping:
            raise UnmappedFeature(f"feature {name!r} missing from the view map")

    # view order: first appearance in the view-map file, restricted to
    # views that actually occur in this features file
    present = {mapping[name] for _, name in feat_cols}
    view_names = [v for v in dict.fromkeys(mapping.values()) if v in present]
    view_pos = {v: i for i, v in enumerate(view_names)}

    n = len(rows) - 1
    data = np.empty((n, len(feat_cols)))
    outcome = np.zeros(n)
    for i, row in enumerate(rows[1:]):
        try:
            if out_idx >= 0:
                outcome[i] = float(row[out_idx])
            for k, (j, _) in enumerate(feat_cols):
                data[i, k] = float(row[j])
        except ValueError as exc:
            raise ValueError(f"{features_path}: non-numeric value in row {i + 1}") from exc
    if not np.all(np.isin(outcome, (0.0, 1.0))):
        raise NonBinaryOutcome(f"outcome column {outcome_column!r} contains non-0/1 values")

    views = []
    feature_names = []
    for v in view_names:
        cols = [k for k, (_, name) in enumerate(feat_cols) if mapping[name] == v]
        views.append(data[:, cols])
        feature_names.append([feat_cols[k][1] for k in cols])
    return MultiViewDataset(views=views, outcome=outcome,
                            view_names=view_names, feature_names=feature_names)


def write_multiview_csv(d, features_path, viewmap_path, outcome_column="outcome"):
    """Inverse of load_multiview_csv; feature columns appear in view order."""
    names = d.feature_names or [
        [f"{vn}_f{j + 1}" for j in range(v.shape[1])]
        for vn, v in zip(d.view_names, d.views)
    ]
    flat_names = [nm for block in names for nm in block]
    x = d.stacked()
    with open(features_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(flat_names + [outcome_column])
        for i in range(d.n):
            w.writerow([repr(float(val)) for val in x[i]] + [int(d.outcome[i])])
    with open(viewmap_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "view"])
        for vn, block in zip(d.view_names, names):
            for nm in block:
                w.writerow([nm, vn])


def standardize_features(d):
    """Center and scale every feature to sample mean 0, sample sd 1 (ddof=1).

    Returns the transformed dataset plus the flat per-feature means and sds
    (concatenated in view order) for reuse on held-out data.
    """
    means, sds, new_views = [], [], []
    for v in d.views:
        m = v.mean(axis=0)
        s = v.std(axis=0, ddof=1)
        if np.any(s == 0):
            j = int(np.flatnonzero(s == 0)[0])
            raise ZeroVarianceFeature(f"constant feature column (view block index {j})")
        means.append(m)
        sds.append(s)
        new_views.append((v - m) / s)
    out = MultiViewDataset(views=new_views, outcome=d.outcome,
                           view_names=list(d.view_names),
                           feature_names=d.feature_names)
    return out, np.concatenate(means) if means else np.empty(0), \
        np.concatenate(sds) if sds else np.empty(0)


def _split_flat(d, flat):
    parts, at = [], 0
    for v in d.views:
        parts.append(flat[at:at + v.shape[1]])
        at += v.shape[1]
    return parts


def apply_standardization(d, means, sds):
    """Apply previously computed (means, sds) to a dataset's features."""
    ms, ss = _split_flat(d, np.asarray(means)), _split_flat(d, np.asarray(sds))
    return MultiViewDataset(views=[(v - m) / s for v, m, s in zip(d.views, ms, ss)],
                            outcome=d.outcome, view_names=list(d.view_names),
                            feature_names=d.feature_names)


def invert_standardization(d, means, sds):
    ms, ss = _split_flat(d, np.asarray(means)), _split_flat(d, np.asarray(sds))
    return MultiViewDataset(views=[v * s + m for v, m, s in zip(d.views, ms, ss)],
                            outcome=d.outcome, view_names=list(d.view_names),
                            feature_names=d.feature_names)


def log2_transform(d):
    """Elementwise log base 2; every entry must be strictly positive."""
    for v in d.views:
        if np.any(v <= 0):
            raise NonPositiveEntry("log2 transform requires strictly positive entries")
    return MultiViewDataset(views=[np.log2(v) for v in d.views], outcome=d.outcome,
                            view_names=list(d.view_names), feature_names=d.feature_names)


def make_folds(n, K, rng, stratify_labels=None):
    """Random K-fold partition of n rows; deterministic given the stream seed.

    Fold sizes differ by at most one. With stratify_labels, each class is
    dealt cyclically across folds (carrying the deal cursor between classes),
    so per-fold class counts stay within one of proportionality while overall
    fold sizes remain balanced.
    """
    if K > n:
        raise TooManyFolds(f"K={K} exceeds n={n}")
    if K < 2:
        raise ValueError("need at least 2 folds")
    assignment = np.empty(n, dtype=np.int64)
    if stratify_labels is None:
        order = rng.permutation(n)
        assignment[order] = np.arange(n) % K + 1
    else:
        labels = np.asarray(stratify_labels)
        if labels.shape[0] != n:
            raise ValueError("stratify_labels length must equal n")
        order = rng.permutation(n)
        cursor = 0
        for cls in np.unique(labels):
            members = order[labels[order] == cls]
            assignment[members] = (np.arange(members.size) + cursor) % K + 1
            cursor += members.size
    return FoldAssignment(K=K, assignment=assignment)

"""Block-correlated multi-view data generator with a logistic ground truth.

Features follow a compound-symmetric correlation law: rho_w between features
of the same view, rho_b between features of different views. Rather than a
Cholesky factor of the full p x p correlation matrix, each feature is the sum
of three independent latent normals (one global, one per view, one private),
which realizes exactly the same law in O(n*p).
"""

from dataclasses import dataclass
import math

import numpy as np

from .dataset import MultiViewDataset
from .numerics import sigmoid


@dataclass
class SimulationConfig:
    """One experimental condition: dimensions, correlations, signal layout."""

    V: int
    m_v: int
    n_train: int
    n_test: int = 1000
    rho_w: float = 0.0
    rho_b: float = 0.0
    n_signal_full: int = 5
    n_signal_half: int = 5
    base_weight: float = 0.04
    weight_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.rho_b <= self.rho_w < 1.0):
            raise ValueError(
                f"need 0 <= rho_b <= rho_w < 1, got rho_w={self.rho_w}, rho_b={self.rho_b}")
        if self.n_signal_full + self.n_signal_half > self.V:
            raise ValueError("more signal views requested than views available")
        if self.base_weight == 0:
            raise ValueError("base_weight must be nonzero")
        if self.V < 1 or self.m_v < 1 or self.n_train < 1 or self.n_test < 0:
            raise ValueError("dimensions must be positive (n_test may be 0)")

    @property
    def p(self):
        return self.V * self.m_v

    @property
    def signal_weight(self):
        return self.base_weight * self.weight_scale


@dataclass
class GroundTruth:
    """Which views carry signal, which features are active, and their weights."""

    signal_views: np.ndarray      # sorted view indices with any active feature
    active_features: np.ndarray   # V x m_v boolean mask
    weights: np.ndarray           # flat length V*m_v, zero where inactive


def sample_features(cfg, n, rng):
    """n samples of the V*m_v feature matrix, columns standardized empirically.

    Column j in view v is sqrt(rho_b)*G + sqrt(rho_w-rho_b)*U_v +
    sqrt(1-rho_w)*E_j with independent standard normal latents, then each
    column is scaled to sample mean 0 and sd 1 (skipped for n < 2).
    """
    V, m = cfg.V, cfg.m_v
    p = V * m
    if n == 0:
        return np.empty((0, p))
    g = rng.standard_normal(n)[:, None]
    u = rng.standard_normal(n * V).reshape(n, V)
    e = rng.standard_normal(n * p).reshape(n, p)
    x = (math.sqrt(cfg.rho_b) * g
         + math.sqrt(cfg.rho_w - cfg.rho_b) * np.repeat(u, m, axis=1)
         + math.sqrt(1.0 - cfg.rho_w) * e)
    if n >= 2:
        x = (x - x.mean(axis=0)) / x.std(axis=0, ddof=1)
    return x


def assign_signal(cfg, rng):
    """Draw the signal layout: which views, which features, which weights.

    Signal views are sampled uniformly without replacement; the first
    n_signal_full of the draw are fully active, the rest have ceil(m_v/2)
    active features. Every active feature's weight is +/- the configured
    magnitude with equal probability.
    """
    V, m = cfg.V, cfg.m_v
    chosen = rng.choice(V, size=cfg.n_signal_full + cfg.n_signal_half, replace=False)
    active = np.zeros((V, m), dtype=bool)
    for i, v in enumerate(chosen):
        if i < cfg.n_signal_full:
            active[v] = True
        else:
            k = (m + 1) // 2
            active[v, rng.choice(m, size=k, replace=False)] = True
    w = cfg.signal_weight
    signs = np.where(rng.random(int(active.sum())) < 0.5, 1.0, -1.0)
    weights = np.zeros(V * m)
    weights[active.ravel()] = w * signs
    signal_views = np.sort(np.flatnonzero(active.any(axis=1)))
    return GroundTruth(signal_views=signal_views, active_features=active, weights=weights)


def sample_outcome(x, truth, rng):
    """Bernoulli outcomes from the logistic model with zero intercept."""
    if x.shape[1] != truth.weights.shape[0]:
        raise ValueError("feature count does not match the weight vector")
    prob = sigmoid(x @ truth.weights)
    return (rng.random(x.shape[0]) < prob).astype(np.int64)


def _to_dataset(cfg, x, y):
    views = [x[:, v * cfg.m_v:(v + 1) * cfg.m_v] for v in range(cfg.V)]
    names = [f"v{v + 1}" for v in range(cfg.V)]
    return MultiViewDataset(views=views, outcome=y, view_names=names)


def generate_replication(cfg, rng):
    """One (train, test, truth) triple; the ground truth is shared, feature
    draws are independent between train and test."""
    truth = assign_signal(cfg, rng.substream("signal"))
    x_tr = sample_features(cfg, cfg.n_train, rng.substream("train-x"))
    y_tr = sample_outcome(x_tr, truth, rng.substream("train-y"))
    x_te = sample_features(cfg, cfg.n_test, rng.substream("test-x"))
    y_te = sample_outcome(x_te, truth, rng.substream("test-y"))
    return _to_dataset(cfg, x_tr, y_tr), _to_dataset(cfg, x_te, y_te), truth

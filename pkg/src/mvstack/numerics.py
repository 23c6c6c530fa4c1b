"""Shared numerical kernels: seeded random streams, Cholesky factorization,
and the scalar link functions used by every fitting routine.

All functions here are pure given their inputs. ``RngStream`` is the only
stateful object; callers that need independent randomness derive labeled
sub-streams instead of sharing one stream across parallel work.
"""

import hashlib

import numpy as np

from .errors import NotPositiveDefinite

_CHOLESKY_PIVOT_TOL = 1e-12


class RngStream:
    """A seeded random number stream with deterministic labeled sub-streams.

    Two streams built from the same seed produce identical sample sequences.
    ``substream(label)`` derives a child seed from (seed, label) via SHA-256,
    so sibling streams are independent and reproducible regardless of the
    order in which they are consumed.
    """

    def __init__(self, seed):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def substream(self, label):
        digest = hashlib.sha256(f"{self.seed}:{label}".encode("utf-8")).digest()
        return RngStream(int.from_bytes(digest[:8], "little"))

    def standard_normal(self, n):
        if isinstance(n, tuple):
            return self._gen.standard_normal(n)
        if n < 0:
            raise ValueError("sample count must be nonnegative")
        return self._gen.standard_normal(int(n))

    def random(self, n=None):
        return self._gen.random(n)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high=high, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self._gen.choice(a, size=size, replace=replace)

    def __repr__(self):
        return f"RngStream(seed={self.seed})"


def derive_seed(*parts):
    """Stable 64-bit seed from arbitrary string-able parts (SHA-256 based)."""
    key = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def standard_normal(rng, n):
    """n i.i.d. standard normal draws, advancing the stream."""
    return rng.standard_normal(n)


def cholesky(a):
    """Lower-triangular L with L @ L.T == a for symmetric positive definite a.

    Raises NotPositiveDefinite when a pivot falls at or below 1e-12, which is
    how invalid correlation parameterizations surface.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if np.max(np.abs(a - a.T)) > 1e-10:
        raise ValueError("matrix is not symmetric within 1e-10")

    n = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= _CHOLESKY_PIVOT_TOL:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at column {j} is at or below {_CHOLESKY_PIVOT_TOL:.0e}"
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def sigmoid(t):
    """Numerically stable logistic function, elementwise; output in (0, 1).

    Uses the two-branch form exp(-|t|) so neither branch overflows.
    """
    t = np.asarray(t, dtype=np.float64)
    z = np.exp(-np.abs(t))
    out = np.where(t >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    if out.ndim == 0:
        return float(out)
    return out


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0) for threshold t >= 0."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be nonnegative")
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def log1pexp(t):
    """log(1 + exp(t)) without overflow, elementwise."""
    t = np.asarray(t, dtype=np.float64)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))

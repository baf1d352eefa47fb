"""Frechet distance between two Gaussian feature fits.

fid = ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), with the matrix
square root taken through the symmetric product: eigendecompose
A = S_a^{1/2} S_b S_a^{1/2} and sum the square roots of its eigenvalues.
Round-off negatives are clamped to zero.
"""

from __future__ import annotations

import numpy as np

from mialab.errors import DimensionError
from mialab.metrics.features import FeatureStats


def _sym_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid(a: FeatureStats, b: FeatureStats) -> float:
    if a.mu.shape != b.mu.shape:
        raise DimensionError(f"feature dims differ: {a.mu.shape} vs {b.mu.shape}")
    diff = a.mu - b.mu
    root_a = _sym_sqrt(a.sigma)
    inner = root_a @ b.sigma @ root_a
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    tr_sqrt = float(np.sqrt(np.clip(vals, 0.0, None)).sum())
    value = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * tr_sqrt)
    return max(value, 0.0)

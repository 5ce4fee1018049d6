"""Gradient-stream statistics: cosine similarity of consecutive raw gradients,
norms, and histogram summaries."""
from __future__ import annotations

import numpy as np


def _flatten(grads) -> np.ndarray:
    return np.concatenate([np.asarray(g).ravel() for g in grads.values()])


def grad_norm(grads) -> float:
    return float(np.linalg.norm(_flatten(grads)))


def grad_cosine(g_prev, g_curr, per_layer: bool = False):
    """Cosine similarity of two gradient sets flattened across parameters.

    Either norm being zero yields 0.  With per_layer=True returns a
    name -> cosine dict instead of the global value.
    """
    if g_prev.keys() != g_curr.keys():
        raise ValueError("gradient key mismatch")
    if per_layer:
        return {k: grad_cosine({k: g_prev[k]}, {k: g_curr[k]}) for k in g_prev}
    for k in g_prev:
        if np.shape(g_prev[k]) != np.shape(g_curr[k]):
            raise ValueError(f"shape mismatch for {k!r}")
    a, b = _flatten(g_prev), _flatten(g_curr)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def summarize(values, bins: int = 20):
    """Equal-width histogram over [min, max] plus exact population moments.

    Returns (counts, bin_edges, mean, variance).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot summarize an empty list")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts, edges = np.histogram(values, bins=bins)
    return counts, edges, float(values.mean()), float(values.var())

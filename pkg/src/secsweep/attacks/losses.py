"""Scalar attack losses on plain logit arrays (no tape).

The differentiable versions used inside gradient attacks live in the
autodiff module; these mirror them for black-box queries and tests.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateLogitsError, ShapeError


def cw_loss(logits, y):
    """-(z_y - max_{i != y} z_i); positive iff some other logit beats z_y."""
    single = np.asarray(logits).ndim == 1
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    if z.shape[1] < 2:
        raise ShapeError(f"cw_loss needs at least 2 classes, got {z.shape[1]}")
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    rows = np.arange(z.shape[0])
    masked = z.copy()
    masked[rows, y] = -np.inf
    out = masked.max(axis=1) - z[rows, y]
    return float(out[0]) if single else out


def margin_loss(logits, y):
    """Batched cw margin; the square attack's objective."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rows = np.arange(z.shape[0])
    masked = z.copy()
    masked[rows, y] = -np.inf
    return masked.max(axis=1) - z[rows, y]


def dlr_loss_targeted(logits, y, t):
    """-(z_y - z_t) / (z_(1) - z_(3)) on one logit row or a batch."""
    single = np.asarray(logits).ndim == 1
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    if z.shape[1] < 3:
        raise ShapeError(f"dlr_loss_targeted needs at least 3 classes, got {z.shape[1]}")
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    t = np.atleast_1d(np.asarray(t, dtype=np.int64))
    rows = np.arange(z.shape[0])
    order = np.argsort(-z, axis=1, kind="stable")
    den = z[rows, order[:, 0]] - z[rows, order[:, 2]]
    bad = den < 1e-12
    if bad.any():
        raise DegenerateLogitsError(
            f"logit spread below 1e-12 for {int(bad.sum())} sample(s)",
            sample_indices=np.nonzero(bad)[0],
        )
    out = -(z[rows, y] - z[rows, t]) / den
    return float(out[0]) if single else out

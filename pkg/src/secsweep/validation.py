"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def check_images(X, input_shape):
    """Coerce X to float32 [n, c, h, w] matching input_shape.

    Accepts the 4-d image layout or flat [n, prod(input_shape)] rows (the
    sklearn-style 2-d matrix); anything else is an error.
    """
    X = np.asarray(X)
    if X.ndim == 2:
        expected = int(np.prod(input_shape))
        if X.shape[1] != expected:
            raise ShapeError(f"flat input has {X.shape[1]} features, expected {expected}")
        X = X.reshape((X.shape[0],) + tuple(input_shape))
    elif X.ndim == 4:
        if X.shape[1:] != tuple(input_shape):
            raise ShapeError(f"image input shape {X.shape[1:]} does not match {tuple(input_shape)}")
    else:
        raise ShapeError(f"expected 2-d or 4-d input, got shape {X.shape}")
    X = X.astype(np.float32, copy=False)
    if not np.isfinite(X).all():
        raise ValueError("input contains NaN or Inf")
    return X


def check_labels(y, n_samples, n_classes):
    y = np.asarray(y)
    if y.shape != (n_samples,):
        raise ShapeError(f"labels shape {y.shape} does not match {n_samples} samples")
    y = y.astype(np.int64)
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes}), got range [{y.min()}, {y.max()}]")
    return y

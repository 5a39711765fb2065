"""Projection onto the feasible domain: lp ball intersected with the [0,1] box."""

from __future__ import annotations

import math

import numpy as np

from ..autodiff import lp_norms
from .types import normalize_norm


def project(delta, x, eps, p):
    """Project one perturbation onto {d : ||d||_p <= eps and 0 <= x + d <= 1}.

    Ball first (p=2: radial rescale when over budget; p=inf: coordinate
    clamp to +/-eps), then the box clamp. Since x itself is in the box, the
    box step can only shrink coordinates of the perturbation, so the ball
    constraint survives it and the result satisfies both.
    """
    p = normalize_norm(p)
    delta = np.asarray(delta, dtype=np.float32)
    x = np.asarray(x, dtype=np.float32)
    if delta.shape != x.shape:
        raise ValueError(f"delta shape {delta.shape} does not match x shape {x.shape}")
    return project_batch(delta[None], x[None], eps, p)[0]


def _ball_clamp(d, eps, p):
    if p == math.inf:
        eps32 = np.float32(eps)
        if eps32 > eps:  # never round the radius up
            eps32 = np.nextafter(eps32, np.float32(0))
        return np.clip(d, -eps32, eps32)
    norms = lp_norms(d, 2)
    over = norms > eps
    if over.any():
        scales = np.ones_like(norms)
        scales[over] = eps / norms[over]
        d = d * scales.reshape((-1,) + (1,) * (d.ndim - 1)).astype(np.float32)
    return d


def project_batch(delta, x, eps, p):
    """Per-sample projection of a batched [n, ...] perturbation array.

    Ball, box, then ball again: the box subtraction reintroduces up to one
    ulp of x per coordinate, so the ball is re-enforced afterwards (which
    shrinks delta toward zero and therefore cannot leave the box).
    """
    p = normalize_norm(p)
    d = np.asarray(delta, dtype=np.float32)
    xs = np.asarray(x, dtype=np.float32)
    if d.shape != xs.shape:
        raise ValueError(f"delta shape {d.shape} does not match x shape {xs.shape}")
    d = _ball_clamp(d, eps, p)
    d = np.clip(xs + d, 0.0, 1.0) - xs
    return _ball_clamp(d, eps, p)

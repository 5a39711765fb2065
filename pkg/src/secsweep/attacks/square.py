"""Black-box random-search attack with square patches at the budget boundary.

The model is visible only through a logits-from-inputs callable; no gradient
access exists in this module. Each query overwrites one random square patch
of the current perturbation with boundary-magnitude content (per-channel
random sign), renormalizes to the budget for p=2, clamps to the box, and
keeps the candidate iff it strictly increases the margin loss. The patch
side starts at 0.8 of the image and halves as the query budget fraction
crosses {0.05, 0.1, 0.25, 0.5}.
"""

from __future__ import annotations

import math

import numpy as np

from ..autodiff import lp_norms
from ..rng import sample_rng
from .common import validate_attack_inputs
from .losses import margin_loss
from .projection import project_batch
from .types import AttackResult, AttackTrace, TraceStep

_SHRINK_FRACTIONS = (0.05, 0.1, 0.25, 0.5)


def patch_side(queries_used, budget, image_side):
    frac = queries_used / budget
    halvings = sum(frac >= t for t in _SHRINK_FRACTIONS)
    side = int(round(0.8 * image_side * 0.5**halvings))
    return max(1, min(side, image_side))


def square_attack(predict_fn, x, y, config, sample_indices=None):
    """Attack a batch through a predict-only interface.

    `sample_indices` pins each row's random stream to a stable global id, so
    running a subset (e.g. inside the ensemble) reproduces the full-batch
    proposals sample by sample.
    """
    x, y = validate_attack_inputs(x, y)
    if x.ndim != 4:
        raise ValueError(f"square attack expects image batches [n, c, h, w], got {x.shape}")
    n, c, h, w = x.shape
    eps, p = config.eps, config.norm
    budget = config.query_budget
    ids = np.arange(n) if sample_indices is None else np.asarray(sample_indices)
    rngs = [sample_rng(config.seed, int(i)) for i in ids]

    logits = np.asarray(predict_fn(x))
    margins = margin_loss(logits, y).astype(np.float32)
    preds = logits.argmax(axis=1)
    queries = np.ones(n, dtype=np.int64)
    traces = [
        AttackTrace(
            clean_prediction=int(preds[i]),
            initial_loss=float(margins[i]),
            initial_grad_norm=math.nan,
            uses_gradients=False,
        )
        for i in range(n)
    ]

    delta = np.zeros_like(x)
    best_margin = margins.copy()
    cur_pred = preds.copy()
    active = (cur_pred == y) & (queries < budget) & (eps > 0)

    while active.any():
        idx = np.nonzero(active)[0]
        cand = delta[idx].copy()
        for j, i in enumerate(idx):
            rng = rngs[i]
            side = patch_side(int(queries[i]), budget, h)
            r0 = int(rng.integers(0, h - side + 1))
            c0 = int(rng.integers(0, w - side + 1))
            signs = rng.choice(np.array([-1.0, 1.0], dtype=np.float32), size=c)
            content = signs[:, None, None] if p == 2 else signs[:, None, None] * np.float32(eps)
            cand[j, :, r0 : r0 + side, c0 : c0 + side] = content
        if p == 2:
            norms = lp_norms(cand, 2)
            scales = (eps / np.maximum(norms, 1e-12)).astype(np.float32)
            cand = cand * scales[:, None, None, None]
        cand = project_batch(cand, x[idx], eps, p)
        x_cand = np.clip(x[idx] + cand, 0.0, 1.0)
        cand = x_cand - x[idx]

        logits = np.asarray(predict_fn(x_cand))
        m_new = margin_loss(logits, y[idx]).astype(np.float32)
        p_new = logits.argmax(axis=1)
        queries[idx] += 1

        accept = m_new > best_margin[idx]
        acc_idx = idx[accept]
        delta[acc_idx] = cand[accept]
        best_margin[acc_idx] = m_new[accept]
        cur_pred[acc_idx] = p_new[accept]

        dnorms = lp_norms(delta[idx], p)
        for j, i in enumerate(idx):
            traces[i].steps.append(
                TraceStep(float(best_margin[i]), math.nan, float(dnorms[j]), int(cur_pred[i]))
            )
        active = (cur_pred == y) & (queries < budget) & (eps > 0)

    x_adv = np.clip(x + delta, 0.0, 1.0)
    return [
        AttackResult(
            x_adv=x_adv[i],
            success=bool(cur_pred[i] != y[i]),
            loss=float(best_margin[i]),
            trace=traces[i],
            prediction=int(cur_pred[i]),
        )
        for i in range(n)
    ]

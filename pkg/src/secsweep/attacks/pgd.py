"""Projected gradient descent with the best-over-iterates return rule.

Starting from delta_0 = 0, each iteration takes a fixed step along the
gradient (sign step for p=inf, normalized-gradient step for p=2, the
standard resolution of the sign rule for l2 budgets), projects back onto
the eps-ball-intersect-box domain, and records the iterate. The returned
point is x plus whichever iterate (delta_0 included) achieved the highest
loss.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import lp_norms
from .common import (
    assemble_results,
    eval_losses,
    new_traces,
    record_step,
    step_directions,
    validate_attack_inputs,
)
from .projection import project_batch


def pgd_attack(model, x, y, config):
    """Attack a batch; returns one AttackResult per sample."""
    x, y = validate_attack_inputs(x, y)
    eps, p, alpha = config.eps, config.norm, config.step_size

    delta = np.zeros_like(x)
    losses, grads, logits, _ = eval_losses(model, x, y, config.loss, None)
    grad_norms = lp_norms(grads, 2)
    preds = logits.argmax(axis=1)
    traces = new_traces(preds, losses, grad_norms)

    best_loss = losses.copy()
    best_x = x.copy()
    best_pred = preds.copy()

    for i in range(1, config.n_iter + 1):
        dirs, dead = step_directions(grads, p)
        for s in dead:
            traces[s].events.append(f"zero-grad-step@{i}")
        delta = project_batch(delta + np.float32(alpha) * dirs, x, eps, p)
        x_it = np.clip(x + delta, 0.0, 1.0)
        delta = x_it - x
        losses, grads, logits, _ = eval_losses(model, x_it, y, config.loss, None)
        grad_norms = lp_norms(grads, 2)
        preds = logits.argmax(axis=1)
        record_step(traces, losses, grad_norms, lp_norms(delta, p), preds)
        improved = losses > best_loss
        if improved.any():
            best_loss[improved] = losses[improved]
            best_x[improved] = x_it[improved]
            best_pred[improved] = preds[improved]

    return assemble_results(x, y, best_x, best_loss, best_pred, traces)

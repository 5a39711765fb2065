"""Internals shared by the gradient attacks."""

from __future__ import annotations

import math

import numpy as np

from ..autodiff import lp_norms
from ..errors import DegenerateLogitsError
from .types import AttackResult, AttackTrace, TraceStep

ZERO_GRAD_SKIP = 1e-20  # below this l2 norm the step is skipped, not divided


def validate_attack_inputs(x, y):
    x = np.ascontiguousarray(x, dtype=np.float32)
    if x.ndim < 2:
        raise ValueError(f"attack input must be batched [n, ...], got shape {x.shape}")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("attack input must lie in the [0, 1] box")
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (x.shape[0],):
        raise ValueError(f"labels shape {y.shape} does not match batch of {x.shape[0]}")
    return x, y


def step_directions(grad, p):
    """Ascent directions: sign for p=inf, unit l2 per sample for p=2.

    Samples whose gradient l2 norm is below ZERO_GRAD_SKIP get a zero
    direction; their indices are returned so the caller can log the event.
    """
    norms = lp_norms(grad, 2)
    dead = norms < ZERO_GRAD_SKIP
    if p == math.inf:
        dirs = np.sign(grad, dtype=np.float32) if grad.dtype == np.float32 else np.sign(grad).astype(np.float32)
    else:
        safe = np.where(dead, 1.0, norms)
        dirs = (grad / safe.reshape((-1,) + (1,) * (grad.ndim - 1))).astype(np.float32)
    if dead.any():
        dirs[dead] = 0.0
    return dirs, np.nonzero(dead)[0]


def eval_losses(model, x_it, y, loss, targets, exclude=None):
    """Batched loss/gradient eval that freezes degenerate-logit samples.

    Returns (losses, grads, logits, newly_frozen) where frozen/excluded rows
    carry zeros; `newly_frozen` are sample indices whose ratio-loss
    denominator collapsed this call.
    """
    n = x_it.shape[0]
    losses = np.zeros(n, dtype=np.float32)
    grads = np.zeros_like(x_it)
    logits = np.zeros((n, model.n_classes), dtype=np.float32)
    remaining = np.arange(n) if exclude is None else np.setdiff1d(np.arange(n), exclude)
    newly_frozen = []
    while remaining.size:
        try:
            lg = model.loss_and_grads(
                x_it[remaining],
                y[remaining],
                loss=loss,
                targets=None if targets is None else targets[remaining],
                wrt=("input",),
            )
        except DegenerateLogitsError as err:
            bad = remaining[np.asarray(err.sample_indices, dtype=np.int64)]
            newly_frozen.extend(int(i) for i in bad)
            remaining = np.setdiff1d(remaining, bad)
            continue
        losses[remaining] = lg.losses
        grads[remaining] = lg.input_grad
        logits[remaining] = lg.logits
        break
    return losses, grads, logits, np.asarray(newly_frozen, dtype=np.int64)


def new_traces(preds0, losses0, grad_norms0):
    return [
        AttackTrace(
            clean_prediction=int(preds0[i]),
            initial_loss=float(losses0[i]),
            initial_grad_norm=float(grad_norms0[i]),
        )
        for i in range(len(preds0))
    ]


def record_step(traces, losses, grad_norms, delta_norms, preds, indices=None):
    indices = range(len(traces)) if indices is None else indices
    for i in indices:
        traces[i].steps.append(
            TraceStep(float(losses[i]), float(grad_norms[i]), float(delta_norms[i]), int(preds[i]))
        )


def assemble_results(x, y, best_x, best_loss, best_pred, traces):
    return [
        AttackResult(
            x_adv=best_x[i],
            success=bool(best_pred[i] != y[i]),
            loss=float(best_loss[i]),
            trace=traces[i],
            prediction=int(best_pred[i]),
        )
        for i in range(x.shape[0])
    ]

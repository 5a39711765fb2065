"""Adaptive-step PGD (momentum 0.75, halving step-size schedule).

The step size starts at 2*eps and halves at checkpoint iterations whenever
the fraction of loss-improving steps since the last checkpoint drops below
0.75, or the best loss stagnated across a checkpoint without a halving.
On every halving the iterate restarts from the best point found so far.
Checkpoint spacing follows the published constants of the adaptive-PGD
method: first window 22% of the budget, shrinking by 3% down to a 6% floor.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import lp_norms
from .common import (
    assemble_results,
    eval_losses,
    new_traces,
    step_directions,
    validate_attack_inputs,
)
from .projection import project_batch
from .types import TraceStep


def _apgd_core(model, x, y, config, loss, targets=None):
    """Shared batched loop; returns (best_x, best_loss, best_pred, traces)."""
    n = x.shape[0]
    eps, p = config.eps, config.norm
    n_iter = config.n_iter

    delta = np.zeros_like(x)
    delta_old = np.zeros_like(x)
    losses, grads, logits, frozen_new = eval_losses(model, x, y, loss, targets)
    frozen = np.zeros(n, dtype=bool)
    grad_norms = lp_norms(grads, 2)
    preds = logits.argmax(axis=1)
    traces = new_traces(preds, losses, grad_norms)
    for s in frozen_new:
        frozen[s] = True
        traces[s].events.append("degenerate-logits@0")

    best_loss = losses.copy()
    best_x = x.copy()
    best_pred = preds.copy()
    best_grad = grads.copy()

    step = np.full(n, 2.0 * eps, dtype=np.float32)
    k = max(int(0.22 * n_iter), 1)
    size_decr = max(int(0.03 * n_iter), 1)
    k_min = max(int(0.06 * n_iter), 1)
    counter = 0
    improving = np.zeros(n, dtype=np.int64)
    best_at_check = best_loss.copy()
    halved_last = np.ones(n, dtype=bool)  # first checkpoint only tests oscillation
    prev_loss = losses.copy()

    for i in range(1, n_iter + 1):
        live = ~frozen
        dirs, dead = step_directions(grads, p)
        for s in dead:
            if live[s]:
                traces[s].events.append(f"zero-grad-step@{i}")
        z = project_batch(delta + step.reshape((-1,) + (1,) * (x.ndim - 1)) * dirs, x, eps, p)
        a = 1.0 if i == 1 else 0.75
        cand = delta + np.float32(a) * (z - delta) + np.float32(1.0 - a) * (delta - delta_old)
        new_delta = project_batch(cand, x, eps, p)
        delta_old = delta.copy()
        delta = np.where(live.reshape((-1,) + (1,) * (x.ndim - 1)), new_delta, delta)
        x_it = np.clip(x + delta, 0.0, 1.0)
        delta = x_it - x

        losses, grads, logits, frozen_new = eval_losses(model, x_it, y, loss, targets, exclude=np.nonzero(frozen)[0])
        for s in frozen_new:
            frozen[s] = True
            traces[s].events.append(f"degenerate-logits@{i}")
        grad_norms = lp_norms(grads, 2)
        delta_norms = lp_norms(delta, p)
        preds = logits.argmax(axis=1)
        for s in range(n):
            if live[s] and not frozen[s]:
                traces[s].steps.append(
                    TraceStep(float(losses[s]), float(grad_norms[s]), float(delta_norms[s]), int(preds[s]))
                )
                traces[s].step_sizes.append(float(step[s]))

        active = live & ~frozen
        improving += active & (losses > prev_loss)
        prev_loss = np.where(active, losses, prev_loss)
        improved = active & (losses > best_loss)
        if improved.any():
            best_loss[improved] = losses[improved]
            best_x[improved] = x_it[improved]
            best_pred[improved] = preds[improved]
            best_grad[improved] = grads[improved]

        counter += 1
        if counter == k:
            few_improving = improving <= 0.75 * k
            stagnated = ~halved_last & (best_at_check >= best_loss)
            halve = (few_improving | stagnated) & active
            if halve.any():
                step[halve] *= 0.5
                mask = halve.reshape((-1,) + (1,) * (x.ndim - 1))
                delta = np.where(mask, best_x - x, delta)
                delta_old = np.where(mask, best_x - x, delta_old)
                grads = np.where(mask, best_grad, grads)
            halved_last = halve
            best_at_check = best_loss.copy()
            improving[:] = 0
            counter = 0
            k = max(k - size_decr, k_min)

    return best_x, best_loss, best_pred, traces


def apgd_attack(model, x, y, config):
    """Untargeted adaptive PGD with the loss named in the config (ce or cw)."""
    x, y = validate_attack_inputs(x, y)
    loss = config.loss if config.loss in ("ce", "cw") else "ce"
    best_x, best_loss, best_pred, traces = _apgd_core(model, x, y, config, loss)
    return assemble_results(x, y, best_x, best_loss, best_pred, traces)


def apgd_dlr_targeted(model, x, y, config, max_targets=9):
    """Adaptive PGD with the targeted ratio loss, sweeping candidate targets.

    Targets are the non-true classes in descending clean-logit order; each
    sample stops at its first successful run, otherwise keeps the best
    (max-loss) run across all targets it tried.
    """
    x, y = validate_attack_inputs(x, y)
    n = x.shape[0]
    clean_logits = model.logits(x)
    order = np.argsort(-clean_logits, axis=1, kind="stable")
    target_lists = [[int(c) for c in order[i] if c != y[i]][:max_targets] for i in range(n)]
    n_rounds = min(max_targets, max(len(t) for t in target_lists))

    chosen = [None] * n  # first success, else the max-loss failure
    merged_traces = [None] * n
    alive = np.arange(n)
    for r in range(n_rounds):
        alive = np.array([i for i in alive if r < len(target_lists[i])], dtype=np.int64)
        if alive.size == 0:
            break
        targets = np.array([target_lists[i][r] for i in alive], dtype=np.int64)
        best_x, best_loss, best_pred, traces = _apgd_core(
            model, x[alive], y[alive], config, "dlr-targeted", targets=targets
        )
        results = assemble_results(x[alive], y[alive], best_x, best_loss, best_pred, traces)
        survivors = []
        for local, i in enumerate(alive):
            res = results[local]
            res.trace.events.insert(0, f"target:{target_lists[i][r]}")
            if merged_traces[i] is None:
                merged_traces[i] = res.trace
            else:
                base = merged_traces[i]
                # the new round's delta_0 evaluation cost an iteration too
                base.steps.append(
                    TraceStep(res.trace.initial_loss, res.trace.initial_grad_norm, 0.0, res.trace.clean_prediction)
                )
                base.steps.extend(res.trace.steps)
                base.events.extend(res.trace.events)
                base.step_sizes.extend(res.trace.step_sizes)
            if res.success:
                chosen[i] = res
                continue
            if chosen[i] is None or res.loss > chosen[i].loss:
                chosen[i] = res
            survivors.append(i)
        alive = np.array(survivors, dtype=np.int64)

    out = []
    for i in range(n):
        res = chosen[i]
        res.trace = merged_traces[i]
        res.loss = max(res.trace.losses())  # achieved loss covers every target run
        out.append(res)
    return out

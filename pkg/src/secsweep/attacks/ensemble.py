"""Sequential attack ensemble: adaptive-PGD margin, targeted ratio, square.

Per sample the members run in order and stop at the first success; a sample
counts as misclassified if any member succeeds. Samples already wrong on
clean input short-circuit with a zero-iteration silent-success result. The
composition is the three-member diversified suite (the targeted boundary
attack of the original four-member suite is out of scope), so reports label
it "autoattack (3/4 members)".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .apgd import apgd_attack, apgd_dlr_targeted
from .common import validate_attack_inputs
from .losses import margin_loss
from .square import square_attack
from .types import AttackConfig, AttackResult, AttackTrace

MEMBER_ORDER = ("apgd-cw", "apgd-dlr-targeted", "square")
ENSEMBLE_LABEL = "autoattack (3/4 members)"


@dataclass
class EnsembleResult(AttackResult):
    broken_by: str | None = None
    member_success: dict = field(default_factory=dict)  # member -> bool, or absent if not run


def autoattack_ensemble(model, x, y, eps, p, n_iter=100, query_budget=500, seed=0):
    """Run the member sequence per sample; returns one EnsembleResult each."""
    x, y = validate_attack_inputs(x, y)
    n = x.shape[0]
    cfg = dict(eps=eps, norm=p, n_iter=n_iter, query_budget=query_budget, seed=seed)

    logits0 = model.logits(x)
    preds0 = logits0.argmax(axis=1)
    margins0 = margin_loss(logits0, y)

    out = [None] * n
    alive = []
    for i in range(n):
        if preds0[i] != y[i]:
            trace = AttackTrace(
                clean_prediction=int(preds0[i]),
                initial_loss=float(margins0[i]),
                initial_grad_norm=0.0,
                uses_gradients=False,  # zero attack iterations, no gradient queries
                events=["silent-success-shortcut"],
            )
            out[i] = EnsembleResult(
                x_adv=x[i],
                success=True,
                loss=float(margins0[i]),
                trace=trace,
                prediction=int(preds0[i]),
                broken_by="clean",
            )
        else:
            alive.append(i)

    runners = {
        "apgd-cw": lambda idx: apgd_attack(model, x[idx], y[idx], AttackConfig(loss="cw", **cfg)),
        "apgd-dlr-targeted": lambda idx: apgd_dlr_targeted(
            model, x[idx], y[idx], AttackConfig(loss="dlr-targeted", **cfg)
        ),
        "square": lambda idx: square_attack(
            model.logits, x[idx], y[idx], AttackConfig(loss="cw", **cfg), sample_indices=idx
        ),
    }

    fallbacks = {i: [] for i in alive}  # (member, result) of every failed run
    member_flags = {i: {} for i in alive}
    remaining = np.asarray(alive, dtype=np.int64)
    for member in MEMBER_ORDER:
        if remaining.size == 0:
            break
        results = runners[member](remaining)
        survivors = []
        for local, i in enumerate(remaining):
            res = results[local]
            res.trace.events.append(f"member:{member}")
            member_flags[i][member] = res.success
            if res.success:
                out[i] = EnsembleResult(
                    x_adv=res.x_adv,
                    success=True,
                    loss=res.loss,
                    trace=res.trace,
                    prediction=res.prediction,
                    broken_by=member,
                    member_success=member_flags[i],
                )
            else:
                fallbacks[i].append(res)
                survivors.append(i)
        remaining = np.asarray(survivors, dtype=np.int64)

    for i in remaining:
        best = max(fallbacks[i], key=lambda r: r.loss)
        out[i] = EnsembleResult(
            x_adv=best.x_adv,
            success=False,
            loss=best.loss,
            trace=best.trace,
            prediction=best.prediction,
            broken_by=None,
            member_success=member_flags[i],
        )
    return out

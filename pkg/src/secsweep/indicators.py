"""Automatic attack-failure audit.

Six indicators reconstructed in the style of the published
indicators-of-attack-failure checks (the audit labels itself "IoAF-style";
exact thresholds are fixed constants echoed in every report so audits stay
comparable across runs):

  I1 silent success      clean prediction already wrong, attack returned a
                         non-adversarial point
  I2 broken best-point   returned loss below the max recorded trace loss
  I3 unavailable gradient  more than half of the iterates saw ~zero input
                         gradients (gradient attacks only)
  I4 non-converged       best loss still improving > 1% relative over the
                         final 10% of iterations
  I5 constraint violation  an iterate or the result left the eps-ball or box
                         beyond the feasibility slack
  I6 ensemble inconsistency  every gradient member failed on a sample the
                         black-box member broke (gradient-masking signature)

Auditing never raises: anything structurally unreadable is reported under
the separate MALFORMED flag. Indicators that do not apply to a record (I3
for black-box traces, I6 outside an ensemble) are reported as None and
excluded from trigger-rate denominators.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

INDICATORS = ("I1", "I2", "I3", "I4", "I5", "I6")

THRESHOLDS = {
    "zero_grad_norm": 1e-12,
    "zero_grad_fraction": 0.5,
    "tail_window": 0.1,
    "tail_improvement": 0.01,
    "feasibility_slack": 1e-5,
}


def _best_so_far(losses):
    best = []
    cur = -math.inf
    for v in losses:
        cur = max(cur, v)
        best.append(cur)
    return best


def audit(trace, result, clean_prediction, y, config, ensemble_context=None):
    """Evaluate every indicator for one (sample, attack) record.

    `ensemble_context` is the member-success mapping of an ensemble result;
    without it I6 is not applicable. Returns {indicator: bool | None} plus
    a MALFORMED flag.
    """
    flags = {name: None for name in INDICATORS}
    flags["MALFORMED"] = False
    try:
        losses = trace.losses()
        if not losses or not all(math.isfinite(v) for v in losses):
            raise ValueError("unreadable trace losses")
        y = int(y)

        flags["I1"] = bool(clean_prediction != y and result.prediction == y)
        flags["I2"] = bool(result.loss < max(losses))

        if trace.uses_gradients:
            grad_norms = [trace.initial_grad_norm] + [s.grad_norm for s in trace.steps]
            dead = sum(g < THRESHOLDS["zero_grad_norm"] for g in grad_norms)
            flags["I3"] = bool(dead / len(grad_norms) > THRESHOLDS["zero_grad_fraction"])

        best = _best_so_far(losses)
        if len(best) < 2:
            flags["I4"] = False
        else:
            start = min(int(math.floor((1.0 - THRESHOLDS["tail_window"]) * (len(best) - 1))), len(best) - 2)
            gain = best[-1] - best[start]
            flags["I4"] = bool(gain / max(abs(best[start]), 1e-12) > THRESHOLDS["tail_improvement"])

        slack = THRESHOLDS["feasibility_slack"]
        ball_limit = config.eps * (1.0 + slack)
        ball_bad = any(s.delta_norm > ball_limit for s in trace.steps)
        box_bad = bool(result.x_adv.min() < -slack or result.x_adv.max() > 1.0 + slack)
        flags["I5"] = bool(ball_bad or box_bad)

        if ensemble_context is not None:
            ran_all = all(m in ensemble_context for m in ("apgd-cw", "apgd-dlr-targeted", "square"))
            if ran_all:
                flags["I6"] = bool(
                    ensemble_context["apgd-cw"] is False
                    and ensemble_context["apgd-dlr-targeted"] is False
                    and ensemble_context["square"] is True
                )
            elif "square" in ensemble_context:
                flags["I6"] = False
            # gradient members only: the black-box check never came up
    except Exception:
        flags = {name: None for name in INDICATORS}
        flags["MALFORMED"] = True
    return flags


@dataclass
class AuditRecord:
    sample_id: int
    attack: str
    eps: float
    flags: dict


@dataclass
class FailureReport:
    """Aggregate trigger rates over all (sample, attack, eps) records."""

    counts: dict = field(default_factory=dict)
    applicable: dict = field(default_factory=dict)
    sample_ids: dict = field(default_factory=dict)
    n_records: int = 0
    malformed: int = 0
    config_echo: dict = field(default_factory=dict)

    def rate(self, indicator):
        denom = self.applicable.get(indicator, 0)
        return self.counts.get(indicator, 0) / denom if denom else 0.0

    @property
    def rates(self):
        return {name: self.rate(name) for name in INDICATORS}

    def worst_offenders(self, top=10):
        tally = {}
        for name in INDICATORS:
            for sid in self.sample_ids.get(name, ()):
                tally[sid] = tally.get(sid, 0) + 1
        ranked = sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:top]

    def to_json(self):
        payload = {
            "style": "IoAF-style",
            "thresholds": THRESHOLDS,
            "n_records": self.n_records,
            "malformed": self.malformed,
            "indicators": {
                name: {
                    "rate": self.rate(name),
                    "count": self.counts.get(name, 0),
                    "applicable": self.applicable.get(name, 0),
                    "sample_ids": sorted(set(self.sample_ids.get(name, ()))),
                }
                for name in INDICATORS
            },
            "worst_offenders": self.worst_offenders(),
            "config": self.config_echo,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def aggregate(records, config_echo=None):
    """Reduce AuditRecords to a FailureReport; order-independent."""
    report = FailureReport(config_echo=dict(config_echo or {}))
    for rec in records:
        report.n_records += 1
        if rec.flags.get("MALFORMED"):
            report.malformed += 1
        for name in INDICATORS:
            value = rec.flags.get(name)
            if value is None:
                continue
            report.applicable[name] = report.applicable.get(name, 0) + 1
            if value:
                report.counts[name] = report.counts.get(name, 0) + 1
                report.sample_ids.setdefault(name, []).append(rec.sample_id)
    return report

"""Security evaluation: clean error, per-budget attacks, SEC curves, sweeps.

For each model the curve starts at the clean error (eps = 0); every budget
in the grid is attacked independently against every test sample, and the
reported curve applies the cumulative-break rule (a sample broken at some
eps stays broken at every larger eps), which makes curves non-decreasing by
construction. Attack traces live only for the duration of one (model, eps)
batch, then reduce to indicator bitmasks.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .attacks import (
    ENSEMBLE_LABEL,
    AttackConfig,
    apgd_attack,
    apgd_dlr_targeted,
    autoattack_ensemble,
    pgd_attack,
    square_attack,
)
from .indicators import AuditRecord, aggregate, audit
from .train import TrainConfig, train
from .zoo import build_model

EPS_PRESETS = {
    "mnist-cnn": (0.3, 0.98, 1.65, 2.33, 3.0),
    "mnist-fc": (0.1, 0.45, 0.80, 1.15, 1.5),
    "cifar10": (0.01, 0.08, 0.15, 0.23, 0.30),
}

ATTACK_NAMES = ("pgd", "apgd-cw", "apgd-dlr-targeted", "square", "autoattack")

SCALED_STEP = "scaled"  # step_size rule: 2.5 * eps / n_iter per budget


@dataclass
class AttackPlan:
    """Attack family plus the per-budget configuration rule."""

    name: str = "pgd"
    norm: float = 2.0
    n_iter: int = 100
    step_size: float | str = 1e-3
    query_budget: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.name not in ATTACK_NAMES:
            raise ValueError(f"unknown attack {self.name!r}; expected one of {ATTACK_NAMES}")

    def config_for(self, eps):
        if self.step_size == SCALED_STEP:
            step = max(2.5 * eps / self.n_iter, 1e-12)
        else:
            step = float(self.step_size)
        loss = {"apgd-cw": "cw", "apgd-dlr-targeted": "dlr-targeted"}.get(self.name, "ce")
        return AttackConfig(
            eps=eps,
            norm=self.norm,
            n_iter=self.n_iter,
            step_size=step,
            loss=loss,
            query_budget=self.query_budget,
            seed=self.seed,
        )

    @property
    def label(self):
        return ENSEMBLE_LABEL if self.name == "autoattack" else self.name


@dataclass
class SecurityCurve:
    family: str
    width: int
    param_count: int
    attack: str
    epsilons: list  # starts at 0.0
    error_rates: list
    per_sample_broken: np.ndarray | None = None  # [len(epsilons), n] cumulative

    @property
    def model_label(self):
        return f"{self.family}-z{self.width}"

    @property
    def auc_value(self):
        return auc(self)

    def to_csv(self):
        lines = ["epsilon,error_rate"]
        lines += [f"{repr(float(e))},{repr(float(r))}" for e, r in zip(self.epsilons, self.error_rates)]
        return "\n".join(lines) + "\n"


def curve_points_from_csv(text):
    """Parse `epsilon,error_rate` CSV text back to exact float pairs."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "epsilon,error_rate":
        raise ValueError("not a security-curve CSV: missing 'epsilon,error_rate' header")
    points = []
    for ln in lines[1:]:
        eps_str, err_str = ln.split(",")
        points.append((float(eps_str), float(err_str)))
    return points


def error_rate(model, images, labels, batch_size=500):
    """Fraction of samples whose argmax prediction differs from the label."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("error_rate over an empty set")
    wrong = 0
    for start in range(0, len(labels), batch_size):
        stop = start + batch_size
        wrong += int((model.predict(images[start:stop]) != labels[start:stop]).sum())
    return wrong / len(labels)


def auc(curve):
    """Trapezoidal area under error-rate(eps), normalized to [0, 1]."""
    xs = np.asarray(curve.epsilons, dtype=np.float64)
    ys = np.asarray(curve.error_rates, dtype=np.float64)
    if xs.size < 2:
        raise ValueError("need at least two curve points for an AUC")
    span = xs[-1] - xs[0]
    return float(np.trapezoid(ys, xs) / span)


def _run_attack(plan, model, x, y, eps, sample_indices):
    cfg = plan.config_for(eps)
    if plan.name == "pgd":
        return pgd_attack(model, x, y, cfg)
    if plan.name == "apgd-cw":
        return apgd_attack(model, x, y, cfg)
    if plan.name == "apgd-dlr-targeted":
        return apgd_dlr_targeted(model, x, y, cfg)
    if plan.name == "square":
        return square_attack(model.logits, x, y, cfg, sample_indices=sample_indices)
    return autoattack_ensemble(
        model, x, y, eps, plan.norm, n_iter=plan.n_iter, query_budget=plan.query_budget, seed=plan.seed
    )


def evaluate_sec(model, test_set, plan, eps_list, audit_records=None, attribution=None, batch_size=250, progress=None):
    """One model against one attack plan over the whole budget grid.

    `attribution`, if given, collects (eps, sample_id, broken_by) rows for
    ensemble runs.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(b <= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly increasing and positive (0 is prepended)")
    x_all, y_all = test_set.images, test_set.labels
    n = len(test_set)
    clean_pred = np.concatenate(
        [model.predict(x_all[s : s + batch_size]) for s in range(0, n, batch_size)]
    )
    broken = clean_pred != y_all
    per_sample = [broken.copy()]
    errors = [float(broken.mean())]

    for eps in eps_list:
        success = np.zeros(n, dtype=bool)
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            ids = np.arange(start, stop)
            results = _run_attack(plan, model, x_all[start:stop], y_all[start:stop], eps, ids)
            cfg = plan.config_for(eps)
            for local, i in enumerate(ids):
                res = results[local]
                success[i] = res.success
                if audit_records is not None:
                    context = getattr(res, "member_success", None) if plan.name == "autoattack" else None
                    flags = audit(res.trace, res, res.trace.clean_prediction, y_all[i], cfg, ensemble_context=context)
                    audit_records.append(AuditRecord(int(i), plan.label, eps, flags))
                if attribution is not None and hasattr(res, "broken_by"):
                    attribution.append((eps, int(i), res.broken_by or ""))
        broken = broken | success  # cumulative-break rule
        per_sample.append(broken.copy())
        errors.append(float(broken.mean()))
        if progress is not None:
            progress(eps, errors[-1])

    return SecurityCurve(
        family=model.arch.get("family", "custom"),
        width=int(model.arch.get("width", 0)),
        param_count=model.param_count(),
        attack=plan.label,
        epsilons=[0.0] + eps_list,
        error_rates=errors,
        per_sample_broken=np.stack(per_sample),
    )


@dataclass
class SweepReport:
    """Curves, failure audit and base performance for one width sweep."""

    family: str
    widths: list
    models: list = field(default_factory=list)  # dicts: width, param_count, clean_error
    curves: dict = field(default_factory=dict)  # attack label -> {width: SecurityCurve}
    failure_report: object = None
    config_echo: dict = field(default_factory=dict)

    def to_json(self):
        payload = {
            "toolkit_version": __version__,
            "family": self.family,
            "widths": list(self.widths),
            "models": self.models,
            "curves": {
                attack: {
                    str(w): {
                        "epsilons": c.epsilons,
                        "error_rates": c.error_rates,
                        "auc": c.auc_value,
                        "param_count": c.param_count,
                    }
                    for w, c in by_width.items()
                }
                for attack, by_width in self.curves.items()
            },
            "failure_report": json.loads(self.failure_report.to_json()) if self.failure_report else None,
            "config": self.config_echo,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def capacity_sweep(
    family,
    widths,
    train_set,
    test_set,
    plans,
    eps_list,
    train_config=None,
    seed=0,
    models=None,
    progress=None,
):
    """Train (or reuse) one model per width and evaluate every attack plan.

    `models` may carry pre-trained networks keyed by width; anything missing
    is trained here with the given config. Deterministic for a fixed seed.
    """
    train_config = train_config or TrainConfig()
    plans = list(plans)
    report = SweepReport(family=family, widths=list(widths))
    audit_records = []
    models = dict(models or {})
    for z in widths:
        if z not in models:
            model = build_model(family, z, seed=seed)
            train(model, train_set, train_config)
            models[z] = model
        model = models[z]
        clean = error_rate(model, test_set.images, test_set.labels)
        report.models.append(
            {"width": int(z), "param_count": model.param_count(), "clean_error": clean}
        )
        for plan in plans:
            curve = evaluate_sec(model, test_set, plan, eps_list, audit_records=audit_records)
            report.curves.setdefault(plan.label, {})[z] = curve
        if progress is not None:
            progress(z, clean)
    report.failure_report = aggregate(
        audit_records,
        config_echo={
            "family": family,
            "widths": list(map(int, widths)),
            "eps_list": [float(e) for e in eps_list],
            "attacks": [p.label for p in plans],
            "seed": seed,
        },
    )
    report.config_echo = {
        "train": asdict(train_config),
        "seed": seed,
        "n_train": len(train_set),
        "n_test": len(test_set),
    }
    return report

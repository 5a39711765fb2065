"""Evasion attacks under lp-ball plus box constraints."""

from .apgd import apgd_attack, apgd_dlr_targeted
from .ensemble import ENSEMBLE_LABEL, MEMBER_ORDER, EnsembleResult, autoattack_ensemble
from .losses import cw_loss, dlr_loss_targeted, margin_loss
from .pgd import pgd_attack
from .projection import project, project_batch
from .square import square_attack
from .types import AttackConfig, AttackResult, AttackTrace, TraceStep

__all__ = [
    "AttackConfig",
    "AttackResult",
    "AttackTrace",
    "TraceStep",
    "EnsembleResult",
    "ENSEMBLE_LABEL",
    "MEMBER_ORDER",
    "project",
    "project_batch",
    "pgd_attack",
    "apgd_attack",
    "apgd_dlr_targeted",
    "square_attack",
    "autoattack_ensemble",
    "cw_loss",
    "dlr_loss_targeted",
    "margin_loss",
]

"""Attack configuration, per-iteration traces, and results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def normalize_norm(p):
    """Accept 2, 2.0, 'inf', inf -> canonical float (2.0 or math.inf)."""
    if p in (2, 2.0, "2"):
        return 2.0
    if p in (math.inf, np.inf, "inf", "Linf"):
        return math.inf
    raise ValueError(f"unsupported norm {p!r}; use 2 or inf")


@dataclass(frozen=True)
class AttackConfig:
    eps: float
    norm: float = 2.0
    n_iter: int = 100
    step_size: float = 1e-3
    loss: str = "ce"
    targeted: bool = False
    query_budget: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "norm", normalize_norm(self.norm))
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be >= 1, got {self.n_iter}")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.query_budget < 1:
            raise ValueError(f"query_budget must be >= 1, got {self.query_budget}")


@dataclass
class TraceStep:
    loss: float
    grad_norm: float  # l2 norm of the input gradient; nan for black-box queries
    delta_norm: float  # ||x_iterate - x||_p
    prediction: int


@dataclass
class AttackTrace:
    """Per-iteration record of one sample's attack, fed to the failure auditor."""

    clean_prediction: int
    initial_loss: float  # loss at delta_0 = 0
    initial_grad_norm: float
    steps: list = field(default_factory=list)
    uses_gradients: bool = True
    events: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)  # adaptive attacks only

    def losses(self):
        """All recorded iterate losses, delta_0 first."""
        return [self.initial_loss] + [s.loss for s in self.steps]


@dataclass
class AttackResult:
    x_adv: np.ndarray
    success: bool  # prediction at x_adv != true label
    loss: float  # best loss over all iterates (same float as the trace max)
    trace: AttackTrace
    prediction: int = -1

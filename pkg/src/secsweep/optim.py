"""Adam optimizer (beta1=0.9, beta2=0.999, eps=1e-8, bias-corrected)."""

import numpy as np


class Adam:
    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {lr}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        """One update over named parameters; returns new arrays."""
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        out = {}
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[name] / np.float32(bc1)
            v_hat = self.v[name] / np.float32(bc2)
            out[name] = p - np.float32(self.lr) * m_hat / (np.sqrt(v_hat) + np.float32(self.eps))
        return out


def adam_step(params, grads, state, lr=0.001):
    """Functional single step: state is an Adam instance (created if None)."""
    if state is None:
        state = Adam(lr=lr)
    state.lr = lr
    return state.step(params, grads), state

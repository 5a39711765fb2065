"""Layered feed-forward networks on top of the autodiff tape.

A `Network` is an ordered stack of layers with uniquely named parameter
arrays. It is frozen except for `set_parameters`, which requires exclusive
access; `forward_pass` builds a fresh tape per call (wrapping each parameter
array in a new leaf node), so forward/backward over disjoint batches can run
concurrently against the same parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ShapeError

LOSS_FNS = {
    "ce": ad.softmax_cross_entropy,
    "cw": ad.cw_loss,
    "dlr-targeted": ad.dlr_loss_targeted,
}


class Linear:
    def __init__(self, name, w, b):
        self.name = name
        self.w = np.asarray(w, dtype=ad.DTYPE)
        self.b = np.asarray(b, dtype=ad.DTYPE)

    def params(self):
        return {f"{self.name}.w": self.w, f"{self.name}.b": self.b}

    def forward(self, t, leaf):
        return ad.add(ad.matmul(t, leaf(f"{self.name}.w")), leaf(f"{self.name}.b"))


class Conv2d:
    def __init__(self, name, w, b, stride=1, padding=0):
        self.name = name
        self.w = np.asarray(w, dtype=ad.DTYPE)
        self.b = np.asarray(b, dtype=ad.DTYPE)
        self.stride = stride
        self.padding = padding

    def params(self):
        return {f"{self.name}.w": self.w, f"{self.name}.b": self.b}

    def forward(self, t, leaf):
        return ad.conv2d(
            t, leaf(f"{self.name}.w"), leaf(f"{self.name}.b"), stride=self.stride, padding=self.padding
        )


class ReLU:
    def params(self):
        return {}

    def forward(self, t, leaf):
        return ad.relu(t)


class Flatten:
    def params(self):
        return {}

    def forward(self, t, leaf):
        return ad.flatten(t)


class GlobalAvgPool:
    def params(self):
        return {}

    def forward(self, t, leaf):
        return ad.global_avg_pool(t)


class Residual:
    """Residual block: out = body(x) + skip(x), skip = identity or 1x1 projection."""

    def __init__(self, body, projection=None):
        self.body = list(body)
        self.projection = projection

    def params(self):
        out = {}
        for layer in self.body:
            out.update(layer.params())
        if self.projection is not None:
            out.update(self.projection.params())
        return out

    def forward(self, t, leaf):
        h = t
        for layer in self.body:
            h = layer.forward(h, leaf)
        s = t if self.projection is None else self.projection.forward(t, leaf)
        return ad.add(h, s)


@dataclass
class ForwardPass:
    logits: ad.Tensor
    input_leaf: ad.Tensor
    param_leaves: dict


@dataclass
class LossGrads:
    """Batched loss evaluation with whichever gradients were requested."""

    losses: np.ndarray  # per-sample, float32 [n]
    logits: np.ndarray  # [n, c]
    input_grad: np.ndarray | None = None
    param_grads: dict = field(default_factory=dict)


class Network:
    def __init__(self, layers, input_shape, n_classes, arch=None):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.n_classes = int(n_classes)
        self.arch = dict(arch) if arch else {}
        self._params = {}
        for layer in self.layers:
            for name, arr in layer.params().items():
                if name in self._params:
                    raise ValueError(f"duplicate parameter name {name!r}")
                self._params[name] = arr

    # -- parameter access -------------------------------------------------

    def parameters(self):
        """Name -> array view of every parameter, in construction order."""
        return dict(self._params)

    def param_count(self):
        return int(sum(arr.size for arr in self._params.values()))

    def set_parameters(self, updates):
        """Replace parameter arrays in place. Requires exclusive access."""
        unknown = set(updates) - set(self._params)
        if unknown:
            raise ValueError(f"unknown parameter names: {sorted(unknown)}")
        for name, arr in updates.items():
            arr = np.asarray(arr, dtype=ad.DTYPE)
            if arr.shape != self._params[name].shape:
                raise ShapeError(
                    f"parameter {name!r}: expected shape {self._params[name].shape}, got {arr.shape}"
                )
            if not np.isfinite(arr).all():
                raise ValueError(f"parameter {name!r}: non-finite values in update")
            self._params[name][...] = arr

    # -- forward / backward ------------------------------------------------

    def _validate_input(self, x):
        x = np.asarray(x)
        if x.ndim == len(self.input_shape):  # single sample
            x = x[None]
        if x.shape[1:] != self.input_shape:
            raise ShapeError(f"input shape {x.shape[1:]} does not match {self.input_shape}")
        return np.ascontiguousarray(x, dtype=ad.DTYPE)

    def forward_pass(self, x, wrt=("input", "params")):
        x = self._validate_input(x)
        leaves = {}
        params_need = "params" in wrt

        def leaf(name):
            if name not in leaves:
                leaves[name] = ad.Tensor(self._params[name], name=name, needs_grad=params_need)
            return leaves[name]

        t = ad.Tensor(x, name="input", needs_grad="input" in wrt)
        inp = t
        for layer in self.layers:
            t = layer.forward(t, leaf)
        if t.data.ndim != 2 or t.data.shape[1] != self.n_classes:
            raise ShapeError(f"network output shape {t.shape} is not [batch, {self.n_classes}]")
        return ForwardPass(logits=t, input_leaf=inp, param_leaves=leaves)

    def logits(self, x):
        return self.forward_pass(x).logits.data

    def predict(self, x):
        return self.logits(x).argmax(axis=1)

    def loss_and_grads(self, x, y, loss="ce", targets=None, wrt=("input",)):
        """Per-sample losses plus gradients w.r.t. the requested leaves.

        Backpropagates from the *sum* of per-sample losses, so the input
        gradient rows are the per-sample gradients.
        """
        if loss not in LOSS_FNS:
            raise ValueError(f"unknown loss {loss!r}; expected one of {sorted(LOSS_FNS)}")
        fp = self.forward_pass(x, wrt=wrt)
        if loss == "dlr-targeted":
            if targets is None:
                raise ValueError("dlr-targeted loss requires targets")
            per = ad.dlr_loss_targeted(fp.logits, y, targets)
        else:
            per = LOSS_FNS[loss](fp.logits, y)
        ad.backward(ad.sum_all(per))
        out = LossGrads(losses=per.data, logits=fp.logits.data)
        if "input" in wrt:
            out.input_grad = fp.input_leaf.grad
        if "params" in wrt:
            out.param_grads = {
                name: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data))
                for name, leaf in fp.param_leaves.items()
            }
        return out

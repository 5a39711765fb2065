"""Shared test utilities: finite-difference oracle and random graph factory."""

import numpy as np

from secsweep import autodiff as ad


def fd_grad(loss_fn, arr, h=1e-3):
    """Central finite differences of a scalar-valued rebuild function."""
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = loss_fn()
        flat[i] = old - h
        down = loss_fn()
        flat[i] = old
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def rel_err(a, b):
    denom = np.maximum(1e-6, np.maximum(np.abs(a), np.abs(b)))
    return float((np.abs(a - b) / denom).max()) if a.size else 0.0


class GraphCase:
    """A random small float64 graph with named leaves and a rebuildable loss."""

    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.leaves = {}
        self.kind = seed % 4
        self.loss_name = ("ce", "cw", "dlr")[seed % 3]
        n, c = 2, 4
        self.y = rng.integers(0, c, size=n)
        self.t = (self.y + 1 + rng.integers(0, c - 1, size=n)) % c

        def leafdata(name, shape, scl=1.0):
            self.leaves[name] = (rng.standard_normal(shape) * scl).astype(np.float64)
            return self.leaves[name]

        if self.kind == 0:  # mlp: matmul + row bias + relu + scale
            leafdata("x", (n, 5))
            leafdata("w1", (5, 6), 0.7)
            leafdata("b1", (6,), 0.3)
            leafdata("w2", (6, c), 0.7)
            leafdata("b2", (c,), 0.3)
        elif self.kind == 1:  # conv stack: stride 2 valid + stride 1 padded
            leafdata("x", (n, 2, 7, 7))
            leafdata("k1", (3, 2, 3, 3), 0.5)
            leafdata("kb1", (3,), 0.2)
            leafdata("k2", (3, 3, 3, 3), 0.5)
            leafdata("kb2", (3,), 0.2)
            leafdata("w", (3 * 3 * 3, c), 0.4)
            leafdata("b", (c,), 0.2)
        elif self.kind == 2:  # residual block + global average pool
            leafdata("x", (n, 2, 6, 6))
            leafdata("k1", (3, 2, 3, 3), 0.5)
            leafdata("kb1", (3,), 0.2)
            leafdata("k2", (3, 3, 3, 3), 0.5)
            leafdata("kb2", (3,), 0.2)
            leafdata("w", (3, c), 0.6)
            leafdata("b", (c,), 0.2)
        else:  # elementwise: mul + add + relu on top of a linear map
            leafdata("x", (n, 5))
            leafdata("w", (5, c), 0.7)
            leafdata("b", (c,), 0.3)
            leafdata("m", (n, c), 0.5)

    def build(self):
        """Rebuild the tape from current leaf arrays; returns (loss, leaf tensors)."""
        ts = {name: ad.Tensor(arr, name=name) for name, arr in self.leaves.items()}
        if self.kind == 0:
            h = ad.relu(ad.add(ad.matmul(ts["x"], ts["w1"]), ts["b1"]))
            h = ad.scale(h, 1.3)
            logits = ad.add(ad.matmul(h, ts["w2"]), ts["b2"])
        elif self.kind == 1:
            h = ad.relu(ad.conv2d(ts["x"], ts["k1"], ts["kb1"], stride=2))  # 7 -> 3
            h = ad.relu(ad.conv2d(h, ts["k2"], ts["kb2"], stride=1, padding=1))  # 3 -> 3
            logits = ad.add(ad.matmul(ad.flatten(h), ts["w"]), ts["b"])
        elif self.kind == 2:
            h = ad.relu(ad.conv2d(ts["x"], ts["k1"], ts["kb1"], stride=1, padding=1))
            body = ad.conv2d(h, ts["k2"], ts["kb2"], stride=1, padding=1)
            h = ad.relu(ad.add(body, h))  # residual add
            logits = ad.add(ad.matmul(ad.global_avg_pool(h), ts["w"]), ts["b"])
        else:
            lin = ad.add(ad.matmul(ts["x"], ts["w"]), ts["b"])
            logits = ad.add(ad.mul(ad.relu(lin), ts["m"]), lin)
        if self.loss_name == "ce":
            per = ad.softmax_cross_entropy(logits, self.y)
        elif self.loss_name == "cw":
            per = ad.cw_loss(logits, self.y)
        else:
            per = ad.dlr_loss_targeted(logits, self.y, self.t)
        return ad.sum_all(per), ts

    def loss_value(self):
        loss, _ = self.build()
        return float(loss.data)

    def check(self, h=1e-3, tol=1e-3):
        """Analytic vs central-difference gradients for every leaf."""
        loss, ts = self.build()
        ad.backward(loss)
        worst = 0.0
        for name, arr in self.leaves.items():
            analytic = ts[name].grad
            assert analytic is not None, f"no gradient for leaf {name}"
            numeric = fd_grad(self.loss_value, arr, h=h)
            worst = max(worst, rel_err(analytic, numeric))
        assert worst < tol, f"gradcheck failed (kind={self.kind}, loss={self.loss_name}): {worst:.3e}"
        return worst

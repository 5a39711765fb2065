"""Dense tensors with reverse-mode automatic differentiation.

Values are numpy arrays (float32 throughout the toolkit; float64 graphs are
supported so finite-difference oracles can run at full precision). Every
operation returns a new `Tensor` that records its parents and a closure
mapping the output gradient to parent gradients; `backward` walks the tape
once in reverse topological order and leaves gradients on the nodes.

A tape is private to one forward pass: networks wrap their parameter arrays
in fresh leaf nodes per pass, so concurrent passes over frozen parameters
share no mutable state. Any operation that produces NaN/Inf raises
immediately instead of letting the value propagate.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateLogitsError, NonFiniteError, ShapeError

DTYPE = np.float32


def _check_finite(arr, op):
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite values produced by {op}")


class Tensor:
    """One node of the computation tape.

    `needs_grad=False` on a leaf prunes the backward work feeding it (e.g.
    attacks differentiate w.r.t. the input only, so parameter-gradient
    kernels are skipped entirely).
    """

    __slots__ = ("data", "name", "grad", "needs_grad", "_parents", "_backward")

    def __init__(self, data, name=None, needs_grad=True, _parents=(), _backward=None):
        arr = np.asarray(data)
        if arr.dtype.kind != "f":
            arr = arr.astype(DTYPE)
        self.data = arr
        self.name = name
        self.grad = None
        self.needs_grad = needs_grad if not _parents else any(p.needs_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={tuple(self.data.shape)}{tag})"


def _acc(node, g):
    if not node.needs_grad:
        return
    node.grad = g if node.grad is None else node.grad + g


def backward(root):
    """Fill `.grad` on every node reachable from a scalar `root`."""
    if root.data.size != 1:
        raise ShapeError(f"backward requires a scalar loss node, got shape {root.shape}")
    topo = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    for node in topo:
        node.grad = None
    root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# elementwise / linear algebra kernels


def add(a, b):
    """Elementwise add; the only broadcast allowed is a bias vector."""
    if a.shape == b.shape:
        out_data = a.data + b.data

        def _bwd(g):
            _acc(a, g)
            _acc(b, g)

    elif a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        out_data = a.data + b.data[None, :]

        def _bwd(g):
            _acc(a, g)
            _acc(b, g.sum(axis=0))

    elif a.data.ndim == 4 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        out_data = a.data + b.data[None, :, None, None]

        def _bwd(g):
            _acc(a, g)
            _acc(b, g.sum(axis=(0, 2, 3)))

    else:
        raise ShapeError(f"add: incompatible shapes {a.shape} and {b.shape}")
    _check_finite(out_data, "add")
    return Tensor(out_data, _parents=(a, b), _backward=_bwd)


def mul(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    out_data = a.data * b.data
    _check_finite(out_data, "mul")

    def _bwd(g):
        _acc(a, g * b.data)
        _acc(b, g * a.data)

    return Tensor(out_data, _parents=(a, b), _backward=_bwd)


def scale(a, s):
    s = float(s)
    out_data = a.data * a.data.dtype.type(s)
    _check_finite(out_data, "scale")

    def _bwd(g):
        _acc(a, g * a.data.dtype.type(s))

    return Tensor(out_data, _parents=(a,), _backward=_bwd)


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out_data = a.data @ b.data
    _check_finite(out_data, "matmul")

    def _bwd(g):
        if a.needs_grad:
            _acc(a, g @ b.data.T)
        if b.needs_grad:
            _acc(b, a.data.T @ g)

    return Tensor(out_data, _parents=(a, b), _backward=_bwd)


def relu(a):
    mask = a.data > 0  # subgradient at 0 is 0
    out_data = np.where(mask, a.data, a.data.dtype.type(0))

    def _bwd(g):
        _acc(a, g * mask)

    return Tensor(out_data, _parents=(a,), _backward=_bwd)


def flatten(a):
    if a.data.ndim < 2:
        raise ShapeError(f"flatten expects a batched tensor, got shape {a.shape}")
    n = a.shape[0]
    out_data = a.data.reshape(n, -1)

    def _bwd(g):
        _acc(a, g.reshape(a.data.shape))

    return Tensor(out_data, _parents=(a,), _backward=_bwd)


def conv2d(x, w, b, stride=1, padding=0):
    """2-D convolution (cross-correlation) with zero padding and square stride.

    Lowered to an im2col matmul so both passes run on BLAS; for a fixed
    platform the result is bitwise deterministic.
    """
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeError(f"conv2d: expected 4-d input/kernel, got {x.shape} and {w.shape}")
    n, cin, h, wd = x.data.shape
    cout, cin2, kh, kw = w.data.shape
    if cin != cin2:
        raise ShapeError(f"conv2d: input has {cin} channels, kernel expects {cin2}")
    if b.data.shape != (cout,):
        raise ShapeError(f"conv2d: bias shape {b.shape} does not match {cout} filters")
    p, s = int(padding), int(stride)
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    oh = (h + 2 * p - kh) // s + 1
    ow = (wd + 2 * p - kw) // s + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"conv2d: kernel {kh}x{kw} does not fit input {h}x{wd} (pad {p})")
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
    # columns: [n * oh * ow, cin * kh * kw]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * oh * ow, cin * kh * kw)
    w_mat = w.data.reshape(cout, cin * kh * kw).T
    out_data = (cols @ w_mat).reshape(n, oh, ow, cout).transpose(0, 3, 1, 2)
    out_data = out_data + b.data[None, :, None, None]
    _check_finite(out_data, "conv2d")

    def _bwd(g):
        g_mat = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * oh * ow, cout)
        if w.needs_grad:
            _acc(w, (g_mat.T @ cols).reshape(cout, cin, kh, kw))
        if b.needs_grad:
            _acc(b, g_mat.sum(axis=0))
        if x.needs_grad:
            gcols = (g_mat @ w_mat.T).reshape(n, oh, ow, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
            gx_p = np.zeros_like(xp)
            for ki in range(kh):
                for kj in range(kw):
                    gx_p[:, :, ki : ki + s * (oh - 1) + 1 : s, kj : kj + s * (ow - 1) + 1 : s] += gcols[
                        :, :, :, :, ki, kj
                    ]
            _acc(x, gx_p[:, :, p : p + h, p : p + wd] if p else gx_p)

    return Tensor(out_data, _parents=(x, w, b), _backward=_bwd)


def global_avg_pool(a):
    if a.data.ndim != 4:
        raise ShapeError(f"global_avg_pool expects a 4-d tensor, got shape {a.shape}")
    n, c, h, w = a.data.shape
    out_data = a.data.mean(axis=(2, 3))

    def _bwd(g):
        _acc(a, np.broadcast_to(g[:, :, None, None], a.data.shape) / a.data.dtype.type(h * w))

    return Tensor(out_data, _parents=(a,), _backward=_bwd)


def sum_all(a):
    out_data = np.asarray(a.data.sum(), dtype=a.data.dtype)

    def _bwd(g):
        _acc(a, np.broadcast_to(g, a.data.shape).copy())

    return Tensor(out_data, _parents=(a,), _backward=_bwd)


def mean_all(a):
    size = a.data.size
    out_data = np.asarray(a.data.mean(), dtype=a.data.dtype)

    def _bwd(g):
        _acc(a, np.broadcast_to(g / a.data.dtype.type(size), a.data.shape).copy())

    return Tensor(out_data, _parents=(a,), _backward=_bwd)


# ---------------------------------------------------------------------------
# loss nodes (per-sample vectors; reduce with sum_all/mean_all before backward)


def _as_label_array(y, n, what="labels"):
    y = np.asarray(y)
    if y.shape != (n,):
        raise ShapeError(f"{what}: expected shape ({n},), got {y.shape}")
    return y.astype(np.int64)


def softmax_cross_entropy(logits, y):
    """Per-sample cross entropy of softmax(logits) against integer labels."""
    z = logits.data
    if z.ndim != 2:
        raise ShapeError(f"softmax_cross_entropy expects [batch, classes], got {logits.shape}")
    n, c = z.shape
    y = _as_label_array(y, n)
    rows = np.arange(n)
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    s = e.sum(axis=1, keepdims=True)
    out_data = (m[:, 0] + np.log(s[:, 0])) - z[rows, y]
    _check_finite(out_data, "softmax_cross_entropy")
    probs = e / s

    def _bwd(g):
        gl = probs * g[:, None]
        gl[rows, y] -= g
        _acc(logits, gl)

    return Tensor(out_data, _parents=(logits,), _backward=_bwd)


def cw_loss(logits, y):
    """Margin loss -(z_y - max_{i != y} z_i); grows as the attack strengthens."""
    z = logits.data
    if z.ndim != 2 or z.shape[1] < 2:
        raise ShapeError(f"cw_loss expects [batch, classes>=2], got {logits.shape}")
    n, c = z.shape
    y = _as_label_array(y, n)
    rows = np.arange(n)
    masked = z.copy()
    masked[rows, y] = -np.inf
    j = masked.argmax(axis=1)
    out_data = z[rows, j] - z[rows, y]
    _check_finite(out_data, "cw_loss")

    def _bwd(g):
        gl = np.zeros_like(z)
        np.add.at(gl, (rows, j), g)
        np.add.at(gl, (rows, y), -g)
        _acc(logits, gl)

    return Tensor(out_data, _parents=(logits,), _backward=_bwd)


def dlr_loss_targeted(logits, y, t):
    """Targeted difference-of-logits-ratio: -(z_y - z_t) / (z_(1) - z_(3)).

    z_(k) is the k-th largest logit. Needs at least three classes; raises
    DegenerateLogitsError (carrying the offending sample indices) when the
    denominator falls below 1e-12, so callers can flag those samples.
    """
    z = logits.data
    if z.ndim != 2 or z.shape[1] < 3:
        raise ShapeError(f"dlr_loss_targeted expects [batch, classes>=3], got {logits.shape}")
    n, c = z.shape
    y = _as_label_array(y, n)
    t = _as_label_array(t, n, what="targets")
    rows = np.arange(n)
    order = np.argsort(-z, axis=1, kind="stable")
    p1 = order[:, 0]
    p3 = order[:, 2]
    den = z[rows, p1] - z[rows, p3]
    bad = den < 1e-12
    if bad.any():
        raise DegenerateLogitsError(
            f"logit spread below 1e-12 for {int(bad.sum())} sample(s)",
            sample_indices=np.nonzero(bad)[0],
        )
    num = z[rows, y] - z[rows, t]
    out_data = -num / den
    _check_finite(out_data, "dlr_loss_targeted")

    def _bwd(g):
        gl = np.zeros_like(z)
        np.add.at(gl, (rows, y), -g / den)
        np.add.at(gl, (rows, t), g / den)
        np.add.at(gl, (rows, p1), g * num / den**2)
        np.add.at(gl, (rows, p3), -g * num / den**2)
        _acc(logits, gl)

    return Tensor(out_data, _parents=(logits,), _backward=_bwd)


# ---------------------------------------------------------------------------
# plain array helpers (no tape)


def lp_norm(arr, p):
    """||arr||_p over all elements, p in {2, inf}."""
    flat = np.asarray(arr, dtype=np.float64).ravel()
    if p == 2:
        return float(np.sqrt((flat * flat).sum()))
    if p == np.inf or p == "inf":
        return float(np.abs(flat).max()) if flat.size else 0.0
    raise ValueError(f"unsupported norm p={p!r}; use 2 or inf")


def lp_norms(arr, p, batch_axis=0):
    """Per-sample ||.||_p of a batched array."""
    a = np.asarray(arr, dtype=np.float64)
    flat = a.reshape(a.shape[batch_axis], -1)
    if p == 2:
        return np.sqrt((flat * flat).sum(axis=1))
    if p == np.inf or p == "inf":
        return np.abs(flat).max(axis=1) if flat.shape[1] else np.zeros(flat.shape[0])
    raise ValueError(f"unsupported norm p={p!r}; use 2 or inf")

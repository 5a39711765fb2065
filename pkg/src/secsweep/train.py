"""Cross-entropy training loop and versioned binary checkpoints."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .data import iter_batches
from .errors import CheckpointError, TrainingDivergedError
from .optim import Adam
from .zoo import build_model

CKPT_MAGIC = b"SECSWEEP"
CKPT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 20
    epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass
class TrainResult:
    loss_history: list = field(default_factory=list)  # one mean loss per epoch

    @property
    def final_loss(self):
        return self.loss_history[-1] if self.loss_history else None


def train(model, train_set, config, log_fn=None):
    """Minimize softmax cross entropy with Adam over the stored batch order.

    Batches follow the subsample draw and are not reshuffled between epochs,
    so a (seed, config, data) triple maps to exactly one parameter
    trajectory. Epoch means are accumulated in float64.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    opt = Adam(lr=config.lr)
    result = TrainResult()
    for epoch in range(config.epochs):
        total = 0.0
        count = 0
        for batch_index, (xb, yb) in enumerate(iter_batches(train_set, config.batch_size)):
            lg = model.loss_and_grads(xb, yb, loss="ce", wrt=("params",))
            batch_losses = lg.losses.astype(np.float64)
            if not np.isfinite(batch_losses).all():
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}"
                )
            total += batch_losses.sum()
            count += batch_losses.size
            model.set_parameters(opt.step(model.parameters(), lg.param_grads))
        result.loss_history.append(total / count)
        if log_fn is not None:
            log_fn(epoch, result.loss_history[-1])
    return result


# ---------------------------------------------------------------------------
# checkpoints
#
# Layout (little-endian):
#   8s   magic "SECSWEEP"
#   u32  version
#   u32  length of the UTF-8 JSON descriptor (arch + training metadata)
#   ...  descriptor bytes
#   u32  parameter count
#   per parameter: u32 name length, name bytes, u32 rank, u32 dims..., f32 data


def save_checkpoint(model, path, metadata=None):
    if not model.arch.get("family"):
        raise CheckpointError("checkpoints require a zoo-built model (family/width descriptor)")
    descriptor = {
        "family": model.arch["family"],
        "width": int(model.arch["width"]),
        "metadata": dict(metadata or {}),
    }
    blob = json.dumps(descriptor, sort_keys=True).encode("utf-8")
    params = model.parameters()
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        f.write(struct.pack("<I", CKPT_VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(params)))
        for name, arr in params.items():
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


class _Reader:
    def __init__(self, buf, path):
        self.buf = buf
        self.path = path
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"{self.path}: truncated while reading {what}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def load_checkpoint(path):
    """Rebuild the model and return (model, metadata). Bitwise inverse of save."""
    with open(path, "rb") as f:
        buf = f.read()
    r = _Reader(buf, path)
    if r.take(len(CKPT_MAGIC), "magic") != CKPT_MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    version = r.u32("version")
    if version != CKPT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    descriptor = json.loads(r.take(r.u32("descriptor length"), "descriptor").decode("utf-8"))
    model = build_model(descriptor["family"], descriptor["width"])
    expected = model.parameters()
    n_params = r.u32("parameter count")
    if n_params != len(expected):
        raise CheckpointError(f"{path}: has {n_params} parameters, model needs {len(expected)}")
    updates = {}
    for _ in range(n_params):
        name = r.take(r.u32("name length"), "name").decode("utf-8")
        if name not in expected:
            raise CheckpointError(f"{path}: unknown parameter {name!r}")
        rank = r.u32("rank")
        shape = struct.unpack(f"<{rank}I", r.take(4 * rank, "dims"))
        if shape != expected[name].shape:
            raise CheckpointError(
                f"{path}: parameter {name!r} has shape {shape}, model needs {expected[name].shape}"
            )
        n_items = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(4 * n_items, f"data for {name!r}"), dtype="<f4")
        updates[name] = data.reshape(shape)
    if r.pos != len(buf):
        raise CheckpointError(f"{path}: {len(buf) - r.pos} trailing bytes after last parameter")
    model.set_parameters(updates)
    return model, descriptor["metadata"]

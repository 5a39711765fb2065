"""Deterministic synthetic digit corpora written in the real dataset formats.

Generates 10-class glyph images (a 5x7 digit font pushed through per-sample
affine jitter, intensity variation, speckle and pixel noise) and writes them
as bit-exact IDX or CIFAR-10-binary files, so the full ingestion path is
exercised even on machines without the public datasets. The color variant
assigns colors at random: only the glyph shape carries the class signal.

Everything is keyed off a single Philox seed and reproduces byte-for-byte.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .data import IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC
from .rng import master_rng

_FONT_ROWS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}

FONT = np.array(
    [[[float(ch) for ch in row] for row in _FONT_ROWS[d]] for d in range(10)],
    dtype=np.float64,
)  # [10, 7, 5]


def _bilinear(glyph, rr, cc):
    """Sample a 7x5 glyph at float coords, zero outside its support."""
    r0 = np.floor(rr).astype(np.int64)
    c0 = np.floor(cc).astype(np.int64)
    fr = rr - r0
    fc = cc - c0
    out = np.zeros_like(rr)
    for dr in (0, 1):
        for dc in (0, 1):
            ri = r0 + dr
            ci = c0 + dc
            inside = (ri >= 0) & (ri < 7) & (ci >= 0) & (ci < 5)
            weight = (fr if dr else 1 - fr) * (fc if dc else 1 - fc)
            vals = np.zeros_like(rr)
            vals[inside] = glyph[ri[inside], ci[inside]]
            out += weight * vals
    return out


def render_digit_glyphs(n, seed, size=28):
    """n jittered glyph images in [0, 1] float64 [n, size, size] plus labels."""
    rng = master_rng(seed)
    labels = rng.integers(0, 10, size=n)
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    center = (size - 1) / 2.0
    images = np.empty((n, size, size), dtype=np.float64)
    for i in range(n):
        theta = rng.uniform(-0.25, 0.25)
        shear = rng.uniform(-0.15, 0.15)
        s = rng.uniform(0.55, 0.85)
        aspect = rng.uniform(0.9, 1.1)
        tr = rng.uniform(-3.0, 3.0)
        tc = rng.uniform(-3.0, 3.0)
        intensity = rng.uniform(0.65, 1.0)
        kr = s * size / 7.0
        kc = kr * aspect
        # inverse of (rotate . shear . scale): output px -> font coords
        dr = rows - center - tr
        dc = cols - center - tc
        ct, st = np.cos(theta), np.sin(theta)
        ur = ct * dr + st * dc
        uc = -st * dr + ct * dc
        ur = ur - shear * uc
        fr = ur / kr + 3.0
        fc = uc / kc + 2.0
        img = intensity * _bilinear(FONT[labels[i]], fr, fc)
        for _ in range(rng.integers(0, 4)):
            br, bc = rng.uniform(2, size - 2, size=2)
            amp = rng.uniform(-0.4, 0.4)
            width = rng.uniform(0.8, 1.8)
            img += amp * np.exp(-((rows - br) ** 2 + (cols - bc) ** 2) / (2 * width**2))
        img += rng.normal(0.0, 0.12, size=img.shape)
        images[i] = np.clip(img, 0.0, 1.0)
    return images, labels


def render_color_glyphs(n, seed, size=32):
    """Color variant: glyph shape carries the class, colors are random.

    Deliberately harder than the grayscale corpus (wider affine jitter,
    low-contrast colors, occluding stripe, heavier noise) so that capacity
    separates models even at short training budgets.
    """
    rng = master_rng(seed)
    labels = rng.integers(0, 10, size=n)
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    center = (size - 1) / 2.0
    images = np.empty((n, 3, size, size), dtype=np.float64)
    ramp = np.stack([rows / (size - 1), cols / (size - 1)])
    for i in range(n):
        theta = rng.uniform(-0.35, 0.35)
        s = rng.uniform(0.5, 0.9)
        tr, tc = rng.uniform(-4.5, 4.5, size=2)
        kr = s * size / 7.0
        kc = kr * rng.uniform(0.85, 1.15)
        dr = rows - center - tr
        dc = cols - center - tc
        ct, st = np.cos(theta), np.sin(theta)
        fr = (ct * dr + st * dc) / kr + 3.0
        fc = (-st * dr + ct * dc) / kc + 2.0
        alpha = np.clip(_bilinear(FONT[labels[i]], fr, fc), 0.0, 1.0)
        fg = rng.uniform(0.3, 0.95, size=3)
        corner_a = rng.uniform(0.05, 0.65, size=3)
        corner_b = rng.uniform(0.05, 0.65, size=3)
        grad_axis = ramp[rng.integers(0, 2)]
        bg = corner_a[:, None, None] + (corner_b - corner_a)[:, None, None] * grad_axis[None]
        img = bg * (1.0 - alpha[None]) + fg[:, None, None] * alpha[None]
        # occluding stripe in a random color
        angle = rng.uniform(0.0, np.pi)
        offset = rng.uniform(-size / 3, size / 3)
        dist = (rows - center) * np.cos(angle) + (cols - center) * np.sin(angle) - offset
        stripe = np.exp(-(dist**2) / (2 * rng.uniform(0.6, 1.3) ** 2))
        img = img * (1.0 - 0.8 * stripe[None]) + rng.uniform(0.0, 1.0, size=3)[:, None, None] * 0.8 * stripe[None]
        img += rng.normal(0.0, 0.11, size=img.shape)
        images[i] = np.clip(img, 0.0, 1.0)
    return images, labels


def write_idx_corpus(out_dir, n_train=4000, n_test=1500, seed=0):
    """Write an MNIST-layout corpus (train + t10k IDX pairs); returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for split, n, split_seed in (("train", n_train, seed), ("t10k", n_test, seed + 1)):
        images, labels = render_digit_glyphs(n, split_seed)
        pixels = np.rint(images * 255.0).astype(np.uint8)
        ipath = os.path.join(out_dir, f"{split}-images-idx3-ubyte")
        lpath = os.path.join(out_dir, f"{split}-labels-idx1-ubyte")
        with open(ipath, "wb") as f:
            f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, 28, 28))
            f.write(pixels.tobytes())
        with open(lpath, "wb") as f:
            f.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
            f.write(labels.astype(np.uint8).tobytes())
        paths[f"{split}_images"] = ipath
        paths[f"{split}_labels"] = lpath
    return paths


def write_cifar_corpus(out_dir, n_train=4000, n_test=1200, seed=0):
    """Write a CIFAR-10-binary-layout corpus; returns train batch paths + test path."""
    os.makedirs(out_dir, exist_ok=True)

    def write_batch(path, n, split_seed):
        images, labels = render_color_glyphs(n, split_seed)
        pixels = np.rint(images * 255.0).astype(np.uint8).reshape(n, 3072)
        records = np.concatenate([labels.astype(np.uint8)[:, None], pixels], axis=1)
        with open(path, "wb") as f:
            f.write(records.tobytes())

    train_path = os.path.join(out_dir, "data_batch_1.bin")
    test_path = os.path.join(out_dir, "test_batch.bin")
    write_batch(train_path, n_train, seed)
    write_batch(test_path, n_test, seed + 1)
    return {"train_batches": [train_path], "test_batch": test_path}

"""Calibration: full CNN sweep + PGD SEC + ensemble subset (pre-acceptance)."""

import json
import time

import numpy as np
from scipy.stats import spearmanr

from secsweep.data import Dataset, load_idx, subsample
from secsweep.harness import EPS_PRESETS, AttackPlan, auc, capacity_sweep, evaluate_sec
from secsweep.synthdata import write_idx_corpus
from secsweep.train import TrainConfig, save_checkpoint, train
from secsweep.zoo import CANONICAL_WIDTHS, build_cnn

t0 = time.time()
paths = write_idx_corpus("/tmp/calib-data", n_train=4000, n_test=1500, seed=0)
train_split = load_idx(paths["train_images"], paths["train_labels"])
test_split = load_idx(paths["t10k_images"], paths["t10k_labels"])
train_set, test_set = subsample(train_split, test_split, 3000, 1000, seed=0)
print(f"[{time.time()-t0:6.1f}s] corpus ready", flush=True)

models = {}
for z in CANONICAL_WIDTHS["cnn"]:
    t1 = time.time()
    model = build_cnn(z, seed=0)
    res = train(model, train_set, TrainConfig(epochs=30, batch_size=20, seed=0))
    models[z] = model
    save_checkpoint(model, f"/tmp/calib-cnn-z{z}.ckpt", metadata={"seed": 0})
    print(f"[{time.time()-t0:6.1f}s] z={z}: train {time.time()-t1:.1f}s loss {res.final_loss:.4f}", flush=True)

plan = AttackPlan(name="pgd", norm=2, n_iter=100, step_size="scaled")
records = []
curves = {}
for z, model in models.items():
    t1 = time.time()
    curves[z] = evaluate_sec(model, test_set, plan, EPS_PRESETS["mnist-cnn"], audit_records=records)
    print(
        f"[{time.time()-t0:6.1f}s] z={z}: pgd {time.time()-t1:.1f}s curve "
        + " ".join(f"{e:.3f}" for e in curves[z].error_rates),
        flush=True,
    )

clean = {z: curves[z].error_rates[0] for z in curves}
print("clean errors:", {z: round(e, 4) for z, e in clean.items()})
zs = sorted(clean)
rho = spearmanr(np.log([models[z].param_count() for z in zs]), [clean[z] for z in zs]).statistic
print("criterion6: largest<smallest:", clean[30] < clean[1], "spearman:", round(rho, 3))

small, large = curves[1], curves[30]
holds = sum(l <= s for l, s in zip(large.error_rates[1:], small.error_rates[1:]))
print(
    "criterion7: ordering holds at", holds, "/5 budgets; auc large",
    round(auc(large), 4), "< auc small", round(auc(small), 4), auc(large) < auc(small),
)

from secsweep.indicators import aggregate

rep = aggregate(records)
print("criterion9 healthy rates:", {k: round(v, 4) for k, v in rep.rates.items()})

# ensemble on the first 200 samples, all widths
sub = Dataset(test_set.images[:200].copy(), test_set.labels[:200].copy())
ens_plan = AttackPlan(name="autoattack", norm=2, n_iter=100, query_budget=500)
ens_curves = {}
for z, model in models.items():
    t1 = time.time()
    ens_curves[z] = evaluate_sec(model, sub, ens_plan, EPS_PRESETS["mnist-cnn"])
    print(
        f"[{time.time()-t0:6.1f}s] z={z}: ens {time.time()-t1:.1f}s curve "
        + " ".join(f"{e:.3f}" for e in ens_curves[z].error_rates),
        flush=True,
    )

ok = 0
total = 0
for z in ens_curves:
    pgd_sub = curves[z].per_sample_broken[:, :200].mean(axis=1)
    for k in range(1, 6):
        total += 1
        ok += ens_curves[z].error_rates[k] >= pgd_sub[k] - 1e-12
print("criterion8 union cells ok:", ok, "/", total)
pgd_rank = [curves[z].per_sample_broken[:, :200].mean(axis=1)[1:].mean() for z in zs]
ens_rank = [np.mean(ens_curves[z].error_rates[1:]) for z in zs]
print("criterion8 spearman:", round(spearmanr(pgd_rank, ens_rank).statistic, 3))
print(f"[{time.time()-t0:6.1f}s] done")

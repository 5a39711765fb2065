"""Calibration: ResNet z in {1,2,3}, reduced desk-scale config."""
import time
import numpy as np
from secsweep.data import Dataset, load_cifar_binary, subsample
from secsweep.harness import EPS_PRESETS, AttackPlan, auc, error_rate, evaluate_sec
from secsweep.indicators import aggregate
from secsweep.synthdata import write_cifar_corpus
from secsweep.train import TrainConfig, train
from secsweep.zoo import build_resnet

t0 = time.time()
paths = write_cifar_corpus("/tmp/calib-cifar", n_train=3000, n_test=800, seed=0)
train_split = load_cifar_binary(paths["train_batches"])
test_split = load_cifar_binary([paths["test_batch"]])
train_set, test_set = subsample(train_split, test_split, 2000, 600, seed=0)
print(f"[{time.time()-t0:6.1f}s] corpus ready", flush=True)

models = {}
for z in (1, 2, 3):
    t1 = time.time()
    model = build_resnet(z, seed=0)
    res = train(model, train_set, TrainConfig(epochs=4, batch_size=50, seed=0))
    err = error_rate(model, test_set.images, test_set.labels)
    models[z] = model
    print(f"[{time.time()-t0:6.1f}s] z={z} ({model.param_count()}p): train {time.time()-t1:.1f}s "
          f"loss {res.final_loss:.4f} clean err {err:.3f}", flush=True)

sub = Dataset(test_set.images[:100].copy(), test_set.labels[:100].copy())
plan = AttackPlan(name="pgd", norm=2, n_iter=40, step_size="scaled")
records, curves = [], {}
for z, model in models.items():
    t1 = time.time()
    curves[z] = evaluate_sec(model, sub, plan, EPS_PRESETS["cifar10"], audit_records=records)
    print(f"[{time.time()-t0:6.1f}s] z={z}: pgd {time.time()-t1:.1f}s curve "
          + " ".join(f"{e:.3f}" for e in curves[z].error_rates), flush=True)

small, large = curves[1], curves[3]
holds = sum(l <= s for l, s in zip(large.error_rates[1:], small.error_rates[1:]))
print("ordering:", holds, "/5; auc", round(auc(large), 4), "<", round(auc(small), 4), auc(large) < auc(small))
rep = aggregate(records)
print("indicator rates:", {k: round(v, 4) for k, v in rep.rates.items()})
print(f"[{time.time()-t0:6.1f}s] done")

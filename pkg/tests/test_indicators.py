import copy
import math

import numpy as np

from secsweep.attacks import AttackConfig, pgd_attack, square_attack
from secsweep.attacks.types import AttackResult, AttackTrace, TraceStep
from secsweep.autodiff import lp_norms
from secsweep.indicators import AuditRecord, aggregate, audit
from test_square import saturated_copy


def no_projection_pgd(model, x, y, config):
    """Test-only PGD variant with the feasibility projection disabled."""
    delta = np.zeros_like(x)
    lg = model.loss_and_grads(x, y, loss="ce", wrt=("input",))
    preds = lg.logits.argmax(axis=1)
    traces = [
        AttackTrace(int(preds[i]), float(lg.losses[i]), float(lp_norms(lg.input_grad, 2)[i]))
        for i in range(len(y))
    ]
    best_loss = lg.losses.copy()
    best_x = x.copy()
    best_pred = preds.copy()
    for _ in range(config.n_iter):
        g = lg.input_grad
        norms = np.maximum(lp_norms(g, 2), 1e-20).reshape((-1,) + (1,) * (x.ndim - 1))
        delta = delta + np.float32(config.step_size) * (g / norms).astype(np.float32)
        x_it = np.clip(x + delta, 0.0, 1.0)  # box only, ball deliberately skipped
        delta = x_it - x
        lg = model.loss_and_grads(x_it, y, loss="ce", wrt=("input",))
        preds = lg.logits.argmax(axis=1)
        dn = lp_norms(delta, config.norm)
        gn = lp_norms(lg.input_grad, 2)
        for i in range(len(y)):
            traces[i].steps.append(TraceStep(float(lg.losses[i]), float(gn[i]), float(dn[i]), int(preds[i])))
        improved = lg.losses > best_loss
        best_loss[improved] = lg.losses[improved]
        best_x[improved] = x_it[improved]
        best_pred[improved] = preds[improved]
    return [
        AttackResult(best_x[i], bool(best_pred[i] != y[i]), float(best_loss[i]), traces[i], int(best_pred[i]))
        for i in range(len(y))
    ]


def test_healthy_run_has_empty_bitmask(attack_batch, small_trained_cnn):
    x, y = attack_batch
    correct = small_trained_cnn.predict(x) == y
    xs, ys = x[correct][:20], y[correct][:20]
    cfg = AttackConfig(eps=2.0, norm=2, n_iter=40, step_size=2.5 * 2.0 / 40)
    for i, res in enumerate(pgd_attack(small_trained_cnn, xs, ys, cfg)):
        flags = audit(res.trace, res, res.trace.clean_prediction, ys[i], cfg)
        assert flags["I1"] is False
        assert flags["I2"] is False
        assert flags["I5"] is False
        assert flags["MALFORMED"] is False
        assert flags["I6"] is None  # no ensemble context


def test_i1_silent_success():
    # clean prediction 3 is already wrong for label 7, yet the attack handed
    # back a point classified as 7 again: the success was silently lost
    trace = AttackTrace(clean_prediction=3, initial_loss=0.5, initial_grad_norm=1.0)
    trace.steps.append(TraceStep(0.6, 1.0, 0.1, 7))
    result = AttackResult(np.array([0.5]), success=False, loss=0.6, trace=trace, prediction=7)
    cfg = AttackConfig(eps=1.0)
    flags = audit(trace, result, clean_prediction=3, y=7, config=cfg)
    assert flags["I1"] is True
    healthy = audit(trace, result, clean_prediction=7, y=7, config=cfg)
    assert healthy["I1"] is False  # clean was right: nothing silently lost


def test_i2_broken_best_point(attack_batch, small_trained_cnn):
    x, y = attack_batch
    cfg = AttackConfig(eps=2.0, norm=2, n_iter=10, step_size=0.5)
    res = pgd_attack(small_trained_cnn, x[:5], y[:5], cfg)
    for i, r in enumerate(res):
        broken = copy.copy(r)
        broken.loss = r.trace.steps[-1].loss  # pretend the last iterate was returned
        flags = audit(r.trace, broken, r.trace.clean_prediction, y[i], cfg)
        expected = broken.loss < max(r.trace.losses())
        assert flags["I2"] == expected


def test_i3_saturated_softmax_and_i6_pairing(attack_batch, small_trained_cnn):
    x, y = attack_batch
    masked = saturated_copy(small_trained_cnn)
    correct = masked.predict(x) == y
    xs, ys = x[correct][:15], y[correct][:15]
    cfg = AttackConfig(eps=2.5, norm=2, n_iter=10, step_size=0.25)
    results = pgd_attack(masked, xs, ys, cfg)
    i3_hits = 0
    for i, r in enumerate(results):
        flags = audit(r.trace, r, r.trace.clean_prediction, ys[i], cfg)
        i3_hits += flags["I3"] is True
    assert i3_hits >= 0.9 * len(results)

    # paired black-box success on the same samples marks the masking signature
    sq = square_attack(masked.logits, xs, ys, AttackConfig(eps=2.5, norm=2, query_budget=300, seed=0))
    for i, r in enumerate(results):
        if sq[i].success and not r.success:
            context = {"apgd-cw": False, "apgd-dlr-targeted": False, "square": True}
            flags = audit(sq[i].trace, sq[i], sq[i].trace.clean_prediction, ys[i], cfg, ensemble_context=context)
            assert flags["I6"] is True
            break
    else:
        raise AssertionError("square never broke a sample PGD failed on")


def test_i4_three_iteration_budget(attack_batch, small_trained_cnn):
    x, y = attack_batch
    correct = small_trained_cnn.predict(x) == y
    xs, ys = x[correct][:15], y[correct][:15]
    cfg = AttackConfig(eps=2.0, norm=2, n_iter=3, step_size=0.05)
    hits = 0
    for i, r in enumerate(pgd_attack(small_trained_cnn, xs, ys, cfg)):
        flags = audit(r.trace, r, r.trace.clean_prediction, ys[i], cfg)
        hits += flags["I4"] is True
    assert hits >= 0.9 * len(ys)


def test_i5_disabled_projection(attack_batch, small_trained_cnn):
    x, y = attack_batch
    xs, ys = x[:10], y[:10]
    cfg = AttackConfig(eps=0.5, norm=2, n_iter=25, step_size=0.3)  # steps overshoot the ball
    hits = 0
    for i, r in enumerate(no_projection_pgd(small_trained_cnn, xs, ys, cfg)):
        flags = audit(r.trace, r, r.trace.clean_prediction, ys[i], cfg)
        hits += flags["I5"] is True
    assert hits >= 0.9 * len(ys)


def test_square_trace_skips_gradient_indicator(attack_batch, small_trained_cnn):
    x, y = attack_batch
    cfg = AttackConfig(eps=2.0, norm=2, query_budget=30, seed=0)
    res = square_attack(small_trained_cnn.logits, x[:5], y[:5], cfg)
    for i, r in enumerate(res):
        flags = audit(r.trace, r, r.trace.clean_prediction, y[i], cfg)
        assert flags["I3"] is None


def test_audit_is_read_only(attack_batch, small_trained_cnn):
    x, y = attack_batch
    cfg = AttackConfig(eps=1.0, norm=2, n_iter=5, step_size=0.2)
    r = pgd_attack(small_trained_cnn, x[:1], y[:1], cfg)[0]
    before = copy.deepcopy(r.trace)
    a = audit(r.trace, r, r.trace.clean_prediction, y[0], cfg)
    b = audit(r.trace, r, r.trace.clean_prediction, y[0], cfg)
    assert a == b
    assert r.trace.losses() == before.losses()
    assert r.trace.events == before.events


def test_malformed_trace_flagged_not_raised():
    trace = AttackTrace(clean_prediction=0, initial_loss=math.nan, initial_grad_norm=1.0)
    result = AttackResult(np.zeros(2), False, 0.0, trace, prediction=0)
    flags = audit(trace, result, 0, 0, AttackConfig(eps=1.0))
    assert flags["MALFORMED"] is True
    assert all(flags[k] is None for k in ("I1", "I2", "I3", "I4", "I5", "I6"))


def test_aggregate_counting_and_order_independence():
    empty = {k: False for k in ("I1", "I2", "I3", "I4", "I5", "I6")}
    empty["MALFORMED"] = False
    records = [AuditRecord(i, "pgd", 0.5, dict(empty)) for i in range(100)]
    records[17].flags = dict(empty, I4=True)
    report = aggregate(records)
    assert report.rate("I4") == 0.01
    assert report.rate("I1") == 0.0
    assert report.n_records == 100
    shuffled = aggregate(list(reversed(records)))
    assert shuffled.rates == report.rates

    all_empty = aggregate([AuditRecord(i, "pgd", 0.1, dict(empty)) for i in range(10)])
    assert all(v == 0.0 for v in all_empty.rates.values())


def test_report_json_shape():
    import json

    empty = {k: (False if k != "I6" else None) for k in ("I1", "I2", "I3", "I4", "I5", "I6")}
    empty["MALFORMED"] = False
    report = aggregate([AuditRecord(0, "pgd", 0.3, empty)], config_echo={"attack": "pgd"})
    payload = json.loads(report.to_json())
    assert payload["style"] == "IoAF-style"
    assert payload["indicators"]["I1"]["rate"] == 0.0
    assert payload["indicators"]["I6"]["applicable"] == 0
    assert payload["config"] == {"attack": "pgd"}

import numpy as np

from secsweep.attacks import (
    AttackConfig,
    apgd_attack,
    apgd_dlr_targeted,
    autoattack_ensemble,
    square_attack,
)


def test_union_rule_dominates_each_member(attack_batch, small_trained_cnn):
    x, y = attack_batch
    x, y = x[:40], y[:40]
    eps, p, n_iter, budget, seed = 1.5, 2, 20, 60, 0
    ens = autoattack_ensemble(small_trained_cnn, x, y, eps, p, n_iter=n_iter, query_budget=budget, seed=seed)
    ens_err = np.mean([r.success for r in ens])

    cfg = dict(eps=eps, norm=p, n_iter=n_iter, query_budget=budget, seed=seed)
    member_errs = [
        np.mean([r.success for r in apgd_attack(small_trained_cnn, x, y, AttackConfig(loss="cw", **cfg))]),
        np.mean([r.success for r in apgd_dlr_targeted(small_trained_cnn, x, y, AttackConfig(loss="dlr-targeted", **cfg))]),
        np.mean([r.success for r in square_attack(small_trained_cnn.logits, x, y, AttackConfig(**cfg))]),
    ]
    for err in member_errs:
        assert ens_err >= err - 1e-12


def test_clean_misclassified_shortcut(attack_batch, small_trained_cnn):
    x, y = attack_batch
    clean_pred = small_trained_cnn.predict(x)
    wrong = np.nonzero(clean_pred != y)[0]
    assert wrong.size > 0, "fixture model should misclassify something"
    ens = autoattack_ensemble(small_trained_cnn, x, y, 1.0, 2, n_iter=5, query_budget=10, seed=0)
    for i in wrong:
        r = ens[i]
        assert r.success
        assert r.broken_by == "clean"
        assert "silent-success-shortcut" in r.trace.events
        assert len(r.trace.steps) == 0  # zero attack iterations spent
        np.testing.assert_array_equal(r.x_adv, x[i])


def test_eps_zero_gives_clean_error_rate(attack_batch, small_trained_cnn):
    x, y = attack_batch
    x, y = x[:30], y[:30]
    ens = autoattack_ensemble(small_trained_cnn, x, y, 0.0, 2, n_iter=3, query_budget=5, seed=0)
    ens_err = np.mean([r.success for r in ens])
    clean_err = np.mean(small_trained_cnn.predict(x) != y)
    assert ens_err == clean_err


def test_member_attribution_and_flags(attack_batch, small_trained_cnn):
    x, y = attack_batch
    x, y = x[:25], y[:25]
    ens = autoattack_ensemble(small_trained_cnn, x, y, 2.0, 2, n_iter=15, query_budget=40, seed=0)
    for r in ens:
        if r.success:
            assert r.broken_by in ("clean", "apgd-cw", "apgd-dlr-targeted", "square")
            if r.broken_by not in (None, "clean"):
                assert r.member_success[r.broken_by] is True
        else:
            assert r.broken_by is None
            assert all(v is False for v in r.member_success.values())
            assert set(r.member_success) == {"apgd-cw", "apgd-dlr-targeted", "square"}


def test_sequential_stop_at_first_success(attack_batch, small_trained_cnn):
    x, y = attack_batch
    x, y = x[:25], y[:25]
    ens = autoattack_ensemble(small_trained_cnn, x, y, 2.0, 2, n_iter=15, query_budget=40, seed=0)
    for r in ens:
        if r.broken_by == "apgd-cw":
            # later members never ran for this sample
            assert "apgd-dlr-targeted" not in r.member_success
            assert "square" not in r.member_success

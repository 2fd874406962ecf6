"""Mask GD pipeline: decay closed form, binarization rules, divergence."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attnprune import (
    AttentionInstance,
    CalibrationSet,
    DivergenceError,
    PruneConfig,
    binarize,
    prune_mask_gd,
)
from conftest import make_calibration


def zero_weight_cal(n, d, k, seed=0):
    rng = np.random.default_rng(seed)
    insts = tuple(
        AttentionInstance(rng.normal(size=(n, d)), np.zeros((d, d)))
        for _ in range(k)
    )
    return CalibrationSet(insts)


def test_weight_decay_closed_form():
    # W = 0 kills the attention gradient, leaving the linear recurrence
    # M_t = (1 - eta*lambda_tilde/k)^t * ones
    n, d, k = 4, 3, 2
    cal = zero_weight_cal(n, d, k, seed=1)
    lam_ctrl = 0.05
    eta = 0.5
    epochs = 12
    cfg = PruneConfig(
        lambda_ctrl=lam_ctrl,
        rho=0.5,
        epochs=epochs,
        momentum=0.0,
        step_rule="fixed",
        step_value=eta,
    )
    res = prune_mask_gd(cal, cfg)
    lam_tilde = n * lam_ctrl
    factor = 1.0 - eta * lam_tilde / k
    assert np.allclose(res.real_mask, factor**epochs * np.ones((d, d)), rtol=1e-12)
    for t, entry in enumerate(res.loss_trace):
        assert entry.attn == 0.0
        expected_reg = 0.5 * lam_tilde * d * d * factor ** (2 * t)
        assert entry.reg == pytest.approx(expected_reg, rel=1e-12)


def test_trace_starts_at_initial_iterate():
    cal = make_calibration(4, 3, 2, seed=7)
    cfg = PruneConfig(epochs=3, momentum=0.0, step_rule="fixed", step_value=1e-3)
    res = prune_mask_gd(cal, cfg)
    assert len(res.loss_trace) == 3
    # all-ones start: reconstruction is exact, only regularization remains
    assert res.loss_trace[0].attn == 0.0


def test_rho_zero_keeps_everything():
    cal = make_calibration(3, 2, 1, seed=8)
    cfg = PruneConfig(rho=0.0, epochs=5, step_rule="fixed", step_value=1e-3)
    res = prune_mask_gd(cal, cfg)
    assert np.array_equal(res.binary_mask, np.ones((2, 2)))
    assert res.relative_errors == (0.0,)


def test_binarize_exact_zero_count():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(5, 5))
    for rho in (0.0, 0.2, 0.5, 0.84, 1.0):
        b = binarize(m, rho)
        assert int((b == 0).sum()) == int(np.floor(rho * 25))
        assert set(np.unique(b)) <= {0.0, 1.0}


def test_binarize_keeps_largest_entries():
    m = np.array([[4.0, 1.0], [3.0, 2.0]])
    b = binarize(m, 0.5)
    assert np.array_equal(b, np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_binarize_tie_rule_zeroes_earliest_flat_indices():
    m = np.ones((2, 2))
    b = binarize(m, 0.5)
    assert np.array_equal(b.ravel(), np.array([0.0, 0.0, 1.0, 1.0]))


def test_binarize_rejects_bad_rho():
    with pytest.raises(ValueError):
        binarize(np.ones((2, 2)), 1.2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_binarize_zero_sets_nest_as_rho_grows(seed, d):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d))
    prev = set()
    for rho in (0.0, 0.25, 0.5, 0.75, 1.0):
        zeros = set(map(tuple, np.argwhere(binarize(m, rho) == 0.0)))
        assert prev <= zeros
        prev = zeros


def test_divergence_raises_with_epoch():
    # fixed step with eta*lambda_tilde/k = 12 multiplies M by -11 each epoch
    n, d, k = 4, 2, 1
    cal = zero_weight_cal(n, d, k, seed=3)
    cfg = PruneConfig(
        lambda_ctrl=1.0,
        epochs=400,
        momentum=0.0,
        step_rule="fixed",
        step_value=3.0,
    )
    with np.errstate(over="ignore"), pytest.raises(DivergenceError) as exc:
        prune_mask_gd(cal, cfg)
    assert 0 < exc.value.epoch < 400
    assert np.isfinite(exc.value.mask_norm)


def test_step_cap_logged(caplog):
    cfg = PruneConfig(lambda_ctrl=1e-9, step_rule="inverse_lambda", step_value=0.1)
    with caplog.at_level(logging.WARNING, logger="attnprune.optimizer"):
        assert cfg.step_size() == 1e4
    assert any("capped" in rec.message for rec in caplog.records)


def test_inverse_lambda_step_rule():
    cfg = PruneConfig(lambda_ctrl=0.04, step_rule="inverse_lambda", step_value=0.1)
    assert cfg.step_size() == pytest.approx(2.5)
    cfg = PruneConfig(step_rule="fixed", step_value=0.37)
    assert cfg.step_size() == 0.37


def test_clamped_run_stays_in_unit_box():
    cal = make_calibration(4, 3, 2, seed=9)
    cfg = PruneConfig(
        lambda_ctrl=0.2, epochs=20, step_rule="fixed", step_value=1.0, clamp_mask=True
    )
    res = prune_mask_gd(cal, cfg)
    assert np.all(res.real_mask >= 0.0)
    assert np.all(res.real_mask <= 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        PruneConfig(rho=1.5)
    with pytest.raises(ValueError):
        PruneConfig(epochs=0)
    with pytest.raises(ValueError):
        PruneConfig(momentum=1.0)
    with pytest.raises(ValueError):
        PruneConfig(step_rule="adam")
    with pytest.raises(ValueError):
        PruneConfig(lambda_ctrl=-0.1)
    with pytest.raises(ValueError):
        PruneConfig(step_value=0.0)


def test_run_is_deterministic():
    cal = make_calibration(5, 3, 2, seed=10)
    cfg = PruneConfig(epochs=30, step_rule="fixed", step_value=0.05)
    a = prune_mask_gd(cal, cfg)
    b = prune_mask_gd(cal, cfg)
    assert np.array_equal(a.real_mask, b.real_mask)
    assert np.array_equal(a.binary_mask, b.binary_mask)
    assert a.relative_errors == b.relative_errors


def test_momentum_changes_trajectory():
    cal = make_calibration(5, 3, 2, seed=11)
    base = dict(epochs=15, step_rule="fixed", step_value=0.02)
    plain = prune_mask_gd(cal, PruneConfig(momentum=0.0, **base))
    heavy = prune_mask_gd(cal, PruneConfig(momentum=0.9, **base))
    assert not np.array_equal(plain.real_mask, heavy.real_mask)

import json
import math

import numpy as np
import pytest

from balancekit.nn import (
    Mlp,
    adam_init,
    adam_step,
    backward,
    backward_batch,
    categorical_sample,
    entropy,
    forward,
    forward_batch,
    load_checkpoint,
    log_prob,
    mlp_init,
    save_checkpoint,
    softmax,
)
from balancekit.rng import Rng

# -- init ---------------------------------------------------------------------


def test_init_deterministic():
    a = mlp_init(7, 14, 5)
    b = mlp_init(7, 14, 5)
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])
    c = mlp_init(8, 14, 5)
    assert any(not np.array_equal(a.params[k], c.params[k]) for k in a.params)


def test_init_biases_zero_and_weights_bounded():
    mlp = mlp_init(3, 10, 4)
    for name in ("b1", "b2", "b_logits", "b_value"):
        assert np.all(mlp.params[name] == 0.0)
    checks = {
        "w1": (10, 64),
        "w2": (64, 64),
        "w_logits": (64, 4),
        "w_value": (64, 1),
    }
    for name, (fan_in, fan_out) in checks.items():
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        w = mlp.params[name]
        assert w.shape == (fan_in, fan_out)
        assert np.all(np.abs(w) <= bound)
        assert np.abs(w).max() > 0.5 * bound  # actually spreads over the range


def test_init_rejects_bad_sizes():
    with pytest.raises(ValueError):
        mlp_init(1, 0, 4)


# -- forward ------------------------------------------------------------------


def test_forward_zero_weights_gives_zero_heads():
    mlp = mlp_init(0, 6, 3)
    for k in mlp.params:
        mlp.params[k][:] = 0.0
    logits, value, _ = forward(mlp, np.ones(6))
    assert np.all(logits == 0.0)
    assert value == 0.0
    assert np.allclose(softmax(logits), 1.0 / 3.0)


def test_forward_deterministic_and_batch_consistent():
    mlp = mlp_init(5, 8, 4)
    rng = Rng(9)
    X = np.array([[rng.uniform() for _ in range(8)] for _ in range(6)])
    l1, v1, _ = forward_batch(mlp, X)
    l2, v2, _ = forward_batch(mlp, X)
    np.testing.assert_array_equal(l1, l2)
    np.testing.assert_array_equal(v1, v2)
    # single-row and batched passes may take different BLAS paths; they
    # agree to rounding, and each shape is bitwise-repeatable on its own
    for i in range(6):
        li, vi, _ = forward(mlp, X[i])
        np.testing.assert_allclose(li, l1[i], rtol=1e-12)
        assert vi == pytest.approx(v1[i], rel=1e-12)


def test_forward_rejects_wrong_width():
    mlp = mlp_init(5, 8, 4)
    with pytest.raises(ValueError):
        forward(mlp, np.zeros(9))


# -- backward: finite-difference oracle ----------------------------------------


def loss_of(mlp, x, dlogits, dvalue):
    logits, value, _ = forward(mlp, x)
    return float(np.dot(dlogits, logits) + dvalue * value)


def test_gradient_check_100_random_triples():
    """Keystone: analytic gradients match central finite differences."""
    h = 1e-5
    worst = 0.0
    for trial in range(100):
        rng = Rng.for_purpose(1000 + trial, "grad")
        obs_size = 2 + rng.randrange(6)
        n_actions = 2 + rng.randrange(4)
        mlp = mlp_init(trial, obs_size, n_actions)
        x = np.array([2 * rng.uniform() - 1 for _ in range(obs_size)])
        dlogits = np.array([2 * rng.uniform() - 1 for _ in range(n_actions)])
        dvalue = 2 * rng.uniform() - 1
        _, _, cache = forward(mlp, x)
        grads = backward(mlp, cache, dlogits, dvalue)
        # probe a deterministic sample of coordinates in every buffer
        for name, p in mlp.params.items():
            flat = p.reshape(-1)
            gflat = grads[name].reshape(-1)
            idxs = range(0, flat.size, max(1, flat.size // 17))
            for i in idxs:
                keep = flat[i]
                flat[i] = keep + h
                up = loss_of(mlp, x, dlogits, dvalue)
                flat[i] = keep - h
                dn = loss_of(mlp, x, dlogits, dvalue)
                flat[i] = keep
                numeric = (up - dn) / (2 * h)
                denom = max(abs(numeric), abs(gflat[i]), 1e-8)
                worst = max(worst, abs(numeric - gflat[i]) / denom)
    assert worst < 1e-4, f"max relative error {worst}"


def test_backward_zero_cotangents_zero_grads():
    mlp = mlp_init(2, 7, 3)
    x = np.linspace(-1, 1, 7)
    _, _, cache = forward(mlp, x)
    grads = backward(mlp, cache, np.zeros(3), 0.0)
    for g in grads.values():
        assert np.all(g == 0.0)


def test_backward_head_separation():
    """Value cotangent alone leaves the logits head untouched (and the other
    way round); trunk gradients accumulate both paths."""
    mlp = mlp_init(4, 6, 3)
    x = np.linspace(-0.5, 0.5, 6)
    _, _, cache = forward(mlp, x)
    gv = backward(mlp, cache, np.zeros(3), 1.0)
    assert np.all(gv["w_logits"] == 0.0) and np.all(gv["b_logits"] == 0.0)
    assert np.any(gv["w_value"] != 0.0)
    gl = backward(mlp, cache, np.ones(3), 0.0)
    assert np.all(gl["w_value"] == 0.0) and np.all(gl["b_value"] == 0.0)
    both = backward(mlp, cache, np.ones(3), 1.0)
    np.testing.assert_allclose(both["w1"], gv["w1"] + gl["w1"], atol=1e-12)


def test_backward_batch_sums_singles():
    mlp = mlp_init(11, 5, 4)
    X = np.array([[0.1, -0.2, 0.3, 0.0, 1.0], [0.7, 0.7, -0.7, 0.2, -1.0]])
    D = np.array([[1.0, 0.0, -1.0, 0.5], [0.2, 0.3, 0.4, -0.6]])
    dv = np.array([0.5, -1.5])
    _, _, cache = forward_batch(mlp, X)
    batch = backward_batch(mlp, cache, D, dv)
    singles = {}
    for i in range(2):
        _, _, c = forward(mlp, X[i])
        g = backward(mlp, c, D[i], dv[i])
        for k, v in g.items():
            singles[k] = singles.get(k, 0) + v
    for k in batch:
        np.testing.assert_allclose(batch[k], singles[k], atol=1e-12)


# -- categorical head ----------------------------------------------------------


def test_uniform_logits_uniform_probs_and_entropy():
    logits = np.zeros(4)
    assert np.allclose(softmax(logits), 0.25)
    assert entropy(logits) == pytest.approx(math.log(4))
    assert log_prob(logits, 2) == pytest.approx(math.log(0.25))


def test_extreme_logits_stable():
    logits = np.array([1000.0, 0.0])
    p = softmax(logits)
    assert np.isfinite(p).all()
    assert p[0] == pytest.approx(1.0)
    idx, lp = categorical_sample(logits, Rng(4))
    assert idx == 0
    assert lp == pytest.approx(0.0)
    assert entropy(logits) >= 0.0


def test_softmax_sums_to_one():
    rng = Rng(11)
    for _ in range(200):
        logits = np.array([20 * rng.uniform() - 10 for _ in range(5)])
        assert abs(softmax(logits).sum() - 1.0) < 1e-12
        assert entropy(logits) >= 0.0


def test_sampling_frequencies_match_softmax():
    logits = np.array([0.3, -0.8, 1.2, 0.0])
    probs = softmax(logits)
    rng = Rng(2718)
    n = 100_000
    counts = np.zeros(4)
    for _ in range(n):
        idx, lp = categorical_sample(logits, rng)
        counts[idx] += 1
        assert lp == pytest.approx(math.log(probs[idx]))
    for k in range(4):
        sigma = math.sqrt(n * probs[k] * (1 - probs[k]))
        assert abs(counts[k] - n * probs[k]) < 3 * sigma


def test_sample_deterministic_in_rng_stream():
    logits = np.array([0.1, 0.2, 0.3])
    a = [categorical_sample(logits, Rng(5))[0] for _ in range(3)]
    b = [categorical_sample(logits, Rng(5))[0] for _ in range(3)]
    assert a == b


# -- optimizer -----------------------------------------------------------------


def test_adam_zero_gradient_no_change():
    mlp = mlp_init(6, 4, 3)
    before = {k: v.copy() for k, v in mlp.params.items()}
    opt = adam_init(mlp)
    adam_step(mlp, {k: np.zeros_like(v) for k, v in mlp.params.items()}, opt)
    for k in before:
        np.testing.assert_array_equal(mlp.params[k], before[k])
    assert opt.step == 1


def test_adam_constant_gradient_step_approaches_lr():
    mlp = mlp_init(6, 2, 2)
    opt = adam_init(mlp, lr=1e-3)
    grads = {k: np.ones_like(v) * 3.0 for k, v in mlp.params.items()}
    prev = mlp.params["w1"].copy()
    for _ in range(500):
        prev = mlp.params["w1"].copy()
        adam_step(mlp, grads, opt)
    delta = np.abs(prev - mlp.params["w1"])
    # bias-corrected ratio m/sqrt(v) -> 1 for a constant gradient
    np.testing.assert_allclose(delta, 1e-3, rtol=1e-3)
    assert opt.step == 500


def test_adam_first_step_closed_form():
    mlp = mlp_init(1, 2, 2)
    w0 = mlp.params["w1"].copy()
    opt = adam_init(mlp, lr=0.01)
    g = np.full_like(w0, 2.0)
    grads = {k: (g if k == "w1" else np.zeros_like(v)) for k, v in mlp.params.items()}
    adam_step(mlp, grads, opt)
    # m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps) = lr * sign(g)
    np.testing.assert_allclose(mlp.params["w1"], w0 - 0.01 * (2.0 / (2.0 + 1e-8)))


def test_adam_shape_mismatch_rejected():
    mlp = mlp_init(2, 3, 2)
    opt = adam_init(mlp)
    bad = {k: np.zeros_like(v) for k, v in mlp.params.items()}
    bad["w1"] = np.zeros((1, 1))
    with pytest.raises(ValueError):
        adam_step(mlp, bad, opt)
    with pytest.raises(ValueError):
        adam_step(mlp, {"w1": np.zeros(1)}, opt)


# -- checkpoints ---------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path):
    mlp = mlp_init(42, 14, 5)
    opt = adam_init(mlp)
    grads = {k: np.full_like(v, 0.125) for k, v in mlp.params.items()}
    adam_step(mlp, grads, opt)
    meta = {"game": "batkill", "version": 1, "algo": "ppo", "train_steps": 640}
    path = tmp_path / "model.json"
    save_checkpoint(path, mlp, opt, meta)
    loaded, lopt, lmeta = load_checkpoint(path)
    assert loaded.sizes == mlp.sizes
    for k in mlp.params:
        np.testing.assert_array_equal(loaded.params[k], mlp.params[k])
    assert lopt.step == 1 and lopt.lr == opt.lr
    for k in opt.m:
        np.testing.assert_array_equal(lopt.m[k], opt.m[k])
    assert lmeta == meta


def test_checkpoint_bytes_identical_for_identical_state(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    for p in (p1, p2):
        mlp = mlp_init(3, 9, 4)
        opt = adam_init(mlp)
        grads = {k: np.full_like(v, -0.5) for k, v in mlp.params.items()}
        adam_step(mlp, grads, opt)
        save_checkpoint(p, mlp, opt, {"game": "jungle", "version": 2})
    assert p1.read_bytes() == p2.read_bytes()


def test_checkpoint_rejects_foreign_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"kind": "other"}))
    with pytest.raises(ValueError):
        load_checkpoint(p)


def test_checkpoint_float_round_trip_is_exact(tmp_path):
    mlp = mlp_init(1, 2, 2)
    mlp.params["w1"][0, 0] = 1.0 / 3.0
    mlp.params["w1"][0, 1] = 1e-300
    p = tmp_path / "c.json"
    save_checkpoint(p, mlp)
    loaded, _, _ = load_checkpoint(p)
    assert loaded.params["w1"][0, 0] == 1.0 / 3.0
    assert loaded.params["w1"][0, 1] == 1e-300

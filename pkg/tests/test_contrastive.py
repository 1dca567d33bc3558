import math
import warnings

import numpy as np
import pytest

from doppel.architectures import build_architecture
from doppel.contrastive import (TrainConfig,
                                alignment_loss, alignment_loss_grad,
                                build_encoder, lr_at, total_loss,
                                total_loss_grad, train_toy, uniformity_loss,
                                uniformity_loss_grad)
from doppel.errors import DivergenceError
from doppel.synth import NyquistWarning

# Hand-computed oracle: k=2 antipodal unit vectors, t=2, squared pairwise
# distances {0, 0, 4, 4} -> log((2 + 2*exp(-8)) / 4)
UNIF_ANTIPODAL = math.log((2.0 + 2.0 * math.exp(-8.0)) / 4.0)


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def test_alignment_zero_for_identical():
    e = np.array([[0.6, 0.8], [1.0, 0.0]])
    assert alignment_loss(e, e) == 0.0


def test_alignment_hand_value():
    assert alignment_loss(np.array([[0.0, 0.0]]),
                          np.array([[3.0, 4.0]])) == pytest.approx(25.0)


def test_alignment_homogeneity():
    g = np.random.default_rng(0)
    e1, e2 = g.standard_normal((2, 5, 3))
    base = alignment_loss(e1, e2)
    assert alignment_loss(3 * e1, 3 * e2) == pytest.approx(9 * base)


def test_alignment_shape_mismatch():
    with pytest.raises(ValueError):
        alignment_loss(np.zeros((2, 3)), np.zeros((3, 3)))


def test_alignment_nonnegative_zero_iff_equal(rng):
    for _ in range(5):
        e1 = rng.standard_normal((6, 4))
        e2 = rng.standard_normal((6, 4))
        value = alignment_loss(e1, e2)
        assert value >= 0.0
        assert value > 0.0  # distinct rows: strictly positive


def test_uniformity_identical_rows_zero():
    e = np.tile([0.6, 0.8], (4, 1))
    assert uniformity_loss(e) == pytest.approx(0.0, abs=1e-12)


def test_uniformity_antipodal_hand_value():
    u = np.array([1.0, 0.0])
    value = uniformity_loss(np.stack([u, -u]), t=2.0)
    assert value == pytest.approx(UNIF_ANTIPODAL, abs=1e-12)


def test_uniformity_nonpositive_and_spread_ordering(rng):
    clustered = rng.normal(0, 0.01, (32, 8))
    clustered /= np.linalg.norm(clustered, axis=1, keepdims=True)
    spread = rng.standard_normal((32, 8))
    spread /= np.linalg.norm(spread, axis=1, keepdims=True)
    u_clustered = uniformity_loss(clustered)
    u_spread = uniformity_loss(spread)
    assert u_clustered <= 0.0 and u_spread <= 0.0
    assert u_spread < u_clustered


def test_uniformity_needs_two_rows():
    with pytest.raises(ValueError):
        uniformity_loss(np.ones((1, 4)))


def test_total_loss_zero_case():
    e = np.tile([1.0, 0.0], (2, 1))
    assert total_loss(e, e, TrainConfig()) == pytest.approx(0.0, abs=1e-12)


def test_total_loss_lambda_align_zero(rng):
    e1 = rng.standard_normal((6, 4))
    e2 = rng.standard_normal((6, 4))
    cfg = TrainConfig(lambda_align=0.0)
    expect = 0.5 * (uniformity_loss(e1) + uniformity_loss(e2))
    assert total_loss(e1, e2, cfg) == pytest.approx(expect)


def test_total_loss_recomposition(rng):
    e1 = rng.standard_normal((5, 3))
    e2 = rng.standard_normal((5, 3))
    cfg = TrainConfig(lambda_align=0.7, lambda_unif=1.3)
    expect = (0.7 * alignment_loss(e1, e2)
              + 1.3 * 0.5 * (uniformity_loss(e1) + uniformity_loss(e2)))
    assert total_loss(e1, e2, cfg) == pytest.approx(expect)


# ---------------------------------------------------------------------------
# Gradients vs central finite differences
# ---------------------------------------------------------------------------

def numeric_grad(fn, x, eps=1e-6):
    g = np.zeros_like(x)
    flat = x.ravel()
    out = g.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = fn()
        flat[i] = keep - eps
        lo = fn()
        flat[i] = keep
        out[i] = (hi - lo) / (2 * eps)
    return g


def rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


def test_alignment_grad_matches_fd(rng):
    e1 = rng.standard_normal((4, 3))
    e2 = rng.standard_normal((4, 3))
    _, g1, g2 = alignment_loss_grad(e1, e2)
    assert rel_err(g1, numeric_grad(lambda: alignment_loss(e1, e2), e1)) < 1e-6
    assert rel_err(g2, numeric_grad(lambda: alignment_loss(e1, e2), e2)) < 1e-6


def test_uniformity_grad_matches_fd(rng):
    e = rng.standard_normal((5, 3))
    _, g = uniformity_loss_grad(e)
    assert rel_err(g, numeric_grad(lambda: uniformity_loss(e), e)) < 1e-6


def test_total_grad_matches_fd_on_random_instances(rng):
    cfg = TrainConfig()
    for _ in range(10):
        e1 = rng.standard_normal((4, 3))
        e2 = rng.standard_normal((4, 3))
        _, _, _, g1, g2 = total_loss_grad(e1, e2, cfg)
        assert rel_err(g1, numeric_grad(
            lambda: total_loss(e1, e2, cfg), e1)) < 1e-4
        assert rel_err(g2, numeric_grad(
            lambda: total_loss(e1, e2, cfg), e2)) < 1e-4


@pytest.mark.parametrize("kind", ["linear", "mlp"])
def test_encoder_weight_grads_match_fd(kind, rng):
    cfg = TrainConfig()
    enc = build_encoder({"kind": kind, "hidden": 6, "embed_dim": 4}, 8, seed=3)
    x1 = rng.standard_normal((5, 8))
    x2 = rng.standard_normal((5, 8))

    def loss():
        e1, _ = enc.forward(x1)
        e2, _ = enc.forward(x2)
        return total_loss(e1, e2, cfg)

    e1, c1 = enc.forward(x1)
    e2, c2 = enc.forward(x2)
    _, _, _, g1, g2 = total_loss_grad(e1, e2, cfg)
    ga = enc.backward(c1, g1)
    gb = enc.backward(c2, g2)
    for name, param in enc.parameters.items():
        analytic = ga[name] + gb[name]
        numeric = numeric_grad(loss, param)
        assert rel_err(analytic, numeric) < 1e-4, (kind, name)


# ---------------------------------------------------------------------------
# LR schedule
# ---------------------------------------------------------------------------

def test_lr_schedule_drop_epochs():
    cfg = TrainConfig()  # 200 epochs, base 0.72
    assert cfg.base_lr == pytest.approx(0.72)
    assert lr_at(0, cfg) == pytest.approx(0.72)
    assert lr_at(154, cfg) == pytest.approx(0.72)
    assert lr_at(155, cfg) == pytest.approx(0.072)
    assert lr_at(169, cfg) == pytest.approx(0.072)
    assert lr_at(170, cfg) == pytest.approx(0.0072)
    assert lr_at(185, cfg) == pytest.approx(0.72e-3)
    assert lr_at(199, cfg) == pytest.approx(0.72e-3)


def test_lr_schedule_piecewise_constant_with_three_drops():
    cfg = TrainConfig()
    lrs = np.array([lr_at(e, cfg) for e in range(cfg.epochs)])
    assert np.all(np.diff(lrs) <= 0)
    drops = np.nonzero(np.diff(lrs) < 0)[0]
    assert len(drops) == 3
    for d in drops:
        assert lrs[d + 1] == pytest.approx(0.1 * lrs[d])


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(milestones=(0.9, 0.5))
    with pytest.raises(ValueError):
        TrainConfig(milestones=(0.5, 1.5))
    with pytest.raises(ValueError):
        TrainConfig(train_val_split=1.0)


def test_config_json_roundtrip():
    cfg = TrainConfig(epochs=12, batch_size=32)
    assert TrainConfig.from_json(cfg.to_json()) == cfg


# ---------------------------------------------------------------------------
# Toy trainer
# ---------------------------------------------------------------------------

TINY = dict(epochs=2, sounds_per_epoch=160, batch_size=8, data_parallel=1)


@pytest.fixture(scope="module")
def voice():
    return build_architecture("Voice")


def _run(voice, delta, seed=0, **overrides):
    cfg = TrainConfig(**{**TINY, **overrides})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NyquistWarning)
        return train_toy(voice, delta, cfg,
                         {"kind": "mlp", "hidden": 8, "embed_dim": 8},
                         seed=seed, duration_s=1.0)


def test_train_toy_delta_zero_alignment_is_zero(voice):
    _, trace = _run(voice, 0.0)
    for row in trace:
        assert row.align == pytest.approx(0.0, abs=1e-12)


def test_train_toy_deterministic(voice):
    _, t1 = _run(voice, 0.1)
    _, t2 = _run(voice, 0.1)
    assert [r.astuple() for r in t1] == [r.astuple() for r in t2]


def test_train_toy_trace_schema(voice):
    _, trace = _run(voice, 0.1)
    splits = [(r.epoch, r.split) for r in trace]
    assert splits == [(0, "train"), (0, "val"), (1, "train"), (1, "val")]
    assert all(math.isfinite(r.total) for r in trace)


def test_train_toy_divergence_detected(voice):
    with pytest.raises(DivergenceError), np.errstate(all="ignore"), \
            warnings.catch_warnings():
        warnings.simplefilter("ignore")
        # absurd LR scale overflows the weights to non-finite within epoch 1
        _run(voice, 0.1, lr_scale=1e300)

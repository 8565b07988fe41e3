import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nocturne.errors import ConfigurationError, SingleClass, TrainingDiverged
from nocturne.features import GLUCOSE
from nocturne.models.focal import (
    FocalLossParams, binary_cross_entropy, focal_loss, focal_loss_grad_logit, sigmoid,
)
from nocturne.models.forest import Forest, ForestConfig, forest_fit, forest_predict_proba
from nocturne.models.nets import (
    NetConfig, NetKind, init_params, l2_penalty, load_params, net_forward, net_loss_and_grad,
    save_params,
)
from nocturne.models.training import EarlyStopping, TrainConfig, fit_params, net_train
from nocturne.models.transfer import (
    FROZEN_KEYS, TRANSFER_FEATURES, TransferPlan, daily_summary, params_checksum,
    pretrain_glucose_lstm, transfer_build, transfer_finetune, transfer_loss_and_grad,
)

from gradcheck import gradient_error
from oracles import max_relative_error, numeric_gradient


# -- focal loss --------------------------------------------------------------

def test_focal_examples():
    assert focal_loss(0.5, True, FocalLossParams(1.0, 0.0)) == pytest.approx(0.693147, abs=1e-6)
    assert focal_loss(0.5, True, FocalLossParams(1.0, 2.0)) == pytest.approx(0.173287, abs=1e-6)
    assert focal_loss(1.0, True, FocalLossParams(1.0, 2.0)) <= 1e-6
    assert focal_loss(0.0, False, FocalLossParams(0.5, 0.0)) <= 1e-6


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=50), st.data())
def test_focal_gamma_zero_is_weighted_bce(ps, data):
    p = np.array(ps)
    y = np.array(data.draw(st.lists(st.booleans(), min_size=p.size, max_size=p.size)))
    assert np.allclose(focal_loss(p, np.ones_like(y), FocalLossParams(1.0, 0.0)),
                       binary_cross_entropy(p, np.ones_like(y)), rtol=0, atol=1e-12)
    assert np.allclose(focal_loss(p, np.zeros_like(y), FocalLossParams(0.0, 0.0)),
                       binary_cross_entropy(p, np.zeros_like(y)), rtol=0, atol=1e-12)
    assert np.allclose(focal_loss(p, y, FocalLossParams(0.5, 0.0)),
                       0.5 * binary_cross_entropy(p, y), rtol=0, atol=1e-12)


@given(st.floats(-8, 8), st.booleans(), st.floats(0.05, 0.95), st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0]))
def test_focal_logit_gradient_matches_difference(z, label, alpha, gamma):
    fp = FocalLossParams(alpha, gamma)
    h = 1e-6
    num = (focal_loss(sigmoid(z + h), label, fp) - focal_loss(sigmoid(z - h), label, fp)) / (2 * h)
    ana = float(focal_loss_grad_logit(sigmoid(z), label, fp))
    assert abs(ana - num) <= 1e-6 + 1e-5 * abs(num)


def test_focal_inverse_frequency_and_validation():
    fp = FocalLossParams.inverse_frequency([True, False, False, False])
    assert fp.alpha_pos == 0.75 and fp.gamma == 2.0
    with pytest.raises(ConfigurationError):
        FocalLossParams(-0.1, 2.0)
    with pytest.raises(ConfigurationError):
        FocalLossParams(0.5, -1.0)


# -- forest ------------------------------------------------------------------

def _separable(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-5, 5, size=(n, 2))
    y = x[:, 0] + x[:, 1] > 0
    # push every point at least 0.5 away from the boundary: margin 1.0
    shift = np.where(y, 0.5, -0.5)[:, None] / math.sqrt(2)
    return x + shift, y


def test_forest_separable_training_accuracy():
    x, y = _separable()
    f = forest_fit(x, y, ForestConfig(n_trees=50, seed=1))
    p = forest_predict_proba(f, x)
    assert np.all((p > 0.5) == y)


def test_forest_deterministic_across_workers():
    x, y = _separable(seed=3)
    a = forest_predict_proba(forest_fit(x, y, ForestConfig(n_trees=40, seed=7, workers=1)), x)
    b = forest_predict_proba(forest_fit(x, y, ForestConfig(n_trees=40, seed=7, workers=4)), x)
    c = forest_predict_proba(forest_fit(x, y, ForestConfig(n_trees=40, seed=8, workers=1)), x)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_forest_constant_feature_never_split():
    rng = np.random.default_rng(4)
    x = np.column_stack([rng.normal(size=150), np.full(150, 3.0), rng.normal(size=150)])
    y = x[:, 0] + 0.5 * rng.normal(size=150) > 0
    f = forest_fit(x, y, ForestConfig(n_trees=60, seed=0))
    assert 1 not in set(f.split_features().tolist())
    assert f.split_features().size > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_forest_probabilities_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(30, 3))
    y = rng.random(30) < 0.3
    y[:2] = [True, False]
    f = forest_fit(x, y, ForestConfig(n_trees=5, seed=seed))
    p = forest_predict_proba(f, rng.normal(size=(20, 3)) * 3)
    assert np.all((p >= 0) & (p <= 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["balanced", "none"]))
def test_forest_duplicate_point_never_lowers_own_probability(seed, weight):
    rng = np.random.default_rng(seed)
    # coarse grid values create identical points with conflicting labels
    x = rng.integers(0, 3, size=(25, 2)).astype(float)
    y = rng.random(25) < 0.4
    y[:2] = [True, False]
    i = int(rng.integers(0, 25))
    cfg = ForestConfig(n_trees=1, bootstrap=False, max_features="all", class_weight=weight, seed=seed)
    own = lambda f: float(forest_predict_proba(f, x[i:i + 1])[0]) if y[i] else \
        1.0 - float(forest_predict_proba(f, x[i:i + 1])[0])
    before = own(forest_fit(x, y, cfg))
    after = own(forest_fit(np.vstack([x, x[i]]), np.append(y, y[i]), cfg))
    assert after >= before - 1e-12


def test_forest_errors_and_persistence(tmp_path):
    x, y = _separable(n=40)
    with pytest.raises(SingleClass):
        forest_fit(x, np.ones(40, bool))
    with pytest.raises(ConfigurationError):
        forest_fit(x, y[:10])
    with pytest.raises(ConfigurationError):
        ForestConfig(n_trees=0)
    f = forest_fit(x, y, ForestConfig(n_trees=8, seed=2))
    f.save(tmp_path / "f.npz")
    g = Forest.load(tmp_path / "f.npz")
    assert forest_predict_proba(g, x).tobytes() == forest_predict_proba(f, x).tobytes()
    with pytest.raises(ConfigurationError):
        forest_predict_proba(f, x[:, :1])


# -- nets --------------------------------------------------------------------

@pytest.mark.parametrize("kind", list(NetKind))
def test_zero_params_give_half(kind):
    cfg = NetConfig(kind=kind, hidden=3, conv_filters=3, dense=4)
    params = {k: np.zeros_like(v) for k, v in init_params(cfg, 2, 2, 48, seed=0).items()}
    p = net_forward(cfg, params, np.zeros((5, 48, 2)), np.zeros((5, 2)))
    assert np.array_equal(p, np.full(5, 0.5))


@pytest.mark.parametrize("kind", list(NetKind))
def test_probabilities_strictly_inside(kind):
    cfg = NetConfig(kind=kind, hidden=3, conv_filters=3, dense=4)
    params = init_params(cfg, 2, 1, 48, seed=5)
    x = np.random.default_rng(0).normal(0, 50, size=(6, 48, 2))
    p = net_forward(cfg, params, x, np.ones((6, 1)))
    assert np.all((p > 0) & (p < 1))


@pytest.mark.parametrize("kind", list(NetKind))
def test_doubling_l2_increases_loss(kind):
    rng = np.random.default_rng(2)
    xt, xs, y = rng.normal(size=(4, 48, 2)), rng.normal(size=(4, 1)), np.array([1, 0, 1, 0], bool)
    fp = FocalLossParams(0.5, 2.0)
    base = NetConfig(kind=kind, hidden=3, conv_filters=3, dense=4, l2_lambda=0.01)
    params = init_params(base, 2, 1, 48, seed=1)
    doubled = NetConfig(kind=kind, hidden=3, conv_filters=3, dense=4, l2_lambda=0.02)
    lo = net_loss_and_grad(base, params, xt, xs, y, fp, False)[0]
    hi = net_loss_and_grad(doubled, params, xt, xs, y, fp, False)[0]
    assert hi > lo
    assert hi - lo == pytest.approx(l2_penalty(params, 0.01), rel=1e-9)


@pytest.mark.parametrize("kind", list(NetKind))
def test_shape_mismatch_raises(kind):
    cfg = NetConfig(kind=kind, hidden=3, conv_filters=3, dense=4)
    params = init_params(cfg, 2, 1, 48, seed=0)
    with pytest.raises(ConfigurationError):
        net_forward(cfg, params, np.zeros((3, 48, 3)), np.zeros((3, 1)))
    with pytest.raises(ConfigurationError):
        net_forward(cfg, params, np.zeros((3, 48, 2)), np.zeros((3, 2)))


@pytest.mark.parametrize("gamma", [0.0, 2.0])
@pytest.mark.parametrize("kind", list(NetKind))
def test_gradients_match_finite_differences(kind, gamma):
    worst = max(gradient_error(kind, seed, gamma) for seed in range(20))
    assert worst <= 1e-4


def test_params_round_trip(tmp_path):
    cfg = NetConfig(kind=NetKind.DAILY_CNN, conv_filters=3, dense=4)
    params = init_params(cfg, 2, 3, 48, seed=9)
    save_params(tmp_path / "p.npz", cfg.kind.value, params, {"note": "x"})
    loaded, meta = load_params(tmp_path / "p.npz")
    assert meta["kind"] == "daily-cnn" and meta["note"] == "x"
    assert set(loaded) == set(params)
    assert all(np.array_equal(loaded[k], params[k]) for k in params)


# -- training ----------------------------------------------------------------

def test_net_config_validation():
    with pytest.raises(ConfigurationError):
        NetConfig(hidden=0)
    with pytest.raises(ConfigurationError):
        TrainConfig(max_epochs=10, patience=11)


def test_early_stopping_counter():
    es = EarlyStopping(30)
    assert not any(es.update(e, 100.0 - e) for e in range(1, 101))
    es = EarlyStopping(30)
    losses = {1: 3.0, 2: 2.0}
    stopped = None
    for e in range(1, 101):
        if es.update(e, losses.get(e, 1.0)):
            stopped = e
            break
    assert stopped == 33 and es.best_epoch == 3


def _scripted_fit(val_curve, max_epochs=100, patience=30):
    """Run the training loop on a dummy quadratic with a scripted validation curve."""
    snapshots = {}
    epoch = {"n": 0}

    def loss_grad(p, batch, yb, need):
        return float((p["w"] ** 2).sum()), {"w": 2 * p["w"]}

    def val_loss(p, batch, yb):
        epoch["n"] += 1
        snapshots[epoch["n"]] = p["w"].copy()
        return val_curve(epoch["n"])

    y = np.array([True, False] * 10)
    params, hist = fit_params(loss_grad, val_loss, {"w": np.array([5.0, -3.0])}, ("w",),
                              (np.zeros((20, 1)),), y, TrainConfig(max_epochs, patience), 0.1, 4)
    return params, hist, snapshots


def test_training_runs_all_epochs_when_improving():
    _, hist, _ = _scripted_fit(lambda e: 1.0 / e)
    assert hist.stopped_epoch == 100 and hist.best_epoch == 100 and len(hist.val_loss) == 100


def test_training_stops_and_restores_best():
    params, hist, snaps = _scripted_fit(lambda e: {1: 3.0, 2: 2.0}.get(e, 1.0))
    assert hist.stopped_epoch == 33 and hist.best_epoch == 3
    assert np.array_equal(params["w"], snaps[3])
    assert not np.array_equal(params["w"], snaps[33])


def _toy_sequences(n=40, seed=0, channels=2, signal=2.0):
    rng = np.random.default_rng(seed)
    y = np.zeros(n, bool)
    y[: n // 3] = True
    rng.shuffle(y)
    xt = rng.normal(size=(n, 48, channels))
    xt[:, 36:, 0] -= signal * y[:, None]
    return xt, rng.normal(size=(n, 2)), y


def test_training_is_deterministic():
    xt, xs, y = _toy_sequences()
    cfg = NetConfig(kind=NetKind.DAILY_CNN, conv_filters=3, dense=4)
    tc = TrainConfig(max_epochs=5, patience=5, seed=3)
    a, ha = net_train(cfg, xt, xs, y, tc)
    b, hb = net_train(cfg, xt, xs, y, tc)
    assert all(a[k].tobytes() == b[k].tobytes() for k in a)
    assert ha.val_loss == hb.val_loss


def test_training_divergence_raises():
    xt, xs, y = _toy_sequences()
    cfg = NetConfig(kind=NetKind.CNN, conv_filters=3, dense=4)
    xt[0, 0, 0] = np.nan
    with pytest.raises(TrainingDiverged) as err:
        net_train(cfg, xt, xs, y, TrainConfig(max_epochs=3, patience=3))
    assert err.value.epoch == 1


def test_training_single_class_raises():
    xt, xs, _ = _toy_sequences()
    with pytest.raises(SingleClass):
        net_train(NetConfig(kind=NetKind.CNN), xt, xs, np.zeros(40, bool), TrainConfig(3, 3))


# -- transfer ----------------------------------------------------------------

@pytest.fixture(scope="module")
def pretrained():
    xt, _, y = _toy_sequences(n=40, seed=1, channels=1)
    params, _ = pretrain_glucose_lstm(xt, y, NetConfig(kind=NetKind.LSTM, hidden=4, dense=4),
                                      TrainConfig(max_epochs=3, patience=3))
    return params


def _transfer_inputs(n=40, seed=2):
    rng = np.random.default_rng(seed)
    names = list(TRANSFER_FEATURES) + ["extra"]
    y = np.zeros(n, bool)
    y[: n // 3] = True
    rng.shuffle(y)
    xt = rng.normal(size=(n, 48, len(names)))
    xt[:, 36:, names.index(GLUCOSE)] -= 2.0 * y[:, None]
    xt[:, :, 1] += 1.5 * y[:, None]
    return names, xt, y


def test_transfer_initial_prediction_and_freeze(pretrained):
    names, xt, y = _transfer_inputs()
    model = transfer_build(pretrained, TransferPlan(), names, seed=0)
    assert np.array_equal(model.predict_proba(xt), np.full(len(y), 0.5))
    before = model.frozen_checksum()
    assert before == params_checksum(pretrained, FROZEN_KEYS)
    tuned = transfer_finetune(model, xt, y, TrainConfig(max_epochs=40, patience=40, seed=1))
    assert tuned.frozen_checksum() == before
    assert params_checksum(pretrained, FROZEN_KEYS) == before
    hist = tuned.history
    assert hist.train_loss[hist.best_epoch - 1] < hist.initial_train_loss
    with pytest.raises(ValueError):
        tuned.frozen["lstm_W"][0, 0] = 1.0


def test_transfer_plan_errors(pretrained):
    names, _, _ = _transfer_inputs()
    with pytest.raises(ConfigurationError):
        TransferPlan(branch="bogus")
    with pytest.raises(ConfigurationError):
        TransferPlan(head_features=("heart_rate",))
    with pytest.raises(ConfigurationError):
        transfer_build(pretrained, TransferPlan(), [n for n in names if n != TRANSFER_FEATURES[3]])
    bad = dict(pretrained)
    bad.pop("lstm_U")
    with pytest.raises(ConfigurationError):
        transfer_build(bad, TransferPlan(), names)


@pytest.mark.parametrize("branch", ["aggregate", "sequence"])
def test_transfer_gradients(pretrained, branch):
    names, xt, y = _transfer_inputs(n=4, seed=5)
    xt = xt[:, :6]
    y = np.array([True, False, True, False])
    plan = TransferPlan(branch=branch, branch_size=3, dense=3, l2_lambda=0.05)
    model = transfer_build(pretrained, plan, names, seed=3)
    rng = np.random.default_rng(0)
    params = {k: v + rng.normal(0, 0.3, v.shape) for k, v in model.params.items()}
    emb, branch_in = model.inputs(xt)
    fp = FocalLossParams(0.4, 2.0)
    _, ana = transfer_loss_and_grad(plan, params, emb, branch_in, y, fp)
    num = numeric_gradient(lambda p: transfer_loss_and_grad(plan, p, emb, branch_in, y, fp, False)[0], params)
    assert set(ana) == set(params)
    assert max_relative_error(ana, num) <= 1e-4


def test_daily_summary_layout():
    x = np.arange(12, dtype=float).reshape(1, 4, 3)
    assert daily_summary(x).tolist() == [[4.5, 5.5, 6.5, 0, 1, 2, 9, 10, 11]]

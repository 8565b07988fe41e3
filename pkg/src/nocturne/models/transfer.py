"""Frozen glucose LSTM extended with a trainable branch for extra channels.

A glucose-only LSTM is first trained on a larger cohort. Its recurrent
weights are then frozen and its final hidden state becomes one half of a
new model; the other half summarises the remaining channels, either as
per-channel daily mean/min/max through a dense layer (default) or with a
second, trainable LSTM. A fresh dense head with a zero-initialised output
layer sits on top of the concatenation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..channels import GLUCOSE
from ..errors import ConfigurationError
from ..features import FeatureSetName, get_feature_set
from .focal import FocalLossParams, focal_loss, focal_loss_grad_logit, P_CLAMP, sigmoid
from .nets import (
    NetConfig, NetKind, head_backward, head_forward, l2_penalty, lstm_backward,
    lstm_forward, lstm_init,
)
from .training import TrainConfig, TrainHistory, fit_params, net_train

TRANSFER_FEATURES: tuple[str, ...] = get_feature_set(FeatureSetName.REDUCED).temporal_channels
FROZEN_KEYS = ("lstm_W", "lstm_U", "lstm_b")
BRANCHES = ("aggregate", "sequence")


@dataclass(frozen=True)
class TransferPlan:
    pretrain_channels: tuple[str, ...] = (GLUCOSE,)
    frozen_layer_ids: tuple[str, ...] = FROZEN_KEYS
    head_features: tuple[str, ...] = TRANSFER_FEATURES
    branch: str = "aggregate"
    branch_size: int = 16
    dense: int = 16
    l2_lambda: float = 1e-3
    learning_rate: float = 1e-3
    batch_size: int = 16

    def __post_init__(self):
        if tuple(self.pretrain_channels) != (GLUCOSE,):
            raise ConfigurationError("pretraining uses the glucose channel only")
        if tuple(self.frozen_layer_ids) != FROZEN_KEYS:
            raise ConfigurationError(f"frozen layers must be {FROZEN_KEYS}")
        if GLUCOSE not in self.head_features or len(set(self.head_features)) != len(self.head_features):
            raise ConfigurationError("head_features must be distinct and include glucose")
        if self.branch not in BRANCHES:
            raise ConfigurationError(f"branch must be one of {BRANCHES}")
        if min(self.branch_size, self.dense, self.batch_size) < 1 or self.l2_lambda < 0:
            raise ConfigurationError("invalid transfer layer sizes")

    @property
    def other_features(self) -> tuple[str, ...]:
        return tuple(f for f in self.head_features if f != GLUCOSE)

    @property
    def l2_keys(self) -> tuple[str, ...]:
        keys = ("dense_W", "out_W")
        return keys + (("branch_W",) if self.branch == "aggregate" else ())


def daily_summary(x) -> np.ndarray:
    """Per-channel mean, min and max over time: (B x T x C) -> (B x 3C)."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([x.mean(axis=1), x.min(axis=1), x.max(axis=1)], axis=1)


def params_checksum(params: dict, keys=None) -> str:
    """SHA-256 over the named tensors (sorted by key, shape and raw bytes)."""
    h = hashlib.sha256()
    for k in sorted(keys if keys is not None else params):
        a = np.ascontiguousarray(params[k], dtype=np.float64)
        h.update(k.encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def pretrain_glucose_lstm(x_glucose, y, cfg: NetConfig = NetConfig(kind=NetKind.LSTM),
                          tc: TrainConfig = TrainConfig()):
    """Train a plain LSTM on a single glucose channel (N x T x 1)."""
    x_glucose = np.asarray(x_glucose, dtype=float)
    if x_glucose.ndim != 3 or x_glucose.shape[2] != 1:
        raise ConfigurationError(f"pretraining expects N x T x 1 glucose input, got {x_glucose.shape}")
    if NetKind(cfg.kind) is not NetKind.LSTM:
        raise ConfigurationError("the pretrained backbone must be a plain LSTM")
    return net_train(cfg, x_glucose, np.zeros((x_glucose.shape[0], 0)), y, tc)


@dataclass
class TransferModel:
    plan: TransferPlan
    frozen: dict
    params: dict
    glucose_index: int
    other_index: tuple[int, ...]
    history: TrainHistory | None = field(default=None, compare=False)

    @property
    def hidden(self) -> int:
        return self.frozen["lstm_U"].shape[0]

    def frozen_checksum(self) -> str:
        return params_checksum(self.frozen, FROZEN_KEYS)

    def inputs(self, x_temporal) -> tuple[np.ndarray, np.ndarray]:
        """Frozen glucose embedding and branch input for each row."""
        x = np.asarray(x_temporal, dtype=float)
        emb, _ = lstm_forward(x[:, :, [self.glucose_index]], *(self.frozen[k] for k in FROZEN_KEYS))
        other = x[:, :, list(self.other_index)]
        return emb, (daily_summary(other) if self.plan.branch == "aggregate" else other)

    def predict_proba(self, x_temporal) -> np.ndarray:
        emb, branch_in = self.inputs(x_temporal)
        return np.clip(sigmoid(_logits(self.plan, self.params, emb, branch_in)[0]), P_CLAMP, 1.0 - P_CLAMP)


def _logits(plan: TransferPlan, params: dict, emb, branch_in):
    if plan.branch == "aggregate":
        zb = branch_in @ params["branch_W"] + params["branch_b"]
        hb = np.maximum(zb, 0.0)
        b_cache = (branch_in, zb)
    else:
        hb, b_cache = lstm_forward(branch_in, params["branch_lstm_W"], params["branch_lstm_U"],
                                   params["branch_lstm_b"])
    logit, h_cache = head_forward(params, np.concatenate([emb, hb], axis=1))
    return logit, (b_cache, h_cache, emb.shape[1])


def transfer_loss_and_grad(plan: TransferPlan, params: dict, emb, branch_in, y,
                           focal: FocalLossParams, need_grad: bool = True):
    """Mean focal loss plus L2, with gradients for the trainable tensors only."""
    logit, (b_cache, h_cache, n_emb) = _logits(plan, params, emb, branch_in)
    p = sigmoid(logit)
    y = np.asarray(y, dtype=bool)
    loss = float(focal_loss(p, y, focal).mean()) + l2_penalty(params, plan.l2_lambda, plan.l2_keys)
    if not need_grad:
        return loss, None
    grads, de = head_backward(params, h_cache, focal_loss_grad_logit(p, y, focal) / y.size)
    dhb = de[:, n_emb:]
    if plan.branch == "aggregate":
        x_b, zb = b_cache
        dzb = dhb * (zb > 0)
        grads["branch_W"] = x_b.T @ dzb
        grads["branch_b"] = dzb.sum(axis=0)
    else:
        for k, g in lstm_backward(b_cache, dhb).items():
            grads["branch_" + k] = g
    for k in plan.l2_keys:
        grads[k] = grads[k] + 2.0 * plan.l2_lambda * params[k]
    return loss, grads


def transfer_build(pretrained: dict, plan: TransferPlan, temporal_names, seed: int = 0) -> TransferModel:
    """Assemble a transfer model on top of a pretrained glucose LSTM.

    ``temporal_names`` are the channels of the design matrix the model will
    consume; every planned feature must be present. The frozen tensors are
    copied, and the output layer starts at zero so every initial
    prediction is exactly 0.5.
    """
    names = list(temporal_names)
    missing = [f for f in plan.head_features if f not in names]
    if missing:
        raise ConfigurationError(f"transfer features absent from the design matrix: {missing}")
    for k in FROZEN_KEYS:
        if k not in pretrained:
            raise ConfigurationError(f"pretrained parameters lack {k!r}")
    if pretrained["lstm_W"].shape[0] != 1:
        raise ConfigurationError("the pretrained LSTM must take exactly one (glucose) input channel")
    frozen = {k: np.array(pretrained[k], dtype=float, copy=True) for k in FROZEN_KEYS}
    for a in frozen.values():
        a.setflags(write=False)
    hidden = frozen["lstm_U"].shape[0]
    n_other = len(plan.other_features)

    rng = np.random.default_rng(seed)
    if plan.branch == "aggregate":
        lim = np.sqrt(6.0 / (3 * n_other + plan.branch_size))
        params = {"branch_W": rng.uniform(-lim, lim, (3 * n_other, plan.branch_size)),
                  "branch_b": np.zeros(plan.branch_size)}
    else:
        params = {"branch_" + k: v for k, v in lstm_init(rng, n_other, plan.branch_size).items()}
    n_in = hidden + plan.branch_size
    lim = np.sqrt(6.0 / (n_in + plan.dense))
    params.update({
        "dense_W": rng.uniform(-lim, lim, (n_in, plan.dense)),
        "dense_b": np.zeros(plan.dense),
        "out_W": np.zeros((plan.dense, 1)),
        "out_b": np.zeros(1),
    })
    return TransferModel(plan, frozen, params, names.index(GLUCOSE),
                         tuple(names.index(f) for f in plan.other_features))


def transfer_finetune(model: TransferModel, x_temporal, y, tc: TrainConfig = TrainConfig(),
                      focal: FocalLossParams | None = None) -> TransferModel:
    """Train the branch and head; the frozen tensors are never written."""
    y = np.asarray(y, dtype=bool)
    if focal is None:
        focal = FocalLossParams.inverse_frequency(y, tc.gamma)
    plan = model.plan
    emb, branch_in = model.inputs(x_temporal)

    def loss_grad(p, batch, yb, need):
        return transfer_loss_and_grad(plan, p, batch[0], batch[1], yb, focal, need)

    def val_loss(p, batch, yb):
        return float(focal_loss(sigmoid(_logits(plan, p, batch[0], batch[1])[0]), yb, focal).mean())

    params, hist = fit_params(loss_grad, val_loss, model.params, tuple(model.params),
                              (emb, branch_in), y, tc, plan.learning_rate, plan.batch_size)
    return TransferModel(plan, model.frozen, params, model.glucose_index, model.other_index, hist)

"""Mini-batch Adam with early stopping on an inner validation split."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ConfigurationError, SingleClass, TrainingDiverged
from .focal import FocalLossParams, focal_loss
from .nets import NetConfig, init_params, net_forward, net_loss_and_grad


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 100
    patience: int = 30
    inner_val_fraction: float = 0.2
    seed: int = 0
    gamma: float = 2.0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be >= 1")
        if not 1 <= self.patience <= self.max_epochs:
            raise ConfigurationError("patience must lie in [1, max_epochs]")
        if not 0 < self.inner_val_fraction < 1:
            raise ConfigurationError("inner_val_fraction must lie in (0, 1)")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    initial_train_loss: float = float("nan")

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch - 1]


class EarlyStopping:
    """Patience counter over a monitored loss; epochs are numbered from 1.

    ``update`` returns True when training should stop. Only a strict
    decrease counts as an improvement.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, loss: float) -> bool:
        if loss < self.best:
            self.best, self.best_epoch, self.wait = loss, epoch, 0
            return False
        self.wait += 1
        return self.wait >= self.patience


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict = {}
        self.v: dict = {}
        self.t = 0

    def step(self, params: dict, grads: dict, keys) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for k in keys:
            g = grads[k]
            m = self.m.get(k)
            if m is None:
                m = self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            v = self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def stratified_holdout(y, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into (train, val) keeping the class ratio.

    Each class contributes ``round(fraction * n_c)`` validation rows, at
    least one when the class has two or more members and never all of them.
    """
    y = np.asarray(y, dtype=bool)
    train, val = [], []
    for cls in (False, True):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        n_val = int(round(fraction * idx.size))
        if idx.size >= 2:
            n_val = min(max(n_val, 1), idx.size - 1)
        else:
            n_val = 0
        val.append(idx[:n_val])
        train.append(idx[n_val:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


LossGrad = Callable[[dict, tuple, np.ndarray, bool], tuple]


def fit_params(loss_grad: LossGrad, val_loss: Callable[[dict, tuple, np.ndarray], float],
               params: dict, trainable, inputs: tuple, y, tc: TrainConfig,
               learning_rate: float, batch_size: int) -> tuple[dict, TrainHistory]:
    """Generic optimisation loop shared by every network.

    ``inputs`` is a tuple of arrays indexed along axis 0. Only keys in
    ``trainable`` are updated. Returns the parameters of the epoch with the
    lowest validation loss.
    """
    y = np.asarray(y, dtype=bool)
    if y.all() or not y.any():
        raise SingleClass("training data must contain both classes")
    rng = np.random.default_rng(np.random.SeedSequence([tc.seed, 1]))
    tr, va = stratified_holdout(y, tc.inner_val_fraction, rng)
    x_tr = tuple(a[tr] for a in inputs)
    x_va = tuple(a[va] for a in inputs)
    y_tr, y_va = y[tr], y[va]

    params = {k: np.array(v, dtype=float, copy=True) for k, v in params.items()}
    trainable = tuple(trainable)
    opt = Adam(learning_rate)
    stopper = EarlyStopping(tc.patience)
    hist = TrainHistory()
    best = {k: v.copy() for k, v in params.items()}
    n = y_tr.size
    hist.initial_train_loss = float(loss_grad(params, x_tr, y_tr, False)[0])
    for epoch in range(1, tc.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            b = order[start:start + batch_size]
            loss, grads = loss_grad(params, tuple(a[b] for a in x_tr), y_tr[b], True)
            if not np.isfinite(loss) or not all(np.isfinite(grads[k]).all() for k in trainable):
                raise TrainingDiverged(epoch)
            total += loss * b.size
            opt.step(params, grads, trainable)
        hist.train_loss.append(total / n)
        vl = val_loss(params, x_va, y_va) if y_va.size else hist.train_loss[-1]
        if not np.isfinite(vl):
            raise TrainingDiverged(epoch)
        hist.val_loss.append(float(vl))
        stop = stopper.update(epoch, vl)
        if stopper.best_epoch == epoch:
            best = {k: v.copy() for k, v in params.items()}
        hist.stopped_epoch = epoch
        if stop:
            break
    hist.best_epoch = stopper.best_epoch
    return best, hist


def net_train(cfg: NetConfig, x_temporal, x_static, y, tc: TrainConfig = TrainConfig(),
              focal: FocalLossParams | None = None, params: dict | None = None):
    """Train a network from scratch (or from ``params``) with focal loss.

    ``focal`` defaults to ``alpha_pos = N_neg / N`` over the supplied rows
    and ``gamma = tc.gamma``. The monitored quantity is the mean focal loss
    on the inner validation rows.
    """
    xt = np.asarray(x_temporal, dtype=float)
    xs = np.asarray(x_static, dtype=float)
    y = np.asarray(y, dtype=bool)
    if focal is None:
        focal = FocalLossParams.inverse_frequency(y, tc.gamma)
    if params is None:
        params = init_params(cfg, xt.shape[2], xs.shape[1], xt.shape[1], seed=tc.seed)

    def loss_grad(p, batch, yb, need):
        return net_loss_and_grad(cfg, p, batch[0], batch[1], yb, focal, need)

    def val_loss(p, batch, yb):
        return float(focal_loss(net_forward(cfg, p, batch[0], batch[1]), yb, focal).mean())

    return fit_params(loss_grad, val_loss, params, tuple(params), (xt, xs), y, tc,
                      cfg.learning_rate, cfg.batch_size)

"""Small recurrent and convolutional classifiers with hand-written backprop.

Every network maps a batch of day windows ``x_temporal`` (B x T x C_t)
and static vectors ``x_static`` (B x C_s) to a positive-class probability:

* ``LSTM`` / ``CNN`` append the static vector to every time step as extra
  constant channels and embed the sequence;
* ``DAILY_LSTM`` / ``DAILY_CNN`` embed the temporal block alone and
  concatenate the static vector to the embedding.

The embedding then passes through ``dense(ReLU) -> dense(1) -> sigmoid``.
Parameters live in a flat ``dict[str, ndarray]`` of float64 arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numba
import numpy as np

from ..errors import ConfigurationError
from .focal import FocalLossParams, focal_loss, focal_loss_grad_logit, P_CLAMP, sigmoid

FORMAT_VERSION = 1
L2_KEYS = ("dense_W", "out_W")


class NetKind(str, Enum):
    LSTM = "lstm"
    CNN = "cnn"
    DAILY_LSTM = "daily-lstm"
    DAILY_CNN = "daily-cnn"

    @property
    def recurrent(self) -> bool:
        return self in (NetKind.LSTM, NetKind.DAILY_LSTM)

    @property
    def daily(self) -> bool:
        return self in (NetKind.DAILY_LSTM, NetKind.DAILY_CNN)


@dataclass(frozen=True)
class NetConfig:
    kind: NetKind = NetKind.LSTM
    hidden: int = 32
    conv_filters: int = 16
    conv_kernel: int = 3
    dense: int = 16
    l2_lambda: float = 1e-3
    learning_rate: float = 1e-3
    batch_size: int = 16

    def __post_init__(self):
        object.__setattr__(self, "kind", NetKind(self.kind))
        for name in ("hidden", "conv_filters", "conv_kernel", "dense", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.l2_lambda < 0:
            raise ConfigurationError("l2_lambda must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be > 0")

    def embedding_size(self, n_static: int) -> int:
        base = self.hidden if self.kind.recurrent else self.conv_filters
        return base + (n_static if self.kind.daily else 0)

    def sequence_channels(self, n_temporal: int, n_static: int) -> int:
        return n_temporal if self.kind.daily else n_temporal + n_static

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def _glorot(rng, fan_in, fan_out, shape=None):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape or (fan_in, fan_out))


def lstm_init(rng, n_in: int, hidden: int) -> dict:
    b = np.zeros(4 * hidden)
    b[hidden:2 * hidden] = 1.0  # forget-gate bias
    return {
        "lstm_W": _glorot(rng, n_in, 4 * hidden),
        "lstm_U": _glorot(rng, hidden, 4 * hidden),
        "lstm_b": b,
    }


def head_init(rng, n_in: int, dense: int) -> dict:
    return {
        "dense_W": _glorot(rng, n_in, dense),
        "dense_b": np.zeros(dense),
        "out_W": _glorot(rng, dense, 1),
        "out_b": np.zeros(1),
    }


def init_params(cfg: NetConfig, n_temporal: int, n_static: int, n_steps: int = 48,
                seed: int = 0) -> dict:
    """Glorot-uniform weights, zero biases, forget-gate bias 1."""
    if n_temporal < 1:
        raise ConfigurationError("at least one temporal channel is required")
    if not cfg.kind.recurrent and n_steps < cfg.conv_kernel:
        raise ConfigurationError(f"{n_steps} steps is shorter than kernel {cfg.conv_kernel}")
    rng = np.random.default_rng(seed)
    c = cfg.sequence_channels(n_temporal, n_static)
    if cfg.kind.recurrent:
        params = lstm_init(rng, c, cfg.hidden)
    else:
        k, f = cfg.conv_kernel, cfg.conv_filters
        params = {"conv_K": _glorot(rng, k * c, f, (k, c, f)), "conv_b": np.zeros(f)}
    params.update(head_init(rng, cfg.embedding_size(n_static), cfg.dense))
    return params


# -- building blocks ---------------------------------------------------------

@numba.njit(inline="always")
def _tanh(v):
    # exp-based form; absolute error stays at rounding level and is faster
    # than the libm tanh inside the compiled loop
    e = math.exp(-2.0 * abs(v))
    r = (1.0 - e) / (1.0 + e)
    return r if v >= 0 else -r


@numba.njit(inline="always")
def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


@numba.njit(cache=True, nogil=True)
def _lstm_steps(z, U, hs, cs, gates):
    # time-major: z is T x B x 4H, hs/cs are (T+1) x B x H
    t_len, bsz, h4 = z.shape
    H = h4 // 4
    for t in range(t_len):
        a = hs[t] @ U
        for b in range(bsz):
            for j in range(H):
                ig = _sig(a[b, j] + z[t, b, j])
                fg = _sig(a[b, H + j] + z[t, b, H + j])
                og = _sig(a[b, 2 * H + j] + z[t, b, 2 * H + j])
                cg = _tanh(a[b, 3 * H + j] + z[t, b, 3 * H + j])
                gates[t, b, j] = ig
                gates[t, b, H + j] = fg
                gates[t, b, 2 * H + j] = og
                gates[t, b, 3 * H + j] = cg
                c = fg * cs[t, b, j] + ig * cg
                cs[t + 1, b, j] = c
                hs[t + 1, b, j] = og * _tanh(c)


@numba.njit(cache=True, nogil=True)
def _lstm_steps_back(UT, cs, gates, dh, da_all):
    t_len, bsz, h4 = gates.shape
    H = h4 // 4
    dc = np.zeros((bsz, H))
    for t in range(t_len - 1, -1, -1):
        for b in range(bsz):
            for j in range(H):
                ig = gates[t, b, j]
                fg = gates[t, b, H + j]
                og = gates[t, b, 2 * H + j]
                cg = gates[t, b, 3 * H + j]
                tc = _tanh(cs[t + 1, b, j])
                d = dc[b, j] + dh[b, j] * og * (1.0 - tc * tc)
                da_all[t, b, j] = d * cg * ig * (1.0 - ig)
                da_all[t, b, H + j] = d * cs[t, b, j] * fg * (1.0 - fg)
                da_all[t, b, 2 * H + j] = dh[b, j] * tc * og * (1.0 - og)
                da_all[t, b, 3 * H + j] = d * ig * (1.0 - cg * cg)
                dc[b, j] = d * fg
        dh = da_all[t] @ UT


def lstm_forward(x, W, U, b):
    """Run an LSTM over ``x`` (B x T x C); gate order is input, forget, output, candidate.

    Returns the final hidden state and a cache for :func:`lstm_backward`.
    """
    bsz, t_len, _ = x.shape
    h_dim = U.shape[0]
    xt = np.ascontiguousarray(x.transpose(1, 0, 2))
    z = (xt.reshape(t_len * bsz, -1) @ W + b).reshape(t_len, bsz, -1)
    hs = np.zeros((t_len + 1, bsz, h_dim))
    cs = np.zeros((t_len + 1, bsz, h_dim))
    gates = np.empty((t_len, bsz, 4 * h_dim))
    _lstm_steps(z, np.ascontiguousarray(U), hs, cs, gates)
    return hs[-1].copy(), (xt, U, hs, cs, gates)


def lstm_backward(cache, dh):
    """Backpropagation through time from a gradient on the final hidden state."""
    xt, U, hs, cs, gates = cache
    c_in = xt.shape[2]
    h_dim = U.shape[0]
    da_all = np.empty_like(gates)
    _lstm_steps_back(np.ascontiguousarray(U.T), cs, gates, np.ascontiguousarray(dh), da_all)
    flat_da = da_all.reshape(-1, 4 * h_dim)
    return {
        "lstm_W": xt.reshape(-1, c_in).T @ flat_da,
        "lstm_U": hs[:-1].reshape(-1, h_dim).T @ flat_da,
        "lstm_b": flat_da.sum(axis=0),
    }


def conv_forward(x, K, b):
    """Valid 1-D convolution, ReLU and global max pooling over time."""
    k, c_in, n_f = K.shape
    length = x.shape[1] - k + 1
    cols = np.concatenate([x[:, j:j + length] for j in range(k)], axis=2)
    conv = cols @ K.reshape(k * c_in, n_f) + b
    act = np.maximum(conv, 0.0)
    arg = act.argmax(axis=1)
    pooled = np.take_along_axis(act, arg[:, None, :], axis=1)[:, 0]
    return pooled, (cols, K.shape, conv, arg)


def conv_backward(cache, dpool):
    cols, k_shape, conv, arg = cache
    bsz, length, n_f = conv.shape
    dconv = np.zeros_like(conv)
    np.put_along_axis(dconv, arg[:, None, :], dpool[:, None, :], axis=1)
    dconv *= conv > 0
    flat = dconv.reshape(-1, n_f)
    return {
        "conv_K": (cols.reshape(bsz * length, -1).T @ flat).reshape(k_shape),
        "conv_b": flat.sum(axis=0),
    }


def head_forward(params, e):
    z1 = e @ params["dense_W"] + params["dense_b"]
    a1 = np.maximum(z1, 0.0)
    logit = (a1 @ params["out_W"] + params["out_b"])[:, 0]
    return logit, (e, z1, a1)


def head_backward(params, cache, dlogit):
    e, z1, a1 = cache
    dz2 = dlogit[:, None]
    da1 = dz2 @ params["out_W"].T
    dz1 = da1 * (z1 > 0)
    grads = {
        "out_W": a1.T @ dz2,
        "out_b": dz2.sum(axis=0),
        "dense_W": e.T @ dz1,
        "dense_b": dz1.sum(axis=0),
    }
    return grads, dz1 @ params["dense_W"].T


def l2_penalty(params, lam: float, keys=L2_KEYS) -> float:
    return lam * sum(float(np.sum(params[k] ** 2)) for k in keys if k in params)


# -- whole networks ----------------------------------------------------------

def _check_shapes(cfg: NetConfig, params, xt, xs):
    if xt.ndim != 3 or xs.ndim != 2 or xt.shape[0] != xs.shape[0]:
        raise ConfigurationError(f"bad batch shapes {xt.shape} and {xs.shape}")
    c = cfg.sequence_channels(xt.shape[2], xs.shape[1])
    if cfg.kind.recurrent:
        ok = "lstm_W" in params and params["lstm_W"].shape[0] == c
    else:
        ok = "conv_K" in params and params["conv_K"].shape[1] == c
    if not ok or params["dense_W"].shape[0] != cfg.embedding_size(xs.shape[1]):
        raise ConfigurationError(
            f"{cfg.kind.value} parameters do not match inputs with "
            f"{xt.shape[2]} temporal and {xs.shape[1]} static channels")


def _sequence(cfg: NetConfig, xt, xs):
    if cfg.kind.daily or xs.shape[1] == 0:
        return xt
    rep = np.broadcast_to(xs[:, None, :], (xs.shape[0], xt.shape[1], xs.shape[1]))
    return np.concatenate([xt, rep], axis=2)


def _logits(cfg: NetConfig, params, xt, xs):
    xt = np.asarray(xt, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if xt.ndim == 2:
        xt, xs = xt[None], xs.reshape(1, -1)
    _check_shapes(cfg, params, xt, xs)
    seq = _sequence(cfg, xt, xs)
    if cfg.kind.recurrent:
        emb, enc_cache = lstm_forward(seq, params["lstm_W"], params["lstm_U"], params["lstm_b"])
    else:
        emb, enc_cache = conv_forward(seq, params["conv_K"], params["conv_b"])
    e = np.concatenate([emb, xs], axis=1) if cfg.kind.daily else emb
    logit, head_cache = head_forward(params, e)
    return logit, (enc_cache, head_cache, emb.shape[1])


def net_forward(cfg: NetConfig, params, x_temporal, x_static) -> np.ndarray:
    """Positive-class probability per row, clamped to ``[1e-7, 1 - 1e-7]``."""
    logit, _ = _logits(cfg, params, x_temporal, x_static)
    return np.clip(sigmoid(logit), P_CLAMP, 1.0 - P_CLAMP)


def net_loss_and_grad(cfg: NetConfig, params, xt, xs, y, focal: FocalLossParams,
                      need_grad: bool = True):
    """Mean focal loss plus L2 on the dense weight matrices, and its gradient."""
    logit, (enc_cache, head_cache, n_emb) = _logits(cfg, params, xt, xs)
    p = sigmoid(logit)
    y = np.asarray(y, dtype=bool)
    loss = float(focal_loss(p, y, focal).mean()) + l2_penalty(params, cfg.l2_lambda)
    if not need_grad:
        return loss, None
    dlogit = focal_loss_grad_logit(p, y, focal) / y.size
    grads, de = head_backward(params, head_cache, dlogit)
    for k in L2_KEYS:
        grads[k] = grads[k] + 2.0 * cfg.l2_lambda * params[k]
    demb = de[:, :n_emb]
    if cfg.kind.recurrent:
        grads.update(lstm_backward(enc_cache, demb))
    else:
        grads.update(conv_backward(enc_cache, demb))
    return loss, grads


# -- persistence -------------------------------------------------------------

def save_params(path, kind: str, params: dict, meta: dict | None = None) -> None:
    """Write parameters as ``.npz``: one array per tensor (row-major), plus a
    JSON ``__meta__`` entry holding the format version, model kind and config.
    """
    header = {"format_version": FORMAT_VERSION, "kind": kind, **(meta or {})}
    np.savez(Path(path), __meta__=json.dumps(header, sort_keys=True), **params)


def load_params(path) -> tuple[dict, dict]:
    with np.load(Path(path)) as z:
        if "__meta__" not in z.files:
            raise ConfigurationError(f"{path}: missing parameter header")
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ConfigurationError(f"{path}: unsupported format version {meta.get('format_version')}")
        params = {k: z[k].copy() for k in z.files if k != "__meta__"}
    return params, meta

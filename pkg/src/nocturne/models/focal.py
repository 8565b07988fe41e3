"""Binary focal loss and its derivative with respect to the logit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

P_CLAMP = 1e-7


@dataclass(frozen=True)
class FocalLossParams:
    alpha_pos: float = 0.5
    gamma: float = 2.0

    def __post_init__(self):
        if not 0 <= self.alpha_pos <= 1:
            raise ConfigurationError("alpha_pos must lie in [0, 1]")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be >= 0")

    @classmethod
    def inverse_frequency(cls, y, gamma: float = 2.0) -> "FocalLossParams":
        """alpha_pos = N_neg / N, so the rarer class gets the larger weight."""
        y = np.asarray(y, dtype=bool)
        alpha = float((~y).sum()) / y.size
        return cls(alpha, gamma)


def _alpha_t(label, params: FocalLossParams):
    return np.where(label, params.alpha_pos, 1.0 - params.alpha_pos)


def focal_loss(p, label, params: FocalLossParams):
    """``-alpha_t * (1 - p_t)**gamma * log(p_t)``, elementwise.

    ``p`` is the predicted probability of the positive class, clamped to
    ``[1e-7, 1 - 1e-7]``; ``p_t`` is ``p`` for positives and ``1 - p`` for
    negatives.
    """
    p = np.clip(np.asarray(p, dtype=float), P_CLAMP, 1.0 - P_CLAMP)
    label = np.asarray(label, dtype=bool)
    pt = np.where(label, p, 1.0 - p)
    return _alpha_t(label, params) * (1.0 - pt) ** params.gamma * -np.log(pt)


def focal_loss_grad_logit(p, label, params: FocalLossParams):
    """d(focal loss)/d(logit) where ``p = sigmoid(logit)``.

    For a positive: ``alpha (1-p)^gamma (gamma p log p - (1-p))``;
    for a negative the mirror image with ``p -> 1-p`` and a sign flip.
    """
    p = np.clip(np.asarray(p, dtype=float), P_CLAMP, 1.0 - P_CLAMP)
    label = np.asarray(label, dtype=bool)
    g = params.gamma
    pos = params.alpha_pos * (1.0 - p) ** g * (g * p * np.log(p) - (1.0 - p))
    neg = (1.0 - params.alpha_pos) * p ** g * (p - g * (1.0 - p) * np.log(1.0 - p))
    return np.where(label, pos, neg)


def binary_cross_entropy(p, label):
    p = np.clip(np.asarray(p, dtype=float), P_CLAMP, 1.0 - P_CLAMP)
    label = np.asarray(label, dtype=bool)
    return -np.where(label, np.log(p), np.log(1.0 - p))


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out

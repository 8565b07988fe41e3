"""Classifiers: class-weighted forest, small LSTM/CNN nets and transfer models."""

from .focal import FocalLossParams, binary_cross_entropy, focal_loss, focal_loss_grad_logit, sigmoid
from .forest import ClassWeight, Forest, ForestConfig, MaxFeatures, forest_fit, forest_predict_proba
from .nets import NetConfig, NetKind, init_params, load_params, net_forward, net_loss_and_grad, save_params
from .training import EarlyStopping, TrainConfig, TrainHistory, net_train
from .transfer import (
    TRANSFER_FEATURES, TransferModel, TransferPlan, params_checksum, pretrain_glucose_lstm,
    transfer_build, transfer_finetune,
)

__all__ = [
    "ClassWeight", "EarlyStopping", "Forest", "ForestConfig", "FocalLossParams", "MaxFeatures",
    "NetConfig", "NetKind", "TRANSFER_FEATURES", "TrainConfig", "TrainHistory", "TransferModel",
    "TransferPlan", "binary_cross_entropy", "focal_loss", "focal_loss_grad_logit", "forest_fit",
    "forest_predict_proba", "init_params", "load_params", "net_forward", "net_loss_and_grad",
    "net_train", "params_checksum", "pretrain_glucose_lstm", "save_params", "sigmoid",
    "transfer_build", "transfer_finetune",
]

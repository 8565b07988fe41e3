"""Pretrain a glucose LSTM on an Ohio-like cohort and fine-tune a head on in-house-like nights.

A shortened schedule keeps the run near one minute.
Run: python demos/04_transfer.py
"""

from nocturne.evaluation import ModelKind, ModelSettings, render_table, run_experiment_on_matrix, run_transfer
from nocturne.features import build_design_matrix, get_feature_set
from nocturne.labeling import label_cohort
from nocturne.models.nets import NetConfig
from nocturne.models.training import TrainConfig
from nocturne.models.transfer import TransferPlan
from nocturne.synthgen import generate_cohort, get_profile

tc = TrainConfig(max_epochs=30, patience=10)
net = NetConfig(hidden=16, dense=8)
inhouse = generate_cohort(get_profile("inhouse-like", seed=3, nh_signal_strength=3.0))
ohio = generate_cohort(get_profile("ohio-like", seed=3, nh_signal_strength=3.0))
labels = label_cohort(inhouse)

transfer = run_transfer(ohio, inhouse, TransferPlan(), tc=tc, net=net, inhouse_labels=labels)
dm = build_design_matrix(inhouse, labels, get_feature_set("REDUCED"))
scratch = run_experiment_on_matrix(dm, ModelKind.LSTM, "REDUCED", settings=ModelSettings(net=net, train=tc))

print(render_table([transfer, scratch]), end="")
print(f"pretraining AUROC per seed: {transfer.extras['pretrain_auroc']}")
print(f"cells whose frozen tensors changed: {transfer.extras['frozen_changed']} of {transfer.n_cells}")

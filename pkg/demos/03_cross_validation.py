"""Cross-validate the forest against the constant baseline as the planted signal grows.

Run: python demos/03_cross_validation.py
"""

from nocturne.evaluation import ModelKind, ModelSettings, render_table, run_experiment_on_matrix
from nocturne.features import build_design_matrix, get_feature_set
from nocturne.labeling import label_cohort
from nocturne.models.forest import ForestConfig
from nocturne.synthgen import generate_cohort, get_profile

settings = ModelSettings(forest=ForestConfig(n_trees=300))
results = []
for strength in (0.0, 1.5, 3.0):
    cohort = generate_cohort(get_profile("inhouse-like", seed=11, nh_signal_strength=strength))
    dm = build_design_matrix(cohort, label_cohort(cohort), get_feature_set("GLUCOSE_PERSONALIZED"))
    label = f"signal {strength}"
    for kind in (ModelKind.RFC, ModelKind.CONSTANT):
        results.append(run_experiment_on_matrix(dm, kind, label, settings=settings))

print("mean ± std AUROC over 3 seeds x 5 folds")
print(render_table(results), end="")

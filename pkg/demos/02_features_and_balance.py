"""Build a design matrix, oversample the minority class and plot both in PCA space.

Run: python demos/02_features_and_balance.py [out_dir]
"""

import sys
from pathlib import Path

from nocturne.balance import AdasynConfig, balance_design_matrix, flatten_for_balance, pca2
from nocturne.features import Standardizer, build_design_matrix, get_feature_set
from nocturne.labeling import label_cohort
from nocturne.plots import pca_scatter
from nocturne.synthgen import generate_cohort, get_profile

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")
out.mkdir(parents=True, exist_ok=True)

cohort = generate_cohort(get_profile("inhouse-like", seed=7, nh_signal_strength=2.0))
spec = get_feature_set("GLUCOSE_PERSONALIZED")
dm = build_design_matrix(cohort, label_cohort(cohort), spec)
print(f"{spec.label}: temporal {dm.temporal_names}, {len(dm.static_names)} static features, {len(dm)} nights")

scaled = Standardizer.fit(dm).apply(dm)
balanced, synthetic = balance_design_matrix(scaled, AdasynConfig(seed=1))
print(f"ADASYN: {int(dm.y.sum())} positives of {len(dm)} -> {int(balanced.y.sum())} of {len(balanced)}")

_, coords = pca2(flatten_for_balance(balanced)[0])
n = pca_scatter(coords, balanced.y, synthetic, out / "pca_scatter.svg", out / "pca_scatter.csv")
print(f"wrote {n} points to {out / 'pca_scatter.svg'}")

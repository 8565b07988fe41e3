"""Generate a synthetic in-house-like cohort, label every night and look at one of them.

Run: python demos/01_cohort_and_labels.py
"""

from collections import Counter

from nocturne.labeling import label_cohort
from nocturne.synthgen import generate_cohort, get_profile

profile = get_profile("inhouse-like", seed=7, nh_signal_strength=2.0)
cohort = generate_cohort(profile)
labels = label_cohort(cohort)

print(f"{len(cohort.patients())} patients, {len(cohort.glucose)} glucose samples, {len(cohort.vitals)} vital samples")
positives = [l for l in labels if l.label]
print(f"{len(labels)} nights, {len(positives)} with nocturnal hypoglycaemia "
      f"(ratio 1:{(len(labels) - len(positives)) / max(len(positives), 1):.1f})")
print("triggers:", dict(Counter(l.trigger.value for l in labels)))
if positives:
    first = positives[0]
    print(f"first event: patient {first.patient_id}, night of {first.date}, trigger {first.trigger.value}")

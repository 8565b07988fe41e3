"""Nocturnal hypoglycaemia prediction from glucose, wearable and logbook data.

The package covers the full path from raw records to cross-validated
results: ingestion, synthetic cohorts, preprocessing onto a 15-minute grid,
night labelling, feature sets, ADASYN balancing, classifiers (forest,
LSTM/CNN variants, transfer models) and evaluation.
"""

__version__ = "0.1.0"

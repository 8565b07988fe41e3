"""Daily aggregates, personalised glucose and the seven feature sets.

A :class:`DesignMatrix` pairs a temporal block (nights x 48 x channels)
with a static block (nights x features). Static features come from three
places: daily aggregates of aligned channels (full day and 19:00-22:00
evening), per-day logbook totals, and patient metadata.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

import numpy as np

from .channels import GLUCOSE, HYPO_EVENT
from .errors import ConfigurationError, FeatureUndefined
from .ingest import PatientMeta, RawCohort
from .preprocess import CHANNEL_INDEX, AlignedDay, Imputation, align_cohort
from .timegrid import EVENING_STEPS, N_STEPS

log = logging.getLogger(__name__)

REGISTRY_VERSION = "1"


@dataclass(frozen=True)
class DailyAggregates:
    cv: float = 0.0
    liability_index: float = 0.0
    sd_first_diff: float = 0.0
    daily_min: float = 0.0
    evening_peak: float = 0.0
    evening_low: float = 0.0
    linreg_slope: float = 0.0
    defined: bool = False
    evening_defined: bool = False


def ols_slope(t: np.ndarray, g: np.ndarray) -> float:
    n = t.size
    denom = n * np.dot(t, t) - t.sum() ** 2
    if denom == 0:
        return 0.0
    return float((n * np.dot(t, g) - t.sum() * g.sum()) / denom)


def daily_aggregates(series, mask, evening: tuple[int, int] = EVENING_STEPS) -> DailyAggregates:
    """Glycemic-variability style summaries over the observed bins of one day.

    Only bins with ``mask`` true take part. With fewer than two observed bins
    everything is zero and ``defined`` is False; an evening range without
    observations zeroes the evening fields and clears ``evening_defined``.
    Standard deviations use the ``n - 1`` denominator; the regression time
    axis is the bin index.
    """
    series = np.asarray(series, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    steps = np.flatnonzero(mask)
    g = series[mask]
    n = g.size
    if n < 2:
        return DailyAggregates()

    mean = g.mean()
    sd = g.std(ddof=1)
    cv = float(sd / mean) if mean != 0 else 0.0
    diffs = np.diff(g)
    liability = float(np.sum(diffs ** 2) / 5.0)
    sd_diff = float(diffs.std(ddof=1)) if diffs.size >= 2 else 0.0
    slope = ols_slope(steps.astype(float), g)

    lo, hi = evening
    ev = series[lo:hi][mask[lo:hi]]
    if ev.size:
        peak, low, ev_ok = float(ev.max()), float(ev.min()), True
    else:
        peak, low, ev_ok = 0.0, 0.0, False
    return DailyAggregates(cv, liability, sd_diff, float(g.min()), peak, low, slope, True, ev_ok)


def personalize_glucose(g, meta: PatientMeta):
    """``g * (1 + (age + height + weight + bmi))`` with raw metadata units."""
    parts = (meta.age, meta.height, meta.weight, meta.bmi)
    if any(p is None for p in parts):
        raise FeatureUndefined(f"patient {meta.patient_id!r} lacks age/height/weight/bmi")
    return g * (1.0 + sum(parts))


def personalize_glucose_zscored(g, meta: PatientMeta, stats: dict[str, tuple[float, float]]):
    """Variant with each of age/height/weight/bmi z-scored across the cohort."""
    total = 0.0
    for name in ("age", "height", "weight", "bmi"):
        v = getattr(meta, name)
        if v is None:
            raise FeatureUndefined(f"patient {meta.patient_id!r} lacks {name}")
        mu, sd = stats[name]
        total += (v - mu) / sd if sd > 0 else 0.0
    return g * (1.0 + total)


# --------------------------------------------------------------------------
# Feature-set registry

_GLUCOSE_METRICS = (
    "glucose_slope",
    "glucose_evening_low",
    "glucose_evening_peak",
    "glucose_daily_min",
    "glucose_sd_first_diff",
    "glucose_cv",
)
_INSULIN = ("max_insulin_fast", "max_insulin_slow", "total_insulin_fast", "total_insulin_slow")
_DEMOGRAPHICS = ("gender", "age", "weight", "height", "bmi", "basal_percentage", "basal_total")
_DIABETES = ("hba1c", "tdd")

_REDUCED_TEMPORAL = (
    GLUCOSE, HYPO_EVENT, "activity_classification", "blood_pulse_wave", "core_temperature",
    "gsr_electrode", "heart_rate", "heart_rate_variability", "motion_activity",
    "number_of_steps", "perfusion_index", "respiration_rate",
)

_NON_AGGREGATED_TEMPORAL = (
    GLUCOSE, HYPO_EVENT, "heart_rate", "perfusion_index", "motion_activity",
    "activity_classification", "heart_rate_variability", "respiration_rate", "energy",
    "core_temperature", "temperature_local", "barometer_pressure", "gsr_electrode",
    "health_score", "training_effect_score", "activity_score", "richness_score",
    "blood_pulse_wave", "temperature_object", "temperature_barometer",
)

ALL_TEMPORAL = (
    GLUCOSE, HYPO_EVENT, "heart_rate", "heart_rate_variability", "motion_activity",
    "activity_classification", "number_of_steps", "perfusion_index", "respiration_rate",
    "energy", "activity_score", "core_temperature", "temperature_local", "temperature_object",
    "barometer_pressure", "blood_pulse_wave", "gsr_electrode", "health_score",
    "training_effect_score", "richness_score", "temperature_barometer",
)

ALL_STATIC = (
    "glucose_cv", "glucose_liability_index", "glucose_sd_first_diff", "glucose_daily_min",
    "glucose_evening_peak", "glucose_evening_low", "glucose_slope",
    "heart_rate_evening_low", "heart_rate_evening_peak",
    "heart_rate_variability_evening_low", "heart_rate_variability_evening_peak",
    "heart_rate_variability_daily_min",
    "wellness_evening_low", "wellness_evening_peak",
    *_DEMOGRAPHICS, *_DIABETES,
    *_INSULIN, "total_carbs", "exercise_minutes",
)

# Static feature -> (source channel, aggregate field) for aggregate-derived columns.
_AGGREGATE_SOURCES = {
    "glucose_cv": (GLUCOSE, "cv"),
    "glucose_liability_index": (GLUCOSE, "liability_index"),
    "glucose_sd_first_diff": (GLUCOSE, "sd_first_diff"),
    "glucose_daily_min": (GLUCOSE, "daily_min"),
    "glucose_evening_peak": (GLUCOSE, "evening_peak"),
    "glucose_evening_low": (GLUCOSE, "evening_low"),
    "glucose_slope": (GLUCOSE, "linreg_slope"),
    "heart_rate_evening_low": ("heart_rate", "evening_low"),
    "heart_rate_evening_peak": ("heart_rate", "evening_peak"),
    "heart_rate_variability_evening_low": ("heart_rate_variability", "evening_low"),
    "heart_rate_variability_evening_peak": ("heart_rate_variability", "evening_peak"),
    "heart_rate_variability_daily_min": ("heart_rate_variability", "daily_min"),
    "wellness_evening_low": ("relax_stress_intensity_score", "evening_low"),
    "wellness_evening_peak": ("relax_stress_intensity_score", "evening_peak"),
}
_LOGBOOK_STATIC = (*_INSULIN, "total_carbs", "exercise_minutes")
_META_STATIC = (*_DEMOGRAPHICS, *_DIABETES)


class FeatureSetName(str, Enum):
    ALL = "ALL"
    EVERION_DAILY_ONLY = "EVERION_DAILY_ONLY"
    GLUCOSE_NORMAL = "GLUCOSE_NORMAL"
    GLUCOSE_PERSONALIZED = "GLUCOSE_PERSONALIZED"
    NON_AGGREGATED_DAILY = "NON_AGGREGATED_DAILY"
    MARX2023 = "MARX2023"
    REDUCED = "REDUCED"


@dataclass(frozen=True)
class FeatureSetSpec:
    """A named selection of temporal channels and static features.

    Registry entries are named by :class:`FeatureSetName`; ad-hoc sets
    (for example the glucose-only pretraining input) use a plain string.
    """

    name: FeatureSetName | str
    temporal_channels: tuple[str, ...]
    static_features: tuple[str, ...]

    @property
    def personalized(self) -> bool:
        return self.name is FeatureSetName.GLUCOSE_PERSONALIZED

    @property
    def label(self) -> str:
        return self.name.value if isinstance(self.name, FeatureSetName) else str(self.name)

    def as_dict(self) -> dict:
        return {
            "registry_version": REGISTRY_VERSION,
            "name": self.label,
            "temporal_channels": list(self.temporal_channels),
            "static_features": list(self.static_features),
            "n_temporal": len(self.temporal_channels),
            "n_static": len(self.static_features),
        }


FEATURE_SETS: dict[FeatureSetName, FeatureSetSpec] = {
    s.name: s for s in (
        FeatureSetSpec(FeatureSetName.ALL, ALL_TEMPORAL, ALL_STATIC),
        FeatureSetSpec(
            FeatureSetName.EVERION_DAILY_ONLY,
            (GLUCOSE, HYPO_EVENT),
            (*_INSULIN, *_DIABETES, *_DEMOGRAPHICS,
             "heart_rate_variability_evening_low", "heart_rate_variability_evening_peak",
             "heart_rate_variability_daily_min"),
        ),
        FeatureSetSpec(
            FeatureSetName.GLUCOSE_NORMAL,
            (GLUCOSE, HYPO_EVENT, "heart_rate", "heart_rate_variability", "number_of_steps"),
            (*_INSULIN, *_DIABETES, *_DEMOGRAPHICS, *_GLUCOSE_METRICS),
        ),
        FeatureSetSpec(
            FeatureSetName.GLUCOSE_PERSONALIZED,
            (GLUCOSE, HYPO_EVENT, "heart_rate", "heart_rate_variability"),
            (*_GLUCOSE_METRICS, *_INSULIN),
        ),
        FeatureSetSpec(FeatureSetName.NON_AGGREGATED_DAILY, _NON_AGGREGATED_TEMPORAL, _INSULIN),
        FeatureSetSpec(
            FeatureSetName.MARX2023,
            _REDUCED_TEMPORAL[2:],
            (*_DEMOGRAPHICS, *_DIABETES, *_INSULIN, *_GLUCOSE_METRICS),
        ),
        FeatureSetSpec(
            FeatureSetName.REDUCED,
            _REDUCED_TEMPORAL,
            (*_INSULIN, *_DEMOGRAPHICS, *_DIABETES, *_GLUCOSE_METRICS),
        ),
    )
}


def get_feature_set(name) -> FeatureSetSpec:
    if isinstance(name, FeatureSetName):
        return FEATURE_SETS[name]
    try:
        return FEATURE_SETS[FeatureSetName(str(name).upper().replace("-", "_"))]
    except ValueError:
        raise ConfigurationError(f"unknown feature set {name!r}") from None


def dump_spec(name) -> str:
    return json.dumps(get_feature_set(name).as_dict(), indent=2)


# --------------------------------------------------------------------------
# Design matrix


@dataclass
class DesignMatrix:
    x_temporal: np.ndarray
    x_static: np.ndarray
    y: np.ndarray
    night_keys: list
    temporal_names: list[str]
    static_names: list[str]
    static_defined: np.ndarray | None = None
    patient_ids: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.y)
        if not (self.x_temporal.shape[0] == self.x_static.shape[0] == n == len(self.night_keys)):
            raise ConfigurationError("design matrix blocks disagree on the number of rows")
        if self.static_defined is None:
            self.static_defined = np.ones(self.x_static.shape, dtype=bool)
        self.y = np.asarray(self.y, dtype=bool)
        self.patient_ids = np.array([k[0] for k in self.night_keys], dtype=object)

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "DesignMatrix":
        idx = np.asarray(idx, dtype=int)
        return DesignMatrix(self.x_temporal[idx], self.x_static[idx], self.y[idx],
                            [self.night_keys[i] for i in idx], list(self.temporal_names),
                            list(self.static_names), self.static_defined[idx])

    def with_defined_mask(self) -> "DesignMatrix":
        """Append one 0/1 column per static feature flagging whether it was computable."""
        extra = self.static_defined.astype(float)
        names = self.static_names + [f"{n}__defined" for n in self.static_names]
        x = np.concatenate([self.x_static, extra], axis=1)
        return DesignMatrix(self.x_temporal, x, self.y, list(self.night_keys), list(self.temporal_names),
                            names, np.ones(x.shape, dtype=bool))

    def save(self, path) -> None:
        keys = np.array([f"{p}|{d.isoformat()}" for p, d in self.night_keys], dtype=str)
        with open(path, "wb") as fh:
            np.savez(fh, format_version=np.array(1), x_temporal=self.x_temporal, x_static=self.x_static,
                     y=self.y, night_keys=keys, temporal_names=np.array(self.temporal_names, dtype=str),
                     static_names=np.array(self.static_names, dtype=str), static_defined=self.static_defined)

    @classmethod
    def load(cls, path) -> "DesignMatrix":
        with np.load(path, allow_pickle=False) as z:
            keys = []
            for k in z["night_keys"]:
                pid, _, d = str(k).rpartition("|")
                keys.append((pid, date.fromisoformat(d)))
            return cls(z["x_temporal"], z["x_static"], z["y"], keys, [str(s) for s in z["temporal_names"]],
                       [str(s) for s in z["static_names"]], z["static_defined"])


@dataclass(frozen=True)
class Standardizer:
    """Column statistics fitted on training rows only."""

    temporal_mean: np.ndarray
    temporal_std: np.ndarray
    static_mean: np.ndarray
    static_std: np.ndarray

    @classmethod
    def fit(cls, dm: DesignMatrix, rows=None) -> "Standardizer":
        sub = dm if rows is None else dm.subset(rows)
        xt = sub.x_temporal.reshape(-1, sub.x_temporal.shape[2])
        t_mean, t_std = xt.mean(axis=0), xt.std(axis=0)
        s_mean, s_std = sub.x_static.mean(axis=0), sub.x_static.std(axis=0)
        return cls(t_mean, np.where(t_std > 0, t_std, 1.0), s_mean, np.where(s_std > 0, s_std, 1.0))

    def apply(self, dm: DesignMatrix, temporal: bool = True) -> DesignMatrix:
        xt = (dm.x_temporal - self.temporal_mean) / self.temporal_std if temporal else dm.x_temporal.copy()
        xs = (dm.x_static - self.static_mean) / self.static_std
        return DesignMatrix(xt, xs, dm.y.copy(), list(dm.night_keys), list(dm.temporal_names),
                            list(dm.static_names), dm.static_defined.copy())


def _meta_value(meta: PatientMeta, name: str) -> float | None:
    if name == "gender":
        return None if meta.gender is None else float(meta.gender == "M")
    return getattr(meta, name)


def _present_channels(cohort: RawCohort) -> set[str]:
    key = ("present-channels",)
    if key not in cohort._cache:
        present = {s.channel for s in cohort.vitals}
        if any(s.source.value != "SMBG" for s in cohort.glucose):
            present.add(GLUCOSE)
        cohort._cache[key] = present
    return cohort._cache[key]


def _meta_stats(cohort: RawCohort) -> dict[str, tuple[float, float]]:
    stats = {}
    for name in ("age", "height", "weight", "bmi"):
        vals = [getattr(m, name) for m in cohort.meta.values() if getattr(m, name) is not None]
        stats[name] = (float(np.mean(vals)), float(np.std(vals))) if vals else (0.0, 1.0)
    return stats


def static_row(day: AlignedDay, meta: PatientMeta, names) -> tuple[np.ndarray, np.ndarray]:
    """Values and defined flags for the requested static features of one day."""
    values = np.zeros(len(names))
    defined = np.ones(len(names), dtype=bool)
    aggregates: dict[str, DailyAggregates] = {}
    for j, name in enumerate(names):
        if name in _AGGREGATE_SOURCES:
            channel, attr = _AGGREGATE_SOURCES[name]
            if channel not in aggregates:
                aggregates[channel] = daily_aggregates(*day.column(channel))
            agg = aggregates[channel]
            ok = agg.evening_defined if attr.startswith("evening") else agg.defined
            values[j] = getattr(agg, attr) if ok else 0.0
            defined[j] = ok
        elif name in _LOGBOOK_STATIC:
            values[j] = day.static_logbook.get(name, 0.0)
        elif name in _META_STATIC:
            v = _meta_value(meta, name)
            values[j] = 0.0 if v is None else v
            defined[j] = v is not None
        else:
            raise ConfigurationError(f"unknown static feature {name!r}")
    return values, defined


def build_design_matrix(cohort: RawCohort, labels, spec: FeatureSetSpec, ranges=None,
                        imputation: Imputation | None = None, standardizer: Standardizer | None = None,
                        personalization: str = "literal") -> DesignMatrix:
    """Assemble one row per labelled night.

    The temporal block holds the requested channels of the same-day
    10:00-22:00 grid; under GLUCOSE_PERSONALIZED the glucose channel is
    replaced by the personalised transform. Nothing is standardised unless
    ``standardizer`` (fitted on training rows) is given.
    """
    if personalization not in ("literal", "zscore"):
        raise ConfigurationError(f"unknown personalization {personalization!r}")
    present = _present_channels(cohort) | {HYPO_EVENT}
    for ch in spec.temporal_channels:
        if ch not in present:
            raise ConfigurationError(f"feature set {spec.label} needs channel {ch!r}, absent from cohort")
    for name in spec.static_features:
        if name in _AGGREGATE_SOURCES and _AGGREGATE_SOURCES[name][0] not in present:
            raise ConfigurationError(
                f"feature set {spec.label} needs channel {_AGGREGATE_SOURCES[name][0]!r}, absent from cohort")

    labels = list(labels)
    keys = [(lab.patient_id, lab.date) for lab in labels]
    days = align_cohort(cohort, keys, ranges, imputation)
    by_key = {(d.patient_id, d.date): d for d in days}
    missing = [k for k in keys if k not in by_key]
    if missing:
        raise ConfigurationError(f"{len(missing)} labelled nights have no aligned day (first: {missing[0]})")

    cols = [CHANNEL_INDEX[ch] for ch in spec.temporal_channels]
    n = len(labels)
    xt = np.zeros((n, N_STEPS, len(cols)))
    xs = np.zeros((n, len(spec.static_features)))
    defined = np.ones_like(xs, dtype=bool)
    stats = _meta_stats(cohort) if personalization == "zscore" else None
    for i, key in enumerate(keys):
        day = by_key[key]
        meta = cohort.meta.get(key[0]) or PatientMeta(key[0])
        xt[i] = day.temporal[:, cols]
        if spec.personalized:
            g = xt[i, :, 0]
            try:
                if stats is None:
                    xt[i, :, 0] = personalize_glucose(g, meta)
                else:
                    xt[i, :, 0] = personalize_glucose_zscored(g, meta, stats)
            except FeatureUndefined as exc:
                log.warning("%s; personalised glucose set to 0", exc)
                xt[i, :, 0] = 0.0
        xs[i], defined[i] = static_row(day, meta, spec.static_features)
    dm = DesignMatrix(xt, xs, np.array([lab.label for lab in labels], dtype=bool), keys,
                      list(spec.temporal_channels), list(spec.static_features), defined)
    if standardizer is not None:
        dm = standardizer.apply(dm)
    return dm

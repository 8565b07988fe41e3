"""Nocturnal hypoglycemia labels for the 22:00-07:00 horizon.

A night is positive when either

1. a run of consecutive CGM/isCGM samples stays strictly below the threshold
   for at least ``run_minutes``, where a run of ``k`` samples is credited
   with ``k * native_interval`` of duration, or
2. any SMBG sample in the window is strictly below the threshold.

The native interval is the median gap of the patient's sensor stream,
snapped to 5 or 15 minutes. A gap longer than 1.5 intervals breaks a run.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .ingest import RawCohort
from .timegrid import DAY_S, NIGHT_END_S, NIGHT_START_S, from_day_number, night_window

log = logging.getLogger(__name__)

HYPO_THRESHOLD = 3.9
RUN_MINUTES = 15.0
SNAP_INTERVALS_S = (300.0, 900.0)
GAP_FACTOR = 1.5


class Trigger(str, Enum):
    CGM_RUN = "CGM_RUN"
    SMBG_POINT = "SMBG_POINT"
    NONE = "NONE"


@dataclass(frozen=True)
class NightLabel:
    patient_id: str
    date: date
    label: bool
    trigger: Trigger
    evidence_t: int | None = None  # local seconds since epoch

    def __post_init__(self):
        if self.label != (self.trigger is not Trigger.NONE):
            raise ValueError("label must be true exactly when a trigger fired")


def infer_interval(t: np.ndarray, default: float = 300.0) -> tuple[float, bool]:
    """Median positive inter-sample gap, snapped to 5 or 15 minutes.

    Returns ``(interval_s, snapped)``. Streams whose median is more than 25%
    away from both device periods keep the raw median and are flagged.
    """
    gaps = np.diff(np.sort(np.asarray(t, dtype=float)))
    gaps = gaps[gaps > 0]
    if gaps.size == 0:
        return default, True
    med = float(np.median(gaps))
    for target in SNAP_INTERVALS_S:
        if abs(med - target) <= 0.25 * target:
            return target, True
    return med, False


def label_samples(cgm_t, cgm_v, smbg_t, smbg_v, interval_s: float,
                  threshold: float = HYPO_THRESHOLD, run_minutes: float = RUN_MINUTES):
    """Apply both criteria to samples already restricted to one night.

    Returns ``(label, trigger, evidence_t)``.
    """
    if threshold <= 0 or run_minutes <= 0:
        raise ConfigurationError("threshold and run_minutes must be positive")
    need = run_minutes * 60.0
    max_gap = GAP_FACTOR * interval_s

    cgm_hit = None
    run_start, k, prev_t = None, 0, None
    for t, v in zip(cgm_t, cgm_v):
        if prev_t is not None and t - prev_t > max_gap:
            k = 0
        prev_t = t
        if v < threshold:
            if k == 0:
                run_start = t
            k += 1
            if k * interval_s >= need:
                cgm_hit = run_start
                break
        else:
            k = 0

    smbg_hit = None
    for t, v in zip(smbg_t, smbg_v):
        if v < threshold and (smbg_hit is None or t < smbg_hit):
            smbg_hit = t

    if cgm_hit is None and smbg_hit is None:
        return False, Trigger.NONE, None
    if smbg_hit is None or (cgm_hit is not None and cgm_hit <= smbg_hit):
        return True, Trigger.CGM_RUN, int(cgm_hit)
    return True, Trigger.SMBG_POINT, int(smbg_hit)


def _patient_streams(cohort: RawCohort, patient_id: str):
    key = ("label-streams", patient_id)
    if key not in cohort._cache:
        cols = cohort.glucose_columns(patient_id)
        sensor = cols["source"] != "SMBG"
        cgm_t, cgm_v = cols["t_local"][sensor], cols["value"][sensor]
        default = 900.0 if np.any(cols["source"][sensor] == "ISCGM") else 300.0
        interval, snapped = infer_interval(cgm_t, default)
        if not snapped:
            log.warning("patient %s: sensor interval %.0f s not snappable to 5/15 min; using raw median",
                        patient_id, interval)
        cohort._cache[key] = (cgm_t, cgm_v, cols["t_local"][~sensor], cols["value"][~sensor], interval)
    return cohort._cache[key]


def label_night(cohort: RawCohort, patient_id: str, date: date,
                threshold: float = HYPO_THRESHOLD, run_minutes: float = RUN_MINUTES,
                report: list | None = None) -> NightLabel:
    """Label the night that starts at 22:00 local on ``date``.

    Nights without any overnight sample come back negative; a
    ``MISSING_NIGHT`` warning is appended to ``report`` when given.
    """
    if threshold <= 0 or run_minutes <= 0:
        raise ConfigurationError("threshold and run_minutes must be positive")
    cgm_t, cgm_v, smbg_t, smbg_v, interval = _patient_streams(cohort, patient_id)
    lo, hi = night_window(date)
    a, b = np.searchsorted(cgm_t, [lo, hi])
    c, d = np.searchsorted(smbg_t, [lo, hi])
    if a == b and c == d:
        msg = f"MISSING_NIGHT: {patient_id} {date.isoformat()}"
        log.info(msg)
        if report is not None:
            report.append(msg)
        return NightLabel(patient_id, date, False, Trigger.NONE, None)
    label, trigger, ev = label_samples(cgm_t[a:b], cgm_v[a:b], smbg_t[c:d], smbg_v[c:d],
                                       interval, threshold, run_minutes)
    return NightLabel(patient_id, date, label, trigger, ev)


def night_dates(cohort: RawCohort, patient_id: str) -> list[date]:
    """Evening dates whose 22:00-07:00 window holds at least one glucose sample."""
    t = cohort.glucose_columns(patient_id)["t_local"]
    shifted = t - NIGHT_START_S
    in_night = (shifted % DAY_S) < (NIGHT_END_S - NIGHT_START_S)
    days = np.unique(shifted[in_night] // DAY_S)
    return [from_day_number(n) for n in days]


def label_cohort(cohort: RawCohort, threshold: float = HYPO_THRESHOLD,
                 run_minutes: float = RUN_MINUTES, report: list | None = None) -> list[NightLabel]:
    labels = []
    for pid in cohort.patients():
        for d in night_dates(cohort, pid):
            labels.append(label_night(cohort, pid, d, threshold, run_minutes, report))
    return labels


LABELS_HEADER = ["patient_id", "date", "label", "trigger", "evidence_t"]


def write_labels(labels, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABELS_HEADER)
        for lab in labels:
            w.writerow([lab.patient_id, lab.date.isoformat(), int(lab.label), lab.trigger.value,
                        "" if lab.evidence_t is None else lab.evidence_t])


def read_labels(path) -> list[NightLabel]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ev = row["evidence_t"]
            out.append(NightLabel(row["patient_id"], date.fromisoformat(row["date"]),
                                  row["label"] == "1", Trigger(row["trigger"]),
                                  int(ev) if ev else None))
    return out

"""Day-window alignment onto the fixed 15-minute grid.

Each patient-day becomes an :class:`AlignedDay`: 48 bins covering 10:00 to
22:00 local time, one column per registered temporal channel. A bin holds
the arithmetic mean of the plausible samples inside ``[t, t + 900)``.
Empty bins are zero with ``mask == False`` under the default ZERO
imputation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

import numpy as np

from .channels import GLUCOSE, HYPO_EVENT, TEMPORAL_CHANNELS, ChannelRange, default_ranges
from .errors import ConfigurationError
from .ingest import GlucoseSample, RawCohort, Source, VitalSample
from .timegrid import DAY_S, GRID_START_S, GRID_STEP_S, N_STEPS, day_number, from_day_number

CHANNEL_INDEX = {ch: i for i, ch in enumerate(TEMPORAL_CHANNELS)}

LOGBOOK_AGGREGATES = (
    "total_insulin_fast",
    "total_insulin_slow",
    "max_insulin_fast",
    "max_insulin_slow",
    "total_carbs",
    "exercise_minutes",
    "hypo_flags",
)


class Strategy(str, Enum):
    ZERO = "zero"
    FORWARD_FILL = "ffill"
    LINEAR = "linear"
    DROP_DAY = "drop"


@dataclass(frozen=True)
class Imputation:
    strategy: Strategy = Strategy.ZERO
    drop_threshold: float | None = None

    def __post_init__(self):
        if self.strategy is Strategy.DROP_DAY:
            if self.drop_threshold is None or not 0 < self.drop_threshold <= 1:
                raise ConfigurationError(
                    f"DROP_DAY needs a missing-fraction threshold in (0, 1], got {self.drop_threshold!r}")

    @classmethod
    def parse(cls, text: str) -> "Imputation":
        """Parse the CLI spelling: ``zero``, ``ffill``, ``linear`` or ``drop:<frac>``."""
        if text.startswith("drop"):
            _, _, frac = text.partition(":")
            try:
                value = float(frac)
            except ValueError:
                raise ConfigurationError(f"bad drop threshold in {text!r}") from None
            return cls(Strategy.DROP_DAY, value)
        try:
            return cls(Strategy(text))
        except ValueError:
            raise ConfigurationError(f"unknown imputation {text!r}") from None


@dataclass
class AlignedDay:
    patient_id: str
    date: date
    temporal: np.ndarray
    mask: np.ndarray
    static_logbook: dict[str, float] = field(default_factory=dict)
    channels: tuple[str, ...] = TEMPORAL_CHANNELS

    grid_start_s = GRID_START_S
    grid_step_s = GRID_STEP_S
    n_steps = N_STEPS

    def column(self, channel: str) -> tuple[np.ndarray, np.ndarray]:
        i = self.channels.index(channel)
        return self.temporal[:, i], self.mask[:, i]

    def missing_fraction(self, channel: str = GLUCOSE) -> float:
        return 1.0 - float(self.column(channel)[1].mean())


def _range_for(ranges, channel: str) -> ChannelRange:
    try:
        return ranges[channel]
    except KeyError:
        raise ConfigurationError(f"no plausibility range configured for channel {channel!r}") from None


def apply_plausibility(samples, ranges) -> tuple[list, Counter]:
    """Drop samples outside their channel's ``[min, max]``.

    ``samples`` may mix :class:`GlucoseSample` (channel ``glucose``) and
    :class:`VitalSample`. Returns the kept samples and a per-channel count of
    removed ones.
    """
    kept, removed = [], Counter()
    for s in samples:
        if isinstance(s, GlucoseSample):
            channel, value = GLUCOSE, s.value_mmol_l
        elif isinstance(s, VitalSample):
            channel, value = s.channel, s.value
        else:
            raise ConfigurationError(f"unsupported sample type {type(s).__name__}")
        if _range_for(ranges, channel).contains(value):
            kept.append(s)
        else:
            removed[channel] += 1
    return kept, removed


def _range_arrays(ranges) -> tuple[np.ndarray, np.ndarray]:
    lo = np.full(len(TEMPORAL_CHANNELS), np.nan)
    hi = np.full(len(TEMPORAL_CHANNELS), np.nan)
    for ch, i in CHANNEL_INDEX.items():
        if ch in ranges:
            lo[i], hi[i] = ranges[ch].min, ranges[ch].max
    return lo, hi


def _patient_samples(cohort: RawCohort, patient_id: str, ranges):
    """All plausible day-window-eligible samples as (t_local, channel_idx, value)."""
    g = cohort.glucose_columns(patient_id)
    sensor = g["source"] != "SMBG"
    t = [g["t_local"][sensor]]
    c = [np.zeros(int(sensor.sum()), dtype=np.int64)]
    v = [g["value"][sensor]]

    vit = cohort.vital_columns(patient_id)
    if vit["t_local"].size:
        names, inverse = np.unique(vit["channel"], return_inverse=True)
        idx = np.array([CHANNEL_INDEX[n] for n in names], dtype=np.int64)
        t.append(vit["t_local"])
        c.append(idx[inverse])
        v.append(vit["value"])

    # Logbook hypo symptoms/corrections act as hypo_event flags.
    flags = [e.t_local for e in cohort.logbook_for(patient_id) if e.hypo_symptoms or e.hypo_correction]
    if flags:
        t.append(np.array(flags, dtype=np.int64))
        c.append(np.full(len(flags), CHANNEL_INDEX[HYPO_EVENT], dtype=np.int64))
        v.append(np.ones(len(flags)))

    t, c, v = np.concatenate(t), np.concatenate(c), np.concatenate(v)
    lo, hi = _range_arrays(ranges)
    present = np.unique(c)
    missing = [TEMPORAL_CHANNELS[i] for i in present if np.isnan(lo[i])]
    if missing:
        raise ConfigurationError(f"no plausibility range configured for channel(s) {missing}")
    ok = (v >= lo[c]) & (v <= hi[c])
    return t[ok], c[ok], v[ok]


def _logbook_aggregates(cohort: RawCohort, patient_id: str, d: date) -> dict[str, float]:
    base = day_number(d) * DAY_S
    lo, hi = base + GRID_START_S, base + GRID_START_S + N_STEPS * GRID_STEP_S
    out = dict.fromkeys(LOGBOOK_AGGREGATES, 0.0)
    for e in cohort.logbook_for(patient_id):
        if not lo <= e.t_local < hi:
            continue
        fast = (e.rapid_insulin_meals or 0.0) + (e.rapid_insulin_correction or 0.0)
        slow = e.basal_insulin or 0.0
        out["total_insulin_fast"] += fast
        out["total_insulin_slow"] += slow
        out["max_insulin_fast"] = max(out["max_insulin_fast"], fast)
        out["max_insulin_slow"] = max(out["max_insulin_slow"], slow)
        out["total_carbs"] += (e.carbs_mixed or 0.0) + (e.carbs_fast or 0.0) + (e.carbs_slow or 0.0)
        ex = e.exercise_duration_min if e.exercise_duration_min is not None else e.exercise_duration_est_min
        out["exercise_minutes"] += ex or 0.0
        out["hypo_flags"] += float(bool(e.hypo_symptoms or e.hypo_correction))
    return out


def impute_series(values: np.ndarray, mask: np.ndarray, strategy: Strategy) -> tuple[np.ndarray, np.ndarray]:
    """Fill the unobserved bins of one channel.

    ZERO leaves zeros. FORWARD_FILL carries the last observation forward;
    LINEAR interpolates between the neighbouring observations. Bins neither
    rule can define (leading gaps, and trailing gaps for LINEAR) fall back
    to zero and stay masked out.
    """
    values = np.where(mask, values, 0.0).astype(float)
    mask = np.asarray(mask, dtype=bool).copy()
    if strategy in (Strategy.ZERO, Strategy.DROP_DAY) or mask.all() or not mask.any():
        return values, mask
    obs = np.flatnonzero(mask)
    idx = np.arange(values.size)
    if strategy is Strategy.FORWARD_FILL:
        pos = np.searchsorted(obs, idx, side="right") - 1
        defined = pos >= 0
        values[defined] = values[obs[pos[defined]]]
        mask = defined
    elif strategy is Strategy.LINEAR:
        defined = (idx >= obs[0]) & (idx <= obs[-1])
        values[defined] = np.interp(idx[defined], obs, values[obs])
        mask = defined
    return values, mask


def align_cohort(cohort: RawCohort, keys=None, ranges=None,
                 imputation: Imputation | None = None) -> list[AlignedDay]:
    """Align many patient-days at once.

    ``keys`` is an iterable of ``(patient_id, date)``; when omitted every
    date with at least one in-window sample is aligned. Under DROP_DAY,
    days whose glucose missing fraction exceeds the threshold are omitted
    from the result.
    """
    ranges = default_ranges() if ranges is None else ranges
    imputation = imputation or Imputation()
    n_ch = len(TEMPORAL_CHANNELS)

    if keys is None:
        wanted: dict[str, list[date]] = {pid: None for pid in cohort.patients()}
    else:
        wanted = {}
        for pid, d in keys:
            wanted.setdefault(pid, []).append(d)

    days_out = []
    for pid, dates in wanted.items():
        t, c, v = _patient_samples(cohort, pid, ranges)
        sec = t % DAY_S
        in_win = (sec >= GRID_START_S) & (sec < GRID_START_S + N_STEPS * GRID_STEP_S)
        t, c, v, sec = t[in_win], c[in_win], v[in_win], sec[in_win]
        day = t // DAY_S
        step = (sec - GRID_START_S) // GRID_STEP_S
        if dates is None:
            dates = [from_day_number(n) for n in np.unique(day)]
        for d in dates:
            sel = day == day_number(d)
            sums = np.zeros((N_STEPS, n_ch))
            counts = np.zeros((N_STEPS, n_ch))
            np.add.at(sums, (step[sel], c[sel]), v[sel])
            np.add.at(counts, (step[sel], c[sel]), 1.0)
            mask = counts > 0
            temporal = np.divide(sums, counts, out=np.zeros_like(sums), where=mask)
            aligned = AlignedDay(pid, d, temporal, mask, _logbook_aggregates(cohort, pid, d))
            if imputation.strategy is Strategy.DROP_DAY:
                if aligned.missing_fraction(GLUCOSE) > imputation.drop_threshold:
                    continue
            elif imputation.strategy is not Strategy.ZERO:
                for j in range(n_ch):
                    aligned.temporal[:, j], aligned.mask[:, j] = impute_series(
                        aligned.temporal[:, j], aligned.mask[:, j], imputation.strategy)
            days_out.append(aligned)
    return days_out


def align_day(cohort: RawCohort, patient_id: str, date: date, ranges=None,
              imputation: Imputation | None = None) -> AlignedDay:
    """Align a single patient-day (10:00-22:00 local) with ZERO imputation by default."""
    imputation = imputation or Imputation()
    if imputation.strategy is Strategy.DROP_DAY:
        raise ConfigurationError("DROP_DAY applies to collections of days; use align_cohort")
    return align_cohort(cohort, [(patient_id, date)], ranges, imputation)[0]


def imputation_comparison(cohort: RawCohort, strategy: Strategy | str, ranges=None,
                          drop_threshold: float | None = None, keys=None) -> list[AlignedDay]:
    """Align the cohort under one of the four imputation strategies."""
    imputation = Imputation(Strategy(strategy), drop_threshold)
    return align_cohort(cohort, keys, ranges, imputation)


def day_to_samples(day: AlignedDay, tz_offset_min: int = 0) -> RawCohort:
    """Re-express an aligned day as one sample per observed bin (bin start time).

    Useful for checking that alignment is idempotent.
    """
    base = day_number(day.date) * DAY_S + GRID_START_S - 60 * tz_offset_min
    cohort = RawCohort()
    for i in range(N_STEPS):
        for j, ch in enumerate(day.channels):
            if not day.mask[i, j]:
                continue
            t = base + i * GRID_STEP_S
            if ch == GLUCOSE:
                cohort.glucose.append(GlucoseSample(day.patient_id, t, tz_offset_min, Source.CGM,
                                                    float(day.temporal[i, j])))
            else:
                cohort.vitals.append(VitalSample(day.patient_id, t, ch, float(day.temporal[i, j]),
                                                 tz_offset_min=tz_offset_min))
    return cohort

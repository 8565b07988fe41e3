"""Seeded synthetic cohorts shaped like the two studies.

Glucose follows a mean-reverting diffusion integrated with Euler steps on a
5-minute grid::

    G[t + dt] = G[t] + theta * (mu - G[t]) * dt + drift(t) * dt + sigma * sqrt(dt) * eps

plus additive meal responses. Every night carries a latent risk ``z``:
overnight drift is pulled down by ``z``, and the late afternoon/evening
drift is pulled down by ``nh_signal_strength * z``, so the evening trend
carries information about the coming night. The overnight drift offset is
calibrated by bisection on a 200-night pilot so that the share of nights
labelled hypoglycemic (by :mod:`nocturne.labeling`) matches the profile.

The generator never emits labels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, time

import numpy as np

from .channels import EVERION_CHANNELS, default_ranges
from .errors import ConfigurationError
from .ingest import GlucoseSample, LogbookEntry, PatientMeta, Provenance, RawCohort, Source, VitalSample
from .labeling import label_samples
from .timegrid import DAY_S, day_number

FINE_DT_S = 300
DAY_START_S = 7 * 3600  # simulated days run 07:00 -> 07:00
STEPS_PER_DAY = DAY_S // FINE_DT_S
EVENING_DRIFT_FROM_S = 16 * 3600
NIGHT_FROM_S = 22 * 3600
PILOT_NIGHTS = 200
RISK_SPREAD = 1.5  # mmol/L/h of overnight drift per unit of latent risk
EVENING_GAIN = 0.4  # mmol/L/h of evening drift per unit of signal strength and risk
SENSOR_NOISE = 0.15


@dataclass(frozen=True)
class CohortProfile:
    name: str
    n_patients: int
    nights_per_patient: int
    cgm_interval_s: int
    vitals_interval_s: int
    target_imbalance: float
    nh_signal_strength: float = 1.0
    seed: int = 0
    tz_offset_min: int = 0
    start_date: date = date(2023, 7, 3)
    vital_channels: tuple[str, ...] = EVERION_CHANNELS
    with_logbook: bool = True

    def __post_init__(self):
        if not 0 < self.target_imbalance <= 0.5:
            raise ConfigurationError("target_imbalance (minority fraction) must lie in (0, 0.5]")
        if self.cgm_interval_s not in (300, 900):
            raise ConfigurationError("cgm_interval_s must be 300 or 900")
        if self.n_patients < 1 or self.nights_per_patient < 1:
            raise ConfigurationError("need at least one patient and one night")
        if self.vitals_interval_s < 1:
            raise ConfigurationError("vitals_interval_s must be positive")
        if self.nh_signal_strength < 0:
            raise ConfigurationError("nh_signal_strength must be >= 0")


@dataclass(frozen=True)
class GlucoseProcessParams:
    mean_level: float = 8.0
    reversion_rate: float = 0.35
    volatility: float = 1.0
    meal_times: tuple[time, ...] = (time(7, 30), time(12, 30), time(18, 0))
    meal_amplitude: float = 2.5
    night_drift: float = -0.5

    def __post_init__(self):
        if not self.reversion_rate > 0:
            raise ConfigurationError("reversion_rate must be > 0")
        if not self.volatility >= 0:
            raise ConfigurationError("volatility must be >= 0")


OHIO_CHANNELS_SYNTH = ("basis_gsr", "basis_skin_temperature", "basis_heart_rate", "basis_steps", "basal")

PROFILES = {
    "inhouse-like": CohortProfile("inhouse-like", 11, 6, 900, 300, 1 / 6.5, 1.0, 0, tz_offset_min=120),
    "ohio-like": CohortProfile("ohio-like", 12, 26, 300, 300, 1 / 3.1, 1.0, 0, start_date=date(2021, 3, 1),
                               vital_channels=OHIO_CHANNELS_SYNTH, with_logbook=False),
}


def get_profile(name: str, **overrides) -> CohortProfile:
    try:
        base = PROFILES[name]
    except KeyError:
        raise ConfigurationError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
    return replace(base, **overrides)


def _meal_kernel(hours: np.ndarray) -> np.ndarray:
    """Unit-peak gamma-like meal response, peaking one hour after the meal."""
    h = np.clip(hours, 0.0, None)
    return np.where(hours > 0, h * np.exp(1.0 - h), 0.0)


def _meal_component(sec_of_day: np.ndarray, params: GlucoseProcessParams, amps: np.ndarray) -> np.ndarray:
    """Meal responses on a 07:00-anchored day (seconds since 07:00 for each step).

    ``amps`` has shape (..., n_meals).
    """
    out = np.zeros(np.broadcast_shapes(amps.shape[:-1] + (1,), sec_of_day.shape))
    for j, mt in enumerate(params.meal_times):
        t_meal = mt.hour * 3600 + mt.minute * 60 - DAY_START_S
        if t_meal < 0:
            t_meal += DAY_S
        out = out + amps[..., j:j + 1] * _meal_kernel((sec_of_day - t_meal) / 3600.0)
    return out


def _drift_schedule(risk: np.ndarray, offset: float, profile: CohortProfile,
                    params: GlucoseProcessParams) -> np.ndarray:
    """Per-step extra drift (mmol/L/h) for days with latent risk ``risk`` (shape (n,))."""
    sec = DAY_START_S + np.arange(STEPS_PER_DAY) * FINE_DT_S
    evening = (sec >= EVENING_DRIFT_FROM_S) & (sec < NIGHT_FROM_S)
    night = sec >= NIGHT_FROM_S
    r = risk[:, None]
    drift = np.zeros((risk.size, STEPS_PER_DAY))
    drift = drift + evening * (-EVENING_GAIN * profile.nh_signal_strength * r)
    drift = drift + night * (params.night_drift + offset - RISK_SPREAD * r)
    return drift


def _simulate_days(g0: np.ndarray, mu: np.ndarray, drift: np.ndarray, noise: np.ndarray,
                   params: GlucoseProcessParams) -> np.ndarray:
    """Euler-integrate independent rows; returns latent (meal-free) glucose, shape like ``noise``."""
    dt = FINE_DT_S / 3600.0
    out = np.empty_like(noise)
    g = np.array(g0, dtype=float)
    sq = params.volatility * np.sqrt(dt)
    for k in range(noise.shape[1]):
        out[:, k] = g
        g = g + params.reversion_rate * (mu - g) * dt + drift[:, k] * dt + sq * noise[:, k]
        g = np.maximum(g, 1.8)
    return out


def _simulate_patient_continuous(g0: float, mu: float, drift: np.ndarray, noise: np.ndarray,
                                 params: GlucoseProcessParams) -> tuple[np.ndarray, float]:
    """Same recursion, but days are chained: row i starts where row i-1 ended."""
    dt = FINE_DT_S / 3600.0
    sq = params.volatility * np.sqrt(dt)
    theta = params.reversion_rate
    flat_drift, flat_noise = drift.ravel(), noise.ravel()
    out = np.empty(flat_noise.size)
    g = float(g0)
    for k in range(flat_noise.size):
        out[k] = g
        g = g + theta * (mu - g) * dt + flat_drift[k] * dt + sq * flat_noise[k]
        if g < 1.8:
            g = 1.8
    return out.reshape(noise.shape), g


def _smbg_for_night(t: np.ndarray, cgm: np.ndarray, truth: np.ndarray, u: np.ndarray, eps: np.ndarray):
    """Finger-stick confirmations: low sensor readings are checked with probability 0.7."""
    ts, vs, last = [], [], -np.inf
    for k in range(t.size):
        if cgm[k] < 4.2 and t[k] - last >= 3600 and u[k] < 0.7:
            ts.append(t[k])
            vs.append(float(np.clip(truth[k] + 0.2 * eps[k], 1.2, 30.0)))
            last = t[k]
    return ts, vs


def _sensor_indices(cgm_interval_s: int) -> np.ndarray:
    return np.arange(0, STEPS_PER_DAY, cgm_interval_s // FINE_DT_S)


def _nh_fraction(offset, pilot, profile, params) -> float:
    drift = _drift_schedule(pilot["risk"], offset, profile, params)
    latent = _simulate_days(pilot["g0"], pilot["mu"], drift, pilot["noise"], params)
    glucose = latent + _meal_component(pilot["sec"], params, pilot["amps"])
    idx = _sensor_indices(profile.cgm_interval_s)
    night = pilot["sec"][idx] >= NIGHT_FROM_S - DAY_START_S
    idx = idx[night]
    t = pilot["sec"][idx].astype(float)
    interval = float(profile.cgm_interval_s)
    hits = 0
    for i in range(glucose.shape[0]):
        truth = glucose[i, idx]
        cgm = np.clip(truth + SENSOR_NOISE * pilot["sensor"][i, idx], 1.5, 30.0)
        st, sv = _smbg_for_night(t, cgm, truth, pilot["u"][i, idx], pilot["eps"][i, idx])
        hits += label_samples(t, cgm, st, sv, interval)[0]
    return hits / glucose.shape[0]


def calibrate_offset(profile: CohortProfile, params: GlucoseProcessParams, n_pilot: int = PILOT_NIGHTS,
                     tol: float = 1e-3) -> float:
    """Bisection for the overnight drift offset that hits the target NH fraction."""
    rng = np.random.default_rng(np.random.SeedSequence([profile.seed, 10**6]))
    n = n_pilot
    pilot = {
        "risk": rng.standard_normal(n),
        "mu": params.mean_level + 0.5 * rng.standard_normal(n),
        "noise": rng.standard_normal((n, STEPS_PER_DAY)),
        "amps": params.meal_amplitude * rng.uniform(0.7, 1.3, (n, len(params.meal_times))),
        "sensor": rng.standard_normal((n, STEPS_PER_DAY)),
        "u": rng.uniform(size=(n, STEPS_PER_DAY)),
        "eps": rng.standard_normal((n, STEPS_PER_DAY)),
        "sec": np.arange(STEPS_PER_DAY, dtype=float) * FINE_DT_S,
    }
    pilot["g0"] = pilot["mu"] + rng.standard_normal(n)
    lo, hi = -10.0, 10.0  # fraction(lo) high, fraction(hi) low
    target = profile.target_imbalance
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _nh_fraction(mid, pilot, profile, params) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# Vitals

# channel: (baseline, patient sd, noise sd, exercise response, lo, hi)
_VITAL_MODEL = {
    "heart_rate": (85.0, 8.0, 4.0, 60.0, 40.0, 210.0),
    "perfusion_index": (2.0, 0.4, 0.3, 1.0, 0.1, 20.0),
    "motion_activity": (20.0, 5.0, 5.0, 200.0, 0.0, 900.0),
    "activity_classification": (1.0, 0.0, 0.3, 4.0, 0.0, 10.0),
    "heart_rate_variability": (60.0, 10.0, 8.0, -25.0, 5.0, 300.0),
    "respiration_rate": (18.0, 2.0, 1.5, 14.0, 6.0, 55.0),
    "energy": (1.5, 0.3, 0.2, 6.0, 0.1, 60.0),
    "core_temperature": (37.0, 0.2, 0.1, 0.8, 35.0, 40.5),
    "temperature_local": (33.0, 0.6, 0.3, 1.5, 20.0, 40.0),
    "barometer_pressure": (960.0, 5.0, 0.5, 0.0, 850.0, 1050.0),
    "gsr_electrode": (5.0, 1.0, 0.8, 8.0, 0.1, 100.0),
    "health_score": (70.0, 8.0, 3.0, 0.0, 0.0, 100.0),
    "relax_stress_intensity_score": (40.0, 8.0, 6.0, 25.0, 0.0, 100.0),
    "training_effect_score": (10.0, 3.0, 2.0, 30.0, 0.0, 100.0),
    "activity_score": (20.0, 5.0, 4.0, 50.0, 0.0, 100.0),
    "richness_score": (30.0, 6.0, 4.0, 20.0, 0.0, 100.0),
    "blood_pulse_wave": (50.0, 8.0, 5.0, 20.0, 1.0, 900.0),
    "number_of_steps": (15.0, 4.0, 8.0, 400.0, 0.0, 5000.0),
    "temperature_object": (30.0, 1.0, 0.5, 1.0, 10.0, 50.0),
    "temperature_barometer": (31.0, 1.0, 0.4, 1.0, 10.0, 50.0),
    "basis_gsr": (0.5, 0.2, 0.2, 2.0, 0.0, 30.0),
    "basis_skin_temperature": (90.0, 1.0, 0.6, 2.0, 60.0, 105.0),
    "basis_heart_rate": (75.0, 8.0, 4.0, 50.0, 40.0, 200.0),
    "basis_steps": (10.0, 4.0, 6.0, 500.0, 0.0, 5000.0),
    "basal": (0.9, 0.2, 0.0, 0.0, 0.0, 5.0),
}

EXERCISE_SESSIONS = ((time(10, 30), 90), (time(14, 0), 120))
VITALS_FROM_S, VITALS_TO_S = 8 * 3600, 23 * 3600


def _exercise_profile(sec: np.ndarray) -> np.ndarray:
    act = np.zeros_like(sec, dtype=float)
    for start, minutes in EXERCISE_SESSIONS:
        s = start.hour * 3600 + start.minute * 60
        act = np.maximum(act, ((sec >= s) & (sec < s + 60 * minutes)).astype(float))
    return act


# --------------------------------------------------------------------------
# Patients


def _patient_meta(pid: str, rng: np.random.Generator, profile: CohortProfile) -> PatientMeta:
    age = float(np.round(rng.uniform(7, 16), 1)) if profile.with_logbook else float(np.round(rng.uniform(20, 80), 1))
    height = float(np.round(min(190.0, 6.0 * min(age, 17.0) + 77.0 + rng.normal(0, 6)), 1))
    bmi_target = rng.uniform(14.5, 24.0) if profile.with_logbook else rng.uniform(20, 32)
    weight = float(np.round(bmi_target * (height / 100.0) ** 2, 1))
    bmi = float(np.round(weight / (height / 100.0) ** 2, 2))
    tdd = float(np.round(weight * rng.uniform(0.6, 1.0), 1))
    basal_pct = float(np.round(rng.uniform(35, 55), 1))
    return PatientMeta(
        patient_id=pid,
        gender="M" if rng.uniform() < 0.5 else "F",
        age=age,
        weight=weight,
        height=height,
        bmi=bmi,
        basal_percentage=basal_pct,
        basal_total=float(np.round(tdd * basal_pct / 100.0, 1)),
        hba1c=float(np.round(rng.uniform(6.3, 8.5), 1)),
        tdd=tdd,
    )


def _generate_patient(p: int, profile: CohortProfile, params: GlucoseProcessParams, offset: float):
    rng = np.random.default_rng(np.random.SeedSequence([profile.seed, p]))
    pid = f"{profile.name.split('-')[0]}{p + 1:03d}"
    meta = _patient_meta(pid, rng, profile)
    n_days = profile.nights_per_patient
    tz = profile.tz_offset_min

    risk = rng.standard_normal(n_days)
    mu = params.mean_level + 0.5 * rng.standard_normal()
    noise = rng.standard_normal((n_days, STEPS_PER_DAY))
    amps = params.meal_amplitude * rng.uniform(0.7, 1.3, (n_days, len(params.meal_times)))
    drift = _drift_schedule(risk, offset, profile, params)
    latent, _ = _simulate_patient_continuous(mu + rng.standard_normal(), mu, drift, noise, params)
    sec = np.arange(STEPS_PER_DAY, dtype=float) * FINE_DT_S
    truth = latent + _meal_component(sec, params, amps)
    sensor_noise = rng.standard_normal(truth.shape)
    smbg_u = rng.uniform(size=truth.shape)
    smbg_eps = rng.standard_normal(truth.shape)

    first_day = day_number(profile.start_date)
    source = Source.CGM if profile.cgm_interval_s == 300 else Source.ISCGM
    idx = _sensor_indices(profile.cgm_interval_s)
    glucose, vitals, logbook = [], [], []
    for d in range(n_days):
        day0_local = (first_day + d) * DAY_S + DAY_START_S
        t_local = day0_local + idx * FINE_DT_S
        g_true = truth[d, idx]
        cgm = np.clip(g_true + SENSOR_NOISE * sensor_noise[d, idx], 1.5, 30.0)
        for t, v in zip((t_local - 60 * tz).tolist(), np.round(cgm, 3).tolist()):
            glucose.append(GlucoseSample(pid, t, tz, source, v))
        night = idx * FINE_DT_S >= NIGHT_FROM_S - DAY_START_S
        st, sv = _smbg_for_night(t_local[night], cgm[night], g_true[night],
                                 smbg_u[d, idx][night], smbg_eps[d, idx][night])
        for t, v in zip((np.asarray(st, dtype=np.int64) - 60 * tz).tolist(), np.round(sv, 2).tolist()):
            glucose.append(GlucoseSample(pid, t, tz, Source.SMBG, v))

        midnight = (first_day + d) * DAY_S
        vitals.extend(_vitals_for_day(pid, midnight, tz, profile, rng))
        if profile.with_logbook:
            logbook.extend(_logbook_for_day(pid, midnight, tz, meta, params, amps[d], truth[d], rng))
    return pid, meta, glucose, vitals, logbook


def _vitals_for_day(pid, midnight, tz, profile, rng):
    step = profile.vitals_interval_s
    sec = np.arange(VITALS_FROM_S, VITALS_TO_S, step)
    act = _exercise_profile(sec)
    out = []
    ranges = default_ranges()
    for ch in profile.vital_channels:
        base, psd, nsd, resp, lo, hi = _VITAL_MODEL[ch]
        level = base + psd * rng.standard_normal()
        v = level + resp * act + nsd * rng.standard_normal(sec.size)
        v = np.clip(v, lo, hi)
        keep = rng.uniform(size=sec.size) >= 0.05
        broken = rng.uniform(size=sec.size) < 0.005
        if ch in ranges:
            v = np.where(broken, ranges[ch].min - 1.0, v)
        times = (midnight + sec[keep] - 60 * tz).astype(np.int64).tolist()
        for t, val in zip(times, np.round(v[keep], 3).tolist()):
            out.append(VitalSample(pid, t, ch, val, tz_offset_min=tz))
    return out


def _logbook_for_day(pid, midnight, tz, meta, params, amps, truth_day, rng):
    entries = []
    t0 = midnight + 8 * 3600
    entries.append(LogbookEntry(pid, t0 - 60 * tz, tz, basal_insulin=meta.basal_total,
                                remarks="daily basal"))
    for mt, amp in zip(params.meal_times, amps):
        t = midnight + mt.hour * 3600 + mt.minute * 60
        carbs = float(np.round(20.0 * amp, 0))
        entries.append(LogbookEntry(pid, int(t) - 60 * tz, tz, carbs_mixed=carbs,
                                    rapid_insulin_meals=float(np.round(carbs / 12.0, 1)),
                                    carb_type="mixed"))
    for start, minutes in EXERCISE_SESSIONS:
        t = midnight + start.hour * 3600 + start.minute * 60
        entries.append(LogbookEntry(pid, int(t) - 60 * tz, tz, exercise_duration_min=float(minutes),
                                    activity_type="camp sports"))
    sec = DAY_START_S + np.arange(STEPS_PER_DAY) * FINE_DT_S
    day_low = np.flatnonzero((truth_day < 3.9) & (sec < NIGHT_FROM_S))
    if day_low.size:
        t = midnight + int(sec[day_low[0]])
        entries.append(LogbookEntry(pid, t - 60 * tz, tz, hypo_symptoms=True, hypo_correction=True,
                                    carbs_fast=15.0, carb_type="glucose tablets"))
    return entries


def generate_cohort(profile: CohortProfile, params: GlucoseProcessParams | None = None) -> RawCohort:
    """Build a full synthetic cohort; deterministic in ``(profile, params)``."""
    params = params or GlucoseProcessParams()
    offset = calibrate_offset(profile, params)
    cohort = RawCohort(provenance=Provenance.SYNTHETIC)
    for p in range(profile.n_patients):
        pid, meta, glucose, vitals, logbook = _generate_patient(p, profile, params, offset)
        cohort.meta[pid] = meta
        cohort.glucose.extend(glucose)
        cohort.vitals.extend(vitals)
        cohort.logbook.extend(logbook)
    return cohort

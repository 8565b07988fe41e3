"""Channel registry and default plausibility ranges.

The ranges below are *not* taken from any device manual. They are broad
physiological/technical envelopes chosen so that obviously broken readings
(zero heart rate, negative step counts) are dropped. Override them with a
``ranges.toml`` file (``channel = [min, max]``) when better limits are known.
"""

from __future__ import annotations

from dataclasses import dataclass

import tomli

from .errors import ConfigurationError

GLUCOSE = "glucose"
HYPO_EVENT = "hypo_event"

# Wearable armband channels used by the in-house study.
EVERION_CHANNELS = (
    "heart_rate",
    "perfusion_index",
    "motion_activity",
    "activity_classification",
    "heart_rate_variability",
    "respiration_rate",
    "energy",
    "core_temperature",
    "temperature_local",
    "barometer_pressure",
    "gsr_electrode",
    "health_score",
    "relax_stress_intensity_score",
    "training_effect_score",
    "activity_score",
    "richness_score",
    "blood_pulse_wave",
    "number_of_steps",
    "temperature_object",
    "temperature_barometer",
)

OHIO_CHANNELS = (
    "basis_gsr",
    "basis_skin_temperature",
    "basis_heart_rate",
    "basis_steps",
    "acceleration",
    "basal",
)

VITAL_CHANNELS = EVERION_CHANNELS + OHIO_CHANNELS + (HYPO_EVENT,)

# Order of the temporal block of an AlignedDay.
TEMPORAL_CHANNELS = (GLUCOSE,) + VITAL_CHANNELS


@dataclass(frozen=True)
class ChannelRange:
    channel: str
    min: float
    max: float

    def __post_init__(self):
        if not self.min < self.max:
            raise ConfigurationError(f"range for {self.channel!r} needs min < max, got [{self.min}, {self.max}]")

    def contains(self, value: float) -> bool:
        return self.min <= value <= self.max


_DEFAULTS = {
    GLUCOSE: (1.0, 35.0),
    "heart_rate": (30.0, 240.0),
    "perfusion_index": (0.0, 100.0),
    "motion_activity": (0.0, 1000.0),
    "activity_classification": (0.0, 20.0),
    "heart_rate_variability": (1.0, 500.0),
    "respiration_rate": (4.0, 60.0),
    "energy": (0.0, 100.0),
    "core_temperature": (30.0, 43.0),
    "temperature_local": (10.0, 45.0),
    "barometer_pressure": (500.0, 1100.0),
    "gsr_electrode": (1e-6, 1e4),
    "health_score": (0.0, 100.0),
    "relax_stress_intensity_score": (0.0, 100.0),
    "training_effect_score": (0.0, 100.0),
    "activity_score": (0.0, 100.0),
    "richness_score": (0.0, 100.0),
    "blood_pulse_wave": (0.0, 1000.0),
    "number_of_steps": (0.0, 10000.0),
    "temperature_object": (0.0, 60.0),
    "temperature_barometer": (0.0, 60.0),
    "basis_gsr": (0.0, 100.0),
    "basis_skin_temperature": (0.0, 120.0),
    "basis_heart_rate": (30.0, 240.0),
    "basis_steps": (0.0, 10000.0),
    "acceleration": (0.0, 100.0),
    "basal": (0.0, 20.0),
    HYPO_EVENT: (0.0, 1.0),
}


def default_ranges() -> dict[str, ChannelRange]:
    """Return a fresh copy of the built-in range table keyed by channel."""
    return {ch: ChannelRange(ch, lo, hi) for ch, (lo, hi) in _DEFAULTS.items()}


def load_ranges(path) -> dict[str, ChannelRange]:
    """Read ``channel = [min, max]`` overrides on top of the defaults."""
    with open(path, "rb") as fh:
        table = tomli.load(fh)
    ranges = default_ranges()
    for channel, bounds in table.items():
        if channel not in TEMPORAL_CHANNELS:
            raise ConfigurationError(f"unknown channel in range file: {channel!r}")
        lo, hi = bounds
        ranges[channel] = ChannelRange(channel, float(lo), float(hi))
    return ranges

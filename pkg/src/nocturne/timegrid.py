"""Local wall-clock arithmetic shared by alignment and labeling.

Local time is ``t_utc + 60 * tz_offset_min`` expressed as seconds since the
epoch, so a local calendar date maps to ``days_since_epoch * 86400``.
"""

from __future__ import annotations

from datetime import date, timedelta

DAY_S = 86_400
GRID_START_S = 10 * 3600  # 10:00 local
GRID_STEP_S = 900
N_STEPS = 48
GRID_END_S = GRID_START_S + N_STEPS * GRID_STEP_S  # 22:00 local
NIGHT_START_S = 22 * 3600
NIGHT_END_S = DAY_S + 7 * 3600  # 07:00 the next morning
EVENING_STEPS = (36, 48)  # 19:00-22:00 on the 10:00-anchored grid

_EPOCH = date(1970, 1, 1)

assert N_STEPS * GRID_STEP_S == 12 * 3600


def day_number(d: date) -> int:
    return (d - _EPOCH).days


def from_day_number(n: int) -> date:
    return _EPOCH + timedelta(days=int(n))


def local_midnight(d: date) -> int:
    return day_number(d) * DAY_S


def night_window(d: date) -> tuple[int, int]:
    """Half-open local-time window ``[d 22:00, d+1 07:00)``."""
    base = local_midnight(d)
    return base + NIGHT_START_S, base + NIGHT_END_S


def day_window(d: date) -> tuple[int, int]:
    base = local_midnight(d)
    return base + GRID_START_S, base + GRID_END_S

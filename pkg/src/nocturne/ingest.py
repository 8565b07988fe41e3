"""Raw record model and the two on-disk formats.

Two sources are supported:

* an in-house style CSV bundle (``glucose.csv``, ``vitals.csv``,
  ``logbook.csv``, ``metadata.csv``), and
* an OhioT1DM-style XML file (``<patient id=...>`` with event lists).

Both are parsed into a :class:`RawCohort` whose glucose values are always in
mmol/L. Malformed rows are skipped and recorded in a :class:`ParseReport`;
only structural problems (missing file, bad header, missing patient id,
undecodable input) raise :class:`~nocturne.errors.IngestError`.
"""

from __future__ import annotations

import calendar
import csv
import io
import math
import os
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .channels import VITAL_CHANNELS, HYPO_EVENT
from .errors import DomainError, IngestError

MGDL_PER_MMOL = 18.016

TZ_MIN, TZ_MAX = -720, 840


class Source(str, Enum):
    CGM = "CGM"
    ISCGM = "ISCGM"
    SMBG = "SMBG"


class Provenance(str, Enum):
    INHOUSE_CSV = "INHOUSE_CSV"
    OHIO_XML = "OHIO_XML"
    SYNTHETIC = "SYNTHETIC"


class Trend(str, Enum):
    rising = "rising"
    falling = "falling"
    stable = "stable"
    unknown = "unknown"


def mgdl_to_mmol(value_mgdl: float) -> float:
    """Convert a glucose concentration from mg/dL to mmol/L."""
    if not value_mgdl >= 0:
        raise DomainError(f"glucose in mg/dL must be non-negative, got {value_mgdl!r}")
    return value_mgdl / MGDL_PER_MMOL


def _check_tz(tz_offset_min: int) -> None:
    if not TZ_MIN <= tz_offset_min <= TZ_MAX:
        raise DomainError(f"tz_offset_min {tz_offset_min} outside [{TZ_MIN}, {TZ_MAX}]")


@dataclass(frozen=True, slots=True)
class GlucoseSample:
    patient_id: str
    t_utc: int
    tz_offset_min: int
    source: Source
    value_mmol_l: float

    def __post_init__(self):
        _check_tz(self.tz_offset_min)
        if not 0.0 < self.value_mmol_l < 50.0:
            raise DomainError(f"glucose {self.value_mmol_l!r} mmol/L outside (0, 50)")

    @property
    def t_local(self) -> int:
        return self.t_utc + 60 * self.tz_offset_min


@dataclass(frozen=True, slots=True)
class VitalSample:
    patient_id: str
    t_utc: int
    channel: str
    value: float
    quality: float | None = None
    tz_offset_min: int = 0

    def __post_init__(self):
        if self.channel not in VITAL_CHANNELS:
            raise DomainError(f"unregistered vital channel {self.channel!r}")
        if not math.isfinite(self.value):
            raise DomainError("vital value must be finite")
        if self.quality is not None and not 0.0 <= self.quality <= 100.0:
            raise DomainError(f"quality {self.quality!r} outside [0, 100]")
        _check_tz(self.tz_offset_min)

    @property
    def t_local(self) -> int:
        return self.t_utc + 60 * self.tz_offset_min


_NONNEGATIVE_LOG_FIELDS = (
    "basal_insulin",
    "rapid_insulin_meals",
    "rapid_insulin_correction",
    "carbs_mixed",
    "carbs_fast",
    "carbs_slow",
    "exercise_duration_min",
    "exercise_duration_est_min",
)


@dataclass(frozen=True, slots=True)
class LogbookEntry:
    patient_id: str
    t_utc: int
    tz_offset_min: int = 0
    blood_sugar: float | None = None
    sensor_glucose: float | None = None
    sgl_trend: Trend | None = None
    basal_insulin: float | None = None
    rapid_insulin_meals: float | None = None
    rapid_insulin_correction: float | None = None
    carbs_mixed: float | None = None
    carbs_fast: float | None = None
    carbs_slow: float | None = None
    hypo_correction: bool | None = None
    carb_type: str | None = None
    exercise_duration_min: float | None = None
    exercise_duration_est_min: float | None = None
    activity_type: str | None = None
    hypo_symptoms: bool | None = None
    remarks: str | None = None

    def __post_init__(self):
        _check_tz(self.tz_offset_min)
        for name in _NONNEGATIVE_LOG_FIELDS:
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise DomainError(f"{name} must be >= 0, got {v!r}")

    @property
    def t_local(self) -> int:
        return self.t_utc + 60 * self.tz_offset_min


LOGBOOK_FIELDS = tuple(f.name for f in fields(LogbookEntry))[3:]


@dataclass(frozen=True, slots=True)
class PatientMeta:
    patient_id: str
    gender: str | None = None
    age: float | None = None
    weight: float | None = None
    height: float | None = None
    bmi: float | None = None
    basal_percentage: float | None = None
    basal_total: float | None = None
    hba1c: float | None = None
    tdd: float | None = None

    def __post_init__(self):
        if self.gender is not None and self.gender not in ("M", "F"):
            raise DomainError(f"gender must be M or F, got {self.gender!r}")
        for name in ("age", "weight", "height"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be > 0, got {v!r}")
        if self.basal_percentage is not None and not 0 <= self.basal_percentage <= 100:
            raise DomainError("basal_percentage outside [0, 100]")
        if None not in (self.weight, self.height, self.bmi):
            expected = self.weight / (self.height / 100.0) ** 2
            if abs(self.bmi - expected) > 0.05 * expected:
                raise DomainError(f"bmi {self.bmi} disagrees with weight/height ({expected:.2f})")


META_FIELDS = tuple(f.name for f in fields(PatientMeta))[1:]


@dataclass
class RawCohort:
    glucose: list[GlucoseSample] = field(default_factory=list)
    vitals: list[VitalSample] = field(default_factory=list)
    logbook: list[LogbookEntry] = field(default_factory=list)
    meta: dict[str, PatientMeta] = field(default_factory=dict)
    provenance: Provenance = Provenance.SYNTHETIC
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def patients(self) -> list[str]:
        ids = set(self.meta)
        ids.update(s.patient_id for s in self.glucose)
        ids.update(s.patient_id for s in self.vitals)
        ids.update(e.patient_id for e in self.logbook)
        return sorted(ids)

    def same_records(self, other: "RawCohort") -> bool:
        """Order-insensitive equality of every record family."""
        return (
            Counter(self.glucose) == Counter(other.glucose)
            and Counter(self.vitals) == Counter(other.vitals)
            and Counter(self.logbook) == Counter(other.logbook)
            and self.meta == other.meta
        )

    # Columnar views, built once per cohort. Records are immutable, so the
    # cache stays valid as long as the lists are not mutated in place.
    def glucose_columns(self, patient_id: str) -> dict[str, np.ndarray]:
        key = ("glucose", patient_id)
        if key not in self._cache:
            rows = [s for s in self.glucose if s.patient_id == patient_id]
            rows.sort(key=lambda s: (s.t_local, s.source.value, s.value_mmol_l))
            self._cache[key] = {
                "t_local": np.array([s.t_local for s in rows], dtype=np.int64),
                "source": np.array([s.source.value for s in rows], dtype="<U5"),
                "value": np.array([s.value_mmol_l for s in rows], dtype=float),
            }
        return self._cache[key]

    def vital_columns(self, patient_id: str) -> dict[str, np.ndarray]:
        key = ("vitals", patient_id)
        if key not in self._cache:
            rows = [s for s in self.vitals if s.patient_id == patient_id]
            rows.sort(key=lambda s: (s.t_local, s.channel, s.value))
            self._cache[key] = {
                "t_local": np.array([s.t_local for s in rows], dtype=np.int64),
                "channel": np.array([s.channel for s in rows], dtype=object),
                "value": np.array([s.value for s in rows], dtype=float),
            }
        return self._cache[key]

    def logbook_for(self, patient_id: str) -> list[LogbookEntry]:
        key = ("logbook", patient_id)
        if key not in self._cache:
            rows = [e for e in self.logbook if e.patient_id == patient_id]
            rows.sort(key=lambda e: (e.t_local, e.t_utc))
            self._cache[key] = rows
        return self._cache[key]


class Reason(str, Enum):
    PARSE_ERROR = "PARSE_ERROR"
    INVARIANT_VIOLATION = "INVARIANT_VIOLATION"
    INVALID_TIMESTAMP = "INVALID_TIMESTAMP"


@dataclass(frozen=True)
class Rejection:
    file: str
    line: int
    reason: Reason
    detail: str


@dataclass
class ParseReport:
    rows_read: int = 0
    rows_rejected: int = 0
    rejections: list[Rejection] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    per_file: dict[str, int] = field(default_factory=dict)

    def reject(self, file: str, line: int, reason: Reason, detail: str) -> None:
        self.rows_rejected += 1
        self.rejections.append(Rejection(file, line, reason, detail))

    def reasons(self) -> Counter:
        return Counter(r.reason for r in self.rejections)


# --------------------------------------------------------------------------
# CSV bundle

GLUCOSE_HEADER = ["patient_id", "timestamp_utc", "tz_offset_min", "source", "value_mmol_l"]
VITALS_HEADER = ["patient_id", "timestamp_utc", "tz_offset_min", "channel", "value", "quality"]
LOGBOOK_HEADER = ["patient_id", "timestamp_utc", "tz_offset_min", *LOGBOOK_FIELDS]
META_HEADER = ["patient_id", *META_FIELDS]

ISO_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class _RowError(Exception):
    def __init__(self, reason: Reason, detail: str):
        self.reason = reason
        self.detail = detail


def parse_iso_utc(text: str) -> int:
    try:
        dt = datetime.strptime(text, ISO_FORMAT)
    except ValueError as exc:
        raise _RowError(Reason.INVALID_TIMESTAMP, f"bad timestamp {text!r}") from exc
    return calendar.timegm(dt.timetuple())


def format_iso_utc(t_utc: int) -> str:
    return datetime.fromtimestamp(t_utc, tz=timezone.utc).strftime(ISO_FORMAT)


def _float(text: str, name: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise _RowError(Reason.PARSE_ERROR, f"{name}: not a number {text!r}") from exc
    if not math.isfinite(v):
        raise _RowError(Reason.PARSE_ERROR, f"{name}: non-finite {text!r}")
    return v


def _opt_float(text: str, name: str) -> float | None:
    return None if text == "" else _float(text, name)


def _int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise _RowError(Reason.PARSE_ERROR, f"{name}: not an integer {text!r}") from exc


_TRUE = {"true", "yes", "1"}
_FALSE = {"false", "no", "0"}


def _opt_bool(text: str, name: str) -> bool | None:
    low = text.strip().lower()
    if low == "":
        return None
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise _RowError(Reason.PARSE_ERROR, f"{name}: not a boolean {text!r}")


def _opt_enum(text: str, enum, name: str):
    if text == "":
        return None
    try:
        return enum(text)
    except ValueError as exc:
        raise _RowError(Reason.PARSE_ERROR, f"{name}: unknown value {text!r}") from exc


def _glucose_row(row: dict) -> GlucoseSample:
    source = _opt_enum(row["source"], Source, "source")
    if source is None:
        raise _RowError(Reason.PARSE_ERROR, "source is empty")
    return GlucoseSample(
        patient_id=row["patient_id"],
        t_utc=parse_iso_utc(row["timestamp_utc"]),
        tz_offset_min=_int(row["tz_offset_min"], "tz_offset_min"),
        source=source,
        value_mmol_l=_float(row["value_mmol_l"], "value_mmol_l"),
    )


def _vital_row(row: dict) -> VitalSample:
    return VitalSample(
        patient_id=row["patient_id"],
        t_utc=parse_iso_utc(row["timestamp_utc"]),
        tz_offset_min=_int(row["tz_offset_min"], "tz_offset_min"),
        channel=row["channel"],
        value=_float(row["value"], "value"),
        quality=_opt_float(row["quality"], "quality"),
    )


_LOG_TEXT = {"carb_type", "activity_type", "remarks"}
_LOG_BOOL = {"hypo_correction", "hypo_symptoms"}


def _logbook_row(row: dict) -> LogbookEntry:
    kwargs = {}
    for name in LOGBOOK_FIELDS:
        text = row[name]
        if name in _LOG_TEXT:
            kwargs[name] = text if text != "" else None
        elif name in _LOG_BOOL:
            kwargs[name] = _opt_bool(text, name)
        elif name == "sgl_trend":
            kwargs[name] = _opt_enum(text, Trend, name)
        else:
            kwargs[name] = _opt_float(text, name)
    return LogbookEntry(
        patient_id=row["patient_id"],
        t_utc=parse_iso_utc(row["timestamp_utc"]),
        tz_offset_min=_int(row["tz_offset_min"], "tz_offset_min"),
        **kwargs,
    )


def _meta_row(row: dict) -> PatientMeta:
    kwargs = {"gender": row["gender"] or None}
    for name in META_FIELDS[1:]:
        kwargs[name] = _opt_float(row[name], name)
    return PatientMeta(patient_id=row["patient_id"], **kwargs)


def _read_table(path: Path, header: list[str], build, report: ParseReport) -> list:
    name = path.name
    if not path.is_file():
        raise IngestError(f"missing file: {path}")
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"{name}: not valid UTF-8 ({exc.reason})") from exc
    out = []
    try:
        reader = csv.reader(io.StringIO(text, newline=""))
        got = next(reader, None)
        if got is None or [h.strip() for h in got] != header:
            raise IngestError(f"{name}: malformed header {got!r}, expected {header!r}")
        n_read = 0
        for row in reader:
            if not row:
                continue
            n_read += 1
            line = reader.line_num
            if len(row) != len(header):
                report.reject(name, line, Reason.PARSE_ERROR, f"expected {len(header)} fields, got {len(row)}")
                continue
            try:
                out.append(build(dict(zip(header, row))))
            except _RowError as exc:
                report.reject(name, line, exc.reason, exc.detail)
            except DomainError as exc:
                report.reject(name, line, Reason.INVARIANT_VIOLATION, str(exc))
    except csv.Error as exc:
        raise IngestError(f"{name}: unreadable CSV ({exc})") from exc
    report.per_file[name] = n_read
    report.rows_read += n_read
    return out


def parse_inhouse_bundle(dir_path) -> tuple[RawCohort, ParseReport]:
    """Parse an in-house CSV bundle directory.

    Returns the cohort together with a report of rows read and rejected.
    Patients referenced by samples but absent from ``metadata.csv`` get an
    empty placeholder :class:`PatientMeta` and a report warning.
    """
    root = Path(dir_path)
    report = ParseReport()
    glucose = _read_table(root / "glucose.csv", GLUCOSE_HEADER, _glucose_row, report)
    vitals = _read_table(root / "vitals.csv", VITALS_HEADER, _vital_row, report)
    logbook = _read_table(root / "logbook.csv", LOGBOOK_HEADER, _logbook_row, report)
    metas = _read_table(root / "metadata.csv", META_HEADER, _meta_row, report)
    meta = {}
    for m in metas:
        if m.patient_id in meta:
            report.warnings.append(f"duplicate metadata for {m.patient_id!r}; keeping the first row")
            continue
        meta[m.patient_id] = m
    cohort = RawCohort(glucose, vitals, logbook, meta, Provenance.INHOUSE_CSV)
    _fill_placeholder_meta(cohort, report)
    return cohort, report


def _fill_placeholder_meta(cohort: RawCohort, report: ParseReport) -> None:
    for pid in cohort.patients():
        if pid not in cohort.meta:
            cohort.meta[pid] = PatientMeta(pid)
            report.warnings.append(f"MISSING_META: placeholder metadata for {pid!r}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_inhouse_bundle(cohort: RawCohort, dir_path) -> Path:
    """Serialise ``cohort`` into the four-file CSV bundle layout."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)

    def dump(name, header, rows):
        with open(root / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    dump("glucose.csv", GLUCOSE_HEADER, (
        (s.patient_id, format_iso_utc(s.t_utc), s.tz_offset_min, s.source.value, _fmt(s.value_mmol_l))
        for s in cohort.glucose
    ))
    dump("vitals.csv", VITALS_HEADER, (
        (s.patient_id, format_iso_utc(s.t_utc), s.tz_offset_min, s.channel, _fmt(s.value), _fmt(s.quality))
        for s in cohort.vitals
    ))
    dump("logbook.csv", LOGBOOK_HEADER, (
        (e.patient_id, format_iso_utc(e.t_utc), e.tz_offset_min, *(_fmt(getattr(e, f)) for f in LOGBOOK_FIELDS))
        for e in cohort.logbook
    ))
    dump("metadata.csv", META_HEADER, (
        (m.patient_id, *(_fmt(getattr(m, f)) for f in META_FIELDS))
        for _, m in sorted(cohort.meta.items())
    ))
    return root


# --------------------------------------------------------------------------
# OhioT1DM-style XML

OHIO_TS_FORMAT = "%d-%m-%Y %H:%M:%S"

OHIO_VITAL_LISTS = {
    "basal": "basal",
    "basis_gsr": "basis_gsr",
    "basis_skin_temperature": "basis_skin_temperature",
    "basis_heart_rate": "basis_heart_rate",
    "basis_steps": "basis_steps",
    "acceleration": "acceleration",
}


def parse_ohio_timestamp(text: str) -> int:
    """Ohio timestamps carry no zone; they are read as local wall-clock time."""
    try:
        dt = datetime.strptime(text, OHIO_TS_FORMAT)
    except (ValueError, TypeError) as exc:
        raise _RowError(Reason.INVALID_TIMESTAMP, f"bad timestamp {text!r}") from exc
    return calendar.timegm(dt.timetuple())


def format_ohio_timestamp(t: int) -> str:
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime(OHIO_TS_FORMAT)


def parse_ohio_xml(file_path) -> tuple[RawCohort, ParseReport]:
    """Parse one OhioT1DM-style patient XML file.

    ``glucose_level`` and ``finger_stick`` become CGM and SMBG samples
    (mg/dL converted to mmol/L); the other recognised lists become vital
    samples; each ``hypo_event`` becomes a value-1 sample on the
    ``hypo_event`` channel. Timestamps are stored with ``tz_offset_min=0``.
    """
    path = Path(file_path)
    name = path.name
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise IngestError(f"{name}: malformed XML ({exc})") from exc
    except (ValueError, LookupError, RecursionError) as exc:
        raise IngestError(f"{name}: unreadable XML ({exc})") from exc
    if root.tag != "patient":
        raise IngestError(f"{name}: root element is {root.tag!r}, expected 'patient'")
    pid = root.get("id")
    if not pid:
        raise IngestError(f"{name}: patient root has no id attribute")

    report = ParseReport()
    cohort = RawCohort(provenance=Provenance.OHIO_XML)
    n_read = 0
    for child in root:
        tag = child.tag
        if tag not in ("glucose_level", "finger_stick", "hypo_event") and tag not in OHIO_VITAL_LISTS:
            continue
        for event in child:
            if event.tag != "event":
                continue
            n_read += 1
            try:
                t = parse_ohio_timestamp(event.get("ts"))
                if tag == "hypo_event":
                    cohort.vitals.append(VitalSample(pid, t, HYPO_EVENT, 1.0))
                    continue
                raw = event.get("value")
                if raw is None:
                    raise _RowError(Reason.PARSE_ERROR, f"{tag}: missing value attribute")
                value = _float(raw, tag)
                if tag in ("glucose_level", "finger_stick"):
                    source = Source.CGM if tag == "glucose_level" else Source.SMBG
                    cohort.glucose.append(GlucoseSample(pid, t, 0, source, mgdl_to_mmol(value)))
                else:
                    cohort.vitals.append(VitalSample(pid, t, OHIO_VITAL_LISTS[tag], value))
            except _RowError as exc:
                report.reject(name, n_read, exc.reason, exc.detail)
            except DomainError as exc:
                report.reject(name, n_read, Reason.INVARIANT_VIOLATION, f"{tag}: {exc}")
    report.rows_read = n_read
    report.per_file[name] = n_read

    weight = None
    try:
        w = float(root.get("weight", "nan"))
        if math.isfinite(w) and w > 0:
            weight = w
    except ValueError:
        report.warnings.append(f"{name}: ignoring unparseable weight attribute")
    cohort.meta[pid] = PatientMeta(pid, weight=weight)
    return cohort, report


def write_ohio_xml(cohort: RawCohort, patient_id: str, file_path) -> Path:
    """Write one patient's glucose and vital records in the Ohio XML layout.

    Values go back to mg/dL; the conversion round-trips within floating
    point error, not bit-exactly.
    """
    root = ET.Element("patient", id=patient_id)
    meta = cohort.meta.get(patient_id)
    if meta is not None and meta.weight is not None:
        root.set("weight", repr(meta.weight))
    lists = {tag: ET.SubElement(root, tag) for tag in
             ("glucose_level", "finger_stick", "basal", "basis_gsr", "basis_skin_temperature",
              "hypo_event", "basis_heart_rate", "basis_steps", "acceleration")}
    for s in cohort.glucose:
        if s.patient_id != patient_id or s.source is Source.ISCGM:
            continue
        tag = "glucose_level" if s.source is Source.CGM else "finger_stick"
        ET.SubElement(lists[tag], "event", ts=format_ohio_timestamp(s.t_local),
                      value=repr(s.value_mmol_l * MGDL_PER_MMOL))
    for s in cohort.vitals:
        if s.patient_id != patient_id or s.channel not in lists:
            continue
        attrs = {"ts": format_ohio_timestamp(s.t_local)}
        if s.channel != HYPO_EVENT:
            attrs["value"] = repr(s.value)
        ET.SubElement(lists[s.channel], "event", **attrs)
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)
    return path


def merge_cohorts(cohorts, provenance: Provenance | None = None) -> RawCohort:
    out = RawCohort(provenance=provenance or cohorts[0].provenance)
    for c in cohorts:
        out.glucose.extend(c.glucose)
        out.vitals.extend(c.vitals)
        out.logbook.extend(c.logbook)
        for pid, m in c.meta.items():
            out.meta.setdefault(pid, m)
    return out


def load_ohio_directory(dir_path) -> tuple[RawCohort, dict[str, int], ParseReport]:
    """Parse every ``*-train.xml`` / ``*-test.xml`` file in a directory.

    Returns the merged cohort, a map from patient id to the first local
    timestamp of its test file (nights at or after it belong to the test
    split), and a merged report.
    """
    root = Path(dir_path)
    parts, report = [], ParseReport()
    test_start: dict[str, int] = {}
    for path in sorted(root.glob("*.xml")):
        stem = path.stem
        if not (stem.endswith("-train") or stem.endswith("-test")):
            continue
        cohort, rep = parse_ohio_xml(path)
        parts.append(cohort)
        report.rows_read += rep.rows_read
        report.rows_rejected += rep.rows_rejected
        report.rejections.extend(rep.rejections)
        report.warnings.extend(rep.warnings)
        report.per_file.update(rep.per_file)
        if stem.endswith("-test"):
            times = [s.t_utc for s in cohort.glucose]
            pid = next(iter(cohort.meta))
            if times:
                test_start[pid] = min(min(times), test_start.get(pid, min(times)))
    if not parts:
        raise IngestError(f"no *-train.xml / *-test.xml files in {root}")
    return merge_cohorts(parts, Provenance.OHIO_XML), test_start, report


def bundle_exists(dir_path) -> bool:
    return all(os.path.isfile(os.path.join(dir_path, n))
               for n in ("glucose.csv", "vitals.csv", "logbook.csv", "metadata.csv"))

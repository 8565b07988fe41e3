from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nocturne.errors import ConfigurationError
from nocturne.ingest import GlucoseSample, PatientMeta, RawCohort, Source
from nocturne.labeling import (
    NightLabel, Trigger, infer_interval, label_cohort, label_night, label_samples, read_labels,
    write_labels,
)
from nocturne.timegrid import DAY_S, day_number

from oracles import label_oracle

D = date(2023, 7, 3)
NIGHT = day_number(D) * DAY_S + 22 * 3600


def _cohort(cgm, smbg=(), step=300, source=Source.CGM, start=NIGHT):
    g = [GlucoseSample("p", start + i * step, 0, source, v) for i, v in enumerate(cgm)]
    g += [GlucoseSample("p", t, 0, Source.SMBG, v) for t, v in smbg]
    return RawCohort(g, meta={"p": PatientMeta("p")})


def test_three_cgm_readings_make_a_run():
    lab = label_night(_cohort([5, 5, 3.5, 3.6, 3.8, 5] + [5] * 90), "p", D)
    assert lab.label and lab.trigger is Trigger.CGM_RUN and lab.evidence_t == NIGHT + 600


def test_alternating_never_qualifies():
    lab = label_night(_cohort([3.5, 4.1] * 54), "p", D)
    assert not lab.label and lab.trigger is Trigger.NONE


def test_smbg_point():
    lab = label_night(_cohort([6.0] * 108, smbg=[(NIGHT + 4 * 3600, 3.2)]), "p", D)
    assert lab.label and lab.trigger is Trigger.SMBG_POINT and lab.evidence_t == NIGHT + 4 * 3600


def test_empty_night_reports_missing():
    report = []
    cohort = _cohort([6.0] * 4, start=NIGHT - 10 * 3600)
    lab = label_night(cohort, "p", D, report=report)
    assert lab == NightLabel("p", D, False, Trigger.NONE, None)
    assert report and report[0].startswith("MISSING_NIGHT")


def test_single_iscgm_reading_is_fifteen_minutes():
    lab = label_night(_cohort([6.0, 3.7] + [6.0] * 34, step=900, source=Source.ISCGM), "p", D)
    assert lab.label and lab.trigger is Trigger.CGM_RUN


def test_threshold_is_strict():
    assert not label_night(_cohort([3.9] * 108, smbg=[(NIGHT + 60, 3.9)]), "p", D).label


def test_gap_breaks_run():
    t = np.array([0, 300, 1200, 1500]) + NIGHT
    g = [GlucoseSample("p", int(x), 0, Source.CGM, 3.5) for x in t]
    g += [GlucoseSample("p", NIGHT + 1800 + 300 * i, 0, Source.CGM, 6.0) for i in range(100)]
    assert not label_night(RawCohort(g, meta={"p": PatientMeta("p")}), "p", D).label


def test_window_is_half_open():
    # Three low readings that end just before 22:00 belong to the previous night.
    lab = label_night(_cohort([3.0, 3.0, 3.0] + [6.0] * 105, start=NIGHT - 900), "p", D)
    assert not lab.label


def test_bad_parameters():
    with pytest.raises(ConfigurationError):
        label_night(_cohort([5.0]), "p", D, threshold=0)
    with pytest.raises(ConfigurationError):
        label_samples([], [], [], [], 300, run_minutes=0)


def test_infer_interval_snaps():
    assert infer_interval(np.arange(10) * 290) == (300.0, True)
    assert infer_interval(np.arange(10) * 880) == (900.0, True)
    assert infer_interval(np.arange(10) * 600) == (600.0, False)


def test_labels_csv_round_trip(tmp_path):
    labels = [NightLabel("p", D, True, Trigger.SMBG_POINT, 5), NightLabel("q", D, False, Trigger.NONE)]
    write_labels(labels, tmp_path / "l.csv")
    assert read_labels(tmp_path / "l.csv") == labels
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "patient_id,date,label,trigger,evidence_t"


def test_label_cohort_covers_each_night():
    cohort = _cohort([6.0] * (108 + 288))
    assert [l.date for l in label_cohort(cohort)] == [D, date(2023, 7, 4)]


night_values = st.lists(st.sampled_from([3.0, 3.5, 3.89, 3.9, 3.91, 4.5, 7.0]), min_size=0, max_size=200)


@settings(max_examples=300, deadline=None)
@given(night_values, st.lists(st.tuples(st.integers(0, 9 * 3600 - 1), st.sampled_from([3.2, 3.9, 5.0])),
                              max_size=3),
       st.sampled_from([300, 900]), st.lists(st.integers(0, 199), max_size=4))
def test_matches_oracle(values, smbg, step, drops):
    t = [NIGHT + i * step for i in range(len(values)) if i not in drops]
    v = [x for i, x in enumerate(values) if i not in drops]
    t = [x for x in t if x < NIGHT + 9 * 3600]
    v = v[:len(t)]
    smbg = sorted((NIGHT + dt, x) for dt, x in smbg)
    got = label_samples(np.array(t, dtype=float), np.array(v), np.array([s[0] for s in smbg], dtype=float),
                        np.array([s[1] for s in smbg]), float(step))
    want = label_oracle(t, v, [s[0] for s in smbg], [s[1] for s in smbg], step)
    assert (got[0], got[1].value, got[2]) == want


@settings(max_examples=200, deadline=None)
@given(night_values.filter(bool), st.data())
def test_lowering_never_clears_label(values, data):
    t = np.array([NIGHT + 300.0 * i for i in range(len(values))])
    v = np.array(values)
    before = label_samples(t, v, [], [], 300.0)[0]
    i = data.draw(st.integers(0, len(values) - 1))
    lowered = v.copy()
    lowered[i] -= data.draw(st.floats(0, 2))
    after = label_samples(t, lowered, [], [], 300.0)[0]
    assert after or not before

import shutil
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings, strategies as st

from nocturne.errors import DomainError, IngestError
from nocturne.ingest import (
    GlucoseSample, LogbookEntry, PatientMeta, Provenance, RawCohort, Reason, Source, VitalSample,
    load_ohio_directory, mgdl_to_mmol, parse_inhouse_bundle, parse_ohio_xml, write_inhouse_bundle,
    write_ohio_xml,
)
from nocturne.synthgen import generate_cohort, get_profile


class TestMgdlToMmol:
    def test_zero(self):
        assert mgdl_to_mmol(0) == 0.0

    def test_threshold_value(self):
        assert mgdl_to_mmol(70) == pytest.approx(70 / 18.016, abs=1e-12)
        assert mgdl_to_mmol(70) == pytest.approx(3.8854, abs=1e-4)

    def test_ten_mmol(self):
        assert mgdl_to_mmol(180.16) == pytest.approx(10.0, abs=1e-9)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            mgdl_to_mmol(-1)


class TestRecordInvariants:
    def test_glucose_range(self):
        with pytest.raises(DomainError):
            GlucoseSample("p", 0, 0, Source.CGM, 0.0)
        with pytest.raises(DomainError):
            GlucoseSample("p", 0, 0, Source.CGM, 50.0)

    def test_tz_bounds(self):
        GlucoseSample("p", 0, -720, Source.CGM, 5.0)
        GlucoseSample("p", 0, 840, Source.CGM, 5.0)
        with pytest.raises(DomainError):
            GlucoseSample("p", 0, 841, Source.CGM, 5.0)

    def test_unknown_channel(self):
        with pytest.raises(DomainError):
            VitalSample("p", 0, "not_a_channel", 1.0)

    def test_negative_dose(self):
        with pytest.raises(DomainError):
            LogbookEntry("p", 0, basal_insulin=-1.0)

    def test_bmi_consistency(self):
        PatientMeta("p", weight=50.0, height=160.0, bmi=50 / 1.6 ** 2 * 1.04)
        with pytest.raises(DomainError):
            PatientMeta("p", weight=50.0, height=160.0, bmi=50 / 1.6 ** 2 * 1.06)

    def test_positive_anthropometrics(self):
        with pytest.raises(DomainError):
            PatientMeta("p", age=0.0)


class TestInhouseBundle:
    def test_header_only(self, fixtures):
        cohort, report = parse_inhouse_bundle(fixtures / "bundle_empty")
        assert len(cohort.glucose) == 0 and report.rows_read == 0

    def test_bad_value_row(self, fixtures):
        cohort, report = parse_inhouse_bundle(fixtures / "bundle_bad_value")
        assert len(cohort.glucose) == 2
        assert report.reasons() == {Reason.PARSE_ERROR: 1}

    def test_bad_tz_row(self, fixtures):
        cohort, report = parse_inhouse_bundle(fixtures / "bundle_bad_tz")
        assert len(cohort.glucose) == 1
        assert report.reasons() == {Reason.INVARIANT_VIOLATION: 1}

    def test_missing_file_is_fatal(self, fixtures, tmp_path):
        shutil.copytree(fixtures / "bundle_valid", tmp_path / "b")
        (tmp_path / "b" / "vitals.csv").unlink()
        with pytest.raises(IngestError):
            parse_inhouse_bundle(tmp_path / "b")

    def test_malformed_header_is_fatal(self, fixtures, tmp_path):
        shutil.copytree(fixtures / "bundle_valid", tmp_path / "b")
        (tmp_path / "b" / "glucose.csv").write_text("patient,time\n")
        with pytest.raises(IngestError):
            parse_inhouse_bundle(tmp_path / "b")

    def test_round_trip_fixture(self, fixtures, tmp_path):
        cohort, _ = parse_inhouse_bundle(fixtures / "bundle_valid")
        write_inhouse_bundle(cohort, tmp_path)
        again, report = parse_inhouse_bundle(tmp_path)
        assert report.rows_rejected == 0
        assert cohort.same_records(again)

    def test_round_trip_synthetic(self, tmp_path):
        cohort = generate_cohort(get_profile("inhouse-like", n_patients=2, nights_per_patient=3, seed=4))
        write_inhouse_bundle(cohort, tmp_path)
        again, _ = parse_inhouse_bundle(tmp_path)
        assert cohort.same_records(again)

    def test_placeholder_meta(self, fixtures, tmp_path):
        shutil.copytree(fixtures / "bundle_valid", tmp_path / "b")
        meta = (tmp_path / "b" / "metadata.csv").read_text().splitlines()
        (tmp_path / "b" / "metadata.csv").write_text("\n".join(meta[:2]) + "\n")
        cohort, report = parse_inhouse_bundle(tmp_path / "b")
        assert set(cohort.meta) == set(cohort.patients())
        assert report.warnings


class TestOhioXml:
    def test_single_glucose_event(self, fixtures):
        cohort, _ = parse_ohio_xml(fixtures / "ohio_one_glucose.xml")
        (s,) = cohort.glucose
        assert s.source is Source.CGM and s.value_mmol_l == pytest.approx(3.8854, abs=1e-4)
        assert s.tz_offset_min == 0

    def test_no_finger_stick_list(self, fixtures):
        cohort, report = parse_ohio_xml(fixtures / "ohio_one_glucose.xml")
        assert not [s for s in cohort.glucose if s.source is Source.SMBG]
        assert report.rows_rejected == 0

    def test_invalid_calendar_date(self, fixtures):
        cohort, report = parse_ohio_xml(fixtures / "ohio_bad_timestamp.xml")
        assert len(cohort.glucose) == 1
        assert report.reasons() == {Reason.INVALID_TIMESTAMP: 1}

    def test_missing_id_is_fatal(self, fixtures):
        with pytest.raises(IngestError):
            parse_ohio_xml(fixtures / "ohio_missing_id.xml")

    def test_all_lists(self, fixtures):
        cohort, _ = parse_ohio_xml(fixtures / "ohio_valid.xml")
        assert cohort.provenance is Provenance.OHIO_XML
        assert sum(s.source is Source.SMBG for s in cohort.glucose) == 1
        hypo = [v for v in cohort.vitals if v.channel == "hypo_event"]
        assert len(hypo) == 1 and hypo[0].value == 1.0
        assert {v.channel for v in cohort.vitals} == {
            "basal", "basis_gsr", "basis_skin_temperature", "hypo_event", "basis_heart_rate", "basis_steps"}

    def test_round_trip_fixture(self, fixtures, tmp_path):
        cohort, _ = parse_ohio_xml(fixtures / "ohio_valid.xml")
        write_ohio_xml(cohort, "559", tmp_path / "x.xml")
        again, _ = parse_ohio_xml(tmp_path / "x.xml")
        assert len(again.glucose) == len(cohort.glucose)
        for a, b in zip(sorted(cohort.glucose, key=lambda s: (s.t_utc, s.source.value)),
                        sorted(again.glucose, key=lambda s: (s.t_utc, s.source.value))):
            assert (a.t_utc, a.source) == (b.t_utc, b.source)
            assert a.value_mmol_l == pytest.approx(b.value_mmol_l, rel=1e-12)
        assert sorted(cohort.vitals, key=repr) == sorted(again.vitals, key=repr)

    def test_cross_format_units_agree(self, tmp_path):
        mgdl = 123.4
        (tmp_path / "x.xml").write_text(
            f'<patient id="a"><glucose_level><event ts="01-01-2020 00:00:00" value="{mgdl}"/>'
            "</glucose_level></patient>")
        xml_value = parse_ohio_xml(tmp_path / "x.xml")[0].glucose[0].value_mmol_l
        cohort = RawCohort([GlucoseSample("a", 0, 0, Source.CGM, mgdl / 18.016)], meta={"a": PatientMeta("a")})
        write_inhouse_bundle(cohort, tmp_path / "b")
        csv_value = parse_inhouse_bundle(tmp_path / "b")[0].glucose[0].value_mmol_l
        assert abs(xml_value - csv_value) <= 1e-9

    def test_directory_split(self, tmp_path):
        for part, ts in (("train", "01-01-2020 22:00:00"), ("test", "05-01-2020 22:00:00")):
            (tmp_path / f"7-{part}.xml").write_text(
                f'<patient id="7"><glucose_level><event ts="{ts}" value="100"/></glucose_level></patient>')
        cohort, test_start, _ = load_ohio_directory(tmp_path)
        assert len(cohort.glucose) == 2
        assert test_start == {"7": max(s.t_utc for s in cohort.glucose)}


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=400))
def test_xml_parser_never_crashes(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("fz") / "f.xml"
    path.write_bytes(data)
    try:
        parse_ohio_xml(path)
    except IngestError:
        pass


@settings(max_examples=200, deadline=None)
@given(st.lists(st.text(max_size=12), min_size=5, max_size=5))
def test_csv_row_never_crashes(tmp_path_factory, cells):
    root = tmp_path_factory.mktemp("fz")
    for name, header in (("vitals", "patient_id,timestamp_utc,tz_offset_min,channel,value,quality"),
                         ("metadata", "patient_id,gender,age,weight,height,bmi,basal_percentage,basal_total,hba1c,tdd")):
        (root / f"{name}.csv").write_text(header + "\n")
    from nocturne.ingest import LOGBOOK_HEADER
    (root / "logbook.csv").write_text(",".join(LOGBOOK_HEADER) + "\n")
    row = ",".join('"' + c.replace('"', '""') + '"' for c in cells)
    (root / "glucose.csv").write_text("patient_id,timestamp_utc,tz_offset_min,source,value_mmol_l\n" + row + "\n",
                                      encoding="utf-8", errors="surrogatepass")
    try:
        cohort, report = parse_inhouse_bundle(root)
    except (IngestError, UnicodeEncodeError):
        return
    assert len(cohort.glucose) + report.rows_rejected == report.rows_read


def test_xml_element_tree_output_is_valid(fixtures, tmp_path):
    cohort, _ = parse_ohio_xml(fixtures / "ohio_valid.xml")
    write_ohio_xml(cohort, "559", tmp_path / "x.xml")
    assert ET.parse(tmp_path / "x.xml").getroot().get("id") == "559"


def test_unknown_xml_encoding_is_an_ingest_error(tmp_path):
    path = tmp_path / "enc.xml"
    path.write_bytes(b'<?xml version="1.0" encoding="uf-8"?><patient id="1"/>')
    with pytest.raises(IngestError):
        parse_ohio_xml(path)

import json
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nocturne.errors import ConfigurationError, FeatureUndefined
from nocturne.features import (
    FEATURE_SETS, DesignMatrix, FeatureSetName, Standardizer, build_design_matrix, daily_aggregates,
    dump_spec, get_feature_set, personalize_glucose, personalize_glucose_zscored,
)
from nocturne.ingest import PatientMeta, RawCohort
from nocturne.labeling import label_cohort
from nocturne.synthgen import generate_cohort, get_profile

from oracles import daily_oracle

FIELDS = ("cv", "liability_index", "sd_first_diff", "daily_min", "evening_peak", "evening_low", "linreg_slope")


@pytest.fixture(scope="module")
def cohort():
    return generate_cohort(get_profile("inhouse-like", n_patients=3, nights_per_patient=3, seed=2))


@pytest.fixture(scope="module")
def labels(cohort):
    return label_cohort(cohort)


class TestDailyAggregates:
    def test_constant(self):
        a = daily_aggregates(np.full(48, 5.0), np.ones(48, bool))
        assert (a.cv, a.liability_index, a.sd_first_diff, a.daily_min, a.linreg_slope) == (0, 0, 0, 5.0, 0)

    def test_hand_case(self):
        series, mask = np.zeros(48), np.zeros(48, bool)
        series[:3], mask[:3] = [4, 6, 5], True
        a = daily_aggregates(series, mask)
        assert a.cv == pytest.approx(0.2, abs=1e-12)
        assert a.liability_index == 1.0
        assert a.sd_first_diff == pytest.approx(2.1213203435596424, abs=1e-9)
        assert a.linreg_slope == pytest.approx(0.5, abs=1e-12)
        assert not a.evening_defined

    def test_evening_range(self):
        series, mask = np.full(48, 9.0), np.ones(48, bool)
        mask[36:] = False
        series[[36, 40, 47]] = [7.2, 6.1, 8.0]
        mask[[36, 40, 47]] = True
        a = daily_aggregates(series, mask)
        assert (a.evening_peak, a.evening_low) == (8.0, 6.1)

    def test_undefined(self):
        mask = np.zeros(48, bool)
        mask[3] = True
        a = daily_aggregates(np.full(48, 5.0), mask)
        assert not a.defined and a.cv == 0.0

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(1.0, 25.0), min_size=48, max_size=48), st.lists(st.booleans(), min_size=48, max_size=48))
    def test_matches_oracle(self, values, mask):
        values, mask = np.array(values), np.array(mask)
        want = daily_oracle(values, mask)
        got = daily_aggregates(values, mask)
        if want is None:
            assert not got.defined
            return
        for f in FIELDS:
            assert getattr(got, f) == pytest.approx(want[f], rel=1e-9, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(1.0, 25.0), min_size=48, max_size=48), st.lists(st.booleans(), min_size=48, max_size=48),
           st.floats(0.1, 10.0))
    def test_scaling(self, values, mask, c):
        values, mask = np.array(values), np.array(mask)
        a, b = daily_aggregates(values, mask), daily_aggregates(c * values, mask)
        assert b.cv == pytest.approx(a.cv, rel=1e-9, abs=1e-12)
        assert b.liability_index == pytest.approx(c * c * a.liability_index, rel=1e-9, abs=1e-12)
        assert b.sd_first_diff == pytest.approx(c * a.sd_first_diff, rel=1e-9, abs=1e-12)
        assert b.linreg_slope == pytest.approx(c * a.linreg_slope, rel=1e-9, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(1.0, 25.0), min_size=48, max_size=48), st.lists(st.booleans(), min_size=48, max_size=48))
    def test_ordering_invariants(self, values, mask):
        a = daily_aggregates(np.array(values), np.array(mask))
        assert a.cv >= 0 and a.sd_first_diff >= 0 and a.liability_index >= 0
        if a.evening_defined:
            assert a.daily_min <= a.evening_low <= a.evening_peak


class TestPersonalize:
    meta = PatientMeta("p", age=10.0, height=140.0, weight=35.0, bmi=17.9)

    def test_zero(self):
        assert personalize_glucose(0.0, self.meta) == 0.0

    def test_hand_case(self):
        assert personalize_glucose(5.0, self.meta) == pytest.approx(1019.5, abs=1e-9)

    def test_identity_factor(self):
        # PatientMeta rejects non-positive anthropometrics, so build the zero case directly.
        zero = PatientMeta.__new__(PatientMeta)
        for name, value in (("patient_id", "z"), ("age", 0.0), ("height", 0.0), ("weight", 0.0), ("bmi", 0.0)):
            object.__setattr__(zero, name, value)
        assert personalize_glucose(5.0, zero) == 5.0

    def test_missing_field(self):
        with pytest.raises(FeatureUndefined):
            personalize_glucose(5.0, PatientMeta("p", age=10.0))

    def test_zscored(self):
        stats = {"age": (10.0, 2.0), "height": (140.0, 10.0), "weight": (35.0, 5.0), "bmi": (17.9, 1.0)}
        assert personalize_glucose_zscored(5.0, self.meta, stats) == 5.0


class TestRegistry:
    def test_all_counts(self):
        spec = FEATURE_SETS[FeatureSetName.ALL]
        assert (len(spec.temporal_channels), len(spec.static_features)) == (21, 29)

    def test_registry_counts(self):
        counts = {name.value: (len(s.temporal_channels), len(s.static_features)) for name, s in FEATURE_SETS.items()}
        assert counts == {
            "ALL": (21, 29), "EVERION_DAILY_ONLY": (2, 16), "GLUCOSE_NORMAL": (5, 19),
            "GLUCOSE_PERSONALIZED": (4, 10), "NON_AGGREGATED_DAILY": (20, 4), "MARX2023": (10, 19),
            "REDUCED": (12, 19),
        }
        for spec in FEATURE_SETS.values():
            assert len(set(spec.static_features)) == len(spec.static_features)
            assert len(set(spec.temporal_channels)) == len(spec.temporal_channels)

    def test_lookup(self):
        assert get_feature_set("glucose-personalized").personalized
        assert get_feature_set(FeatureSetName.REDUCED).name is FeatureSetName.REDUCED
        with pytest.raises(ConfigurationError):
            get_feature_set("nope")

    def test_dump(self):
        doc = json.loads(dump_spec("MARX2023"))
        assert doc["name"] == "MARX2023" and doc["n_static"] == len(doc["static_features"])


class TestDesignMatrix:
    def test_all_shape(self, cohort, labels):
        dm = build_design_matrix(cohort, labels, get_feature_set("ALL"))
        assert dm.x_temporal.shape == (len(labels), 48, 21) and dm.x_static.shape == (len(labels), 29)
        assert np.isfinite(dm.x_temporal).all() and np.isfinite(dm.x_static).all()
        assert dm.y.tolist() == [l.label for l in labels]

    def test_personalized_channel(self, cohort, labels):
        plain = build_design_matrix(cohort, labels, get_feature_set("GLUCOSE_NORMAL"))
        pers = build_design_matrix(cohort, labels, get_feature_set("GLUCOSE_PERSONALIZED"))
        for i in (0, len(labels) - 1):
            meta = cohort.meta[labels[i].patient_id]
            for b in (0, 20, 47):
                assert pers.x_temporal[i, b, 0] == pytest.approx(personalize_glucose(plain.x_temporal[i, b, 0], meta))

    def test_single_night(self, cohort, labels):
        dm = build_design_matrix(cohort, labels[:1], get_feature_set("REDUCED"))
        assert dm.x_temporal.shape == (1, 48, 12) and dm.x_static.shape[0] == 1

    def test_missing_channel(self, labels):
        ohio = generate_cohort(get_profile("ohio-like", n_patients=1, nights_per_patient=2, seed=1))
        with pytest.raises(ConfigurationError, match="heart_rate"):
            build_design_matrix(ohio, label_cohort(ohio), get_feature_set("GLUCOSE_NORMAL"))

    def test_sample_order_irrelevant(self, cohort, labels):
        shuffled = RawCohort(cohort.glucose[::-1], cohort.vitals[::-1], cohort.logbook[::-1], dict(cohort.meta))
        a = build_design_matrix(cohort, labels, get_feature_set("REDUCED"))
        b = build_design_matrix(shuffled, labels, get_feature_set("REDUCED"))
        np.testing.assert_allclose(a.x_temporal, b.x_temporal, rtol=1e-12)
        np.testing.assert_allclose(a.x_static, b.x_static, rtol=1e-12)

    def test_save_load(self, cohort, labels, tmp_path):
        dm = build_design_matrix(cohort, labels, get_feature_set("REDUCED")).with_defined_mask()
        dm.save(tmp_path / "m.npz")
        back = DesignMatrix.load(tmp_path / "m.npz")
        np.testing.assert_array_equal(back.x_static, dm.x_static)
        assert back.night_keys == dm.night_keys and back.static_names == dm.static_names

    def test_standardizer_uses_given_rows(self, cohort, labels):
        dm = build_design_matrix(cohort, labels, get_feature_set("REDUCED"))
        rows = np.arange(len(dm) // 2)
        z = Standardizer.fit(dm, rows).apply(dm)
        np.testing.assert_allclose(z.x_static[rows].mean(axis=0), 0, atol=1e-9)

    def test_row_disagreement(self):
        with pytest.raises(ConfigurationError):
            DesignMatrix(np.zeros((2, 48, 1)), np.zeros((1, 1)), [True, False], [("p", date(2020, 1, 1))] * 2,
                         ["glucose"], ["x"])

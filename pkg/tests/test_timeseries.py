"""Timestamp arithmetic, series frames, CSV ingestion and resampling."""

import numpy as np
import pytest

from reservekit import (
    DataQualityError,
    InsufficientDataError,
    NoOverlapError,
    OrderingError,
    OutageRecord,
    ParameterError,
    RecordValidationError,
    SchemaError,
    SeriesFrame,
    SeriesSchema,
    aggregate_series,
    cluster_label,
    day_label,
    format_minute,
    group_by_interval,
    hour_of_week,
    ingest_outages,
    ingest_series,
    parse_minute,
    resample_to_interval,
    write_series,
)

from reference import MONDAY_MINUTE, frame


class TestMinuteParsing:
    def test_round_trip(self):
        minute = parse_minute("2018-01-01T00:00")
        assert minute == MONDAY_MINUTE  # 17,532 days after the epoch
        assert format_minute(minute) == "2018-01-01T00:00"

    def test_space_separator_and_zero_seconds(self):
        assert parse_minute("2018-01-01 06:30:00") == MONDAY_MINUTE + 390

    def test_rejects_sub_minute_precision(self):
        with pytest.raises(RecordValidationError, match="sub-minute"):
            parse_minute("2018-01-01T00:00:30")

    def test_rejects_timezone_aware(self):
        with pytest.raises(RecordValidationError, match="timezone"):
            parse_minute("2018-01-01T00:00+08:00")

    def test_rejects_garbage(self):
        with pytest.raises(RecordValidationError, match="unparseable"):
            parse_minute("not-a-time")

    def test_day_label(self):
        assert day_label(MONDAY_MINUTE + 1439) == "2018-01-01"
        assert day_label(MONDAY_MINUTE + 1440) == "2018-01-02"


class TestHourOfWeek:
    def test_monday_midnight_is_cluster_one(self):
        assert hour_of_week(MONDAY_MINUTE) == 1
        assert hour_of_week(MONDAY_MINUTE + 59) == 1
        assert hour_of_week(MONDAY_MINUTE + 60) == 2

    def test_sunday_last_hour_is_cluster_168(self):
        assert hour_of_week(parse_minute("2018-01-07T23:00")) == 168
        assert hour_of_week(parse_minute("2018-01-07T23:59")) == 168
        assert hour_of_week(parse_minute("2018-01-08T00:00")) == 1  # next Monday

    def test_vectorized(self):
        minutes = MONDAY_MINUTE + 60 * np.arange(168, dtype=np.int64)
        np.testing.assert_array_equal(hour_of_week(minutes), np.arange(1, 169))

    def test_cluster_labels(self):
        assert cluster_label(1) == "Mon 00:00"
        assert cluster_label(168) == "Sun 23:00"
        with pytest.raises(ParameterError):
            cluster_label(0)
        with pytest.raises(ParameterError):
            cluster_label(169)


class TestSeriesFrame:
    def test_driver_strips_qualifier(self):
        plain = frame("wind", "actual", MONDAY_MINUTE, 60, [1.0])
        qualified = frame("wind:plant7", "actual", MONDAY_MINUTE, 60, [1.0])
        assert plain.driver == "wind"
        assert qualified.driver == "wind"

    def test_end_minute_is_exclusive(self):
        f = frame("load", "actual", MONDAY_MINUTE, 15, [1.0, 2.0, 3.0])
        assert f.start_minute == MONDAY_MINUTE
        assert f.end_minute == MONDAY_MINUTE + 45
        assert len(f) == 3

    def test_rejects_unordered_minutes(self):
        with pytest.raises(OrderingError, match="strictly increasing"):
            SeriesFrame("load", "actual", 60, [120, 60], [1.0, 2.0])

    def test_rejects_misaligned_minutes(self):
        with pytest.raises(RecordValidationError, match="aligned"):
            SeriesFrame("load", "actual", 60, [30], [1.0])

    def test_rejects_non_finite_values(self):
        with pytest.raises(RecordValidationError, match="non-finite"):
            SeriesFrame("load", "actual", 60, [60], [np.nan])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ParameterError):
            SeriesFrame("load", "actual", 60, [60, 120], [1.0])

    def test_rejects_unknown_kind(self):
        with pytest.raises(ParameterError, match="kind"):
            SeriesFrame("load", "measured", 60, [60], [1.0])

    def test_arrays_are_write_protected(self):
        f = frame("load", "actual", MONDAY_MINUTE, 60, [1.0, 2.0])
        with pytest.raises(ValueError):
            f.values[0] = 99.0
        with pytest.raises(ValueError):
            f.minutes[0] = 0

    def test_empty_frame_has_no_span(self):
        f = SeriesFrame("load", "actual", 60, [], [])
        with pytest.raises(InsufficientDataError):
            _ = f.start_minute


class TestSeriesIngest:
    schema = SeriesSchema("load", "actual", 60)

    def write(self, tmp_path, rows, header="timestamp,value_mw"):
        path = tmp_path / "series.csv"
        path.write_text("\n".join([header, *rows]) + "\n")
        return path

    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        original = frame("load", "actual", MONDAY_MINUTE, 60, rng.normal(1000.0, 37.123, 48))
        path = tmp_path / "out.csv"
        write_series(original, path)
        again = ingest_series(path, self.schema)
        np.testing.assert_array_equal(again.minutes, original.minutes)
        np.testing.assert_array_equal(again.values, original.values)

    def test_rejects_wrong_header(self, tmp_path):
        path = self.write(tmp_path, ["2018-01-01T00:00,1.0"], header="time,mw")
        with pytest.raises(SchemaError, match="expected header"):
            ingest_series(path, self.schema)

    def test_error_names_offending_row(self, tmp_path):
        rows = [f"{format_minute(MONDAY_MINUTE + 60 * i)},100.0" for i in range(3)]
        rows[2] = "2018-01-01T02:00,not-a-number"
        path = self.write(tmp_path, rows)
        with pytest.raises(RecordValidationError, match="row 4"):
            ingest_series(path, self.schema)

    def test_rejects_negative_actual(self, tmp_path):
        path = self.write(tmp_path, ["2018-01-01T00:00,-5.0"])
        with pytest.raises(RecordValidationError, match="negative"):
            ingest_series(path, self.schema)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="input file not found"):
            ingest_series(tmp_path / "absent.csv", self.schema)

    def test_blank_lines_are_skipped(self, tmp_path):
        rows = ["2018-01-01T00:00,1.0", "", "2018-01-01T01:00,2.0"]
        path = self.write(tmp_path, rows)
        assert len(ingest_series(path, self.schema)) == 2

    def test_day_gate_rejects_sparse_day(self, tmp_path):
        # two hourly days; dropping two samples from day two is an 8 % hole
        minutes = [MONDAY_MINUTE + 60 * i for i in range(48) if i not in (30, 31)]
        rows = [f"{format_minute(m)},100.0" for m in minutes]
        path = self.write(tmp_path, rows)
        with pytest.raises(DataQualityError, match="2018-01-02"):
            ingest_series(path, self.schema)

    def test_day_gate_tolerates_small_gap(self, tmp_path):
        # one missing hour out of 24 is ~4 %, inside the 5 % allowance
        minutes = [MONDAY_MINUTE + 60 * i for i in range(48) if i != 30]
        rows = [f"{format_minute(m)},100.0" for m in minutes]
        path = self.write(tmp_path, rows)
        assert len(ingest_series(path, self.schema)) == 47


class TestGrouping:
    def test_groups_match_naive_grouping(self):
        rng = np.random.default_rng(5)
        # gappy minute series spanning several hours
        minutes = MONDAY_MINUTE + np.sort(rng.choice(6 * 60, size=240, replace=False))
        values = rng.normal(size=minutes.size)
        f = SeriesFrame("load", "actual", 1, minutes, values)
        groups = group_by_interval(f, 60)

        expected: dict[int, list[float]] = {}
        for minute, value in zip(minutes, values):
            expected.setdefault(int(minute) - int(minute) % 60, []).append(float(value))
        starts = sorted(expected)
        np.testing.assert_array_equal(groups.start_minutes, starts)
        np.testing.assert_array_equal(groups.counts, [len(expected[s]) for s in starts])
        np.testing.assert_allclose(groups.sums, [sum(expected[s]) for s in starts], rtol=1e-12)
        assert groups.expected_count == 60
        np.testing.assert_array_equal(groups.complete, [len(expected[s]) == 60 for s in starts])

    def test_resample_keeps_complete_intervals_only(self):
        values = np.arange(180, dtype=np.float64)
        f = frame("load", "actual", MONDAY_MINUTE, 1, values)
        # drop one minute inside the second hour
        keep = np.ones(180, dtype=bool)
        keep[90] = False
        gappy = SeriesFrame("load", "actual", 1, f.minutes[keep], f.values[keep])
        hourly = resample_to_interval(gappy, 60)
        np.testing.assert_array_equal(hourly.minutes, [MONDAY_MINUTE, MONDAY_MINUTE + 120])
        np.testing.assert_allclose(
            hourly.values, [values[:60].mean(), values[120:].mean()], rtol=1e-12
        )
        assert hourly.resolution_minutes == 60

    def test_resample_requires_divisor_interval(self):
        f = frame("load", "actual", MONDAY_MINUTE, 1, np.ones(120))
        with pytest.raises(ParameterError):
            resample_to_interval(f, 7)

    def test_aggregate_sums_on_common_timestamps(self):
        a = frame("wind:a", "actual", MONDAY_MINUTE, 60, [1.0, 2.0, 3.0])
        b = frame("wind:b", "actual", MONDAY_MINUTE + 60, 60, [10.0, 20.0, 30.0])
        total = aggregate_series([a, b], signal_id="wind")
        np.testing.assert_array_equal(total.minutes, [MONDAY_MINUTE + 60, MONDAY_MINUTE + 120])
        np.testing.assert_allclose(total.values, [12.0, 23.0])
        assert total.signal_id == "wind"

    def test_aggregate_disjoint_spans(self):
        a = frame("wind:a", "actual", MONDAY_MINUTE, 60, [1.0])
        b = frame("wind:b", "actual", MONDAY_MINUTE + 600, 60, [1.0])
        with pytest.raises(NoOverlapError):
            aggregate_series([a, b])

    def test_aggregate_single_frame_is_identity(self):
        a = frame("wind", "actual", MONDAY_MINUTE, 60, [1.0, 2.0])
        total = aggregate_series([a])
        np.testing.assert_array_equal(total.values, a.values)


class TestOutageIngest:
    def write(self, tmp_path, rows):
        path = tmp_path / "outages.csv"
        header = "unit_id,rated_mw,start,end,cause"
        path.write_text("\n".join([header, *rows]) + "\n")
        return path

    def test_parses_records(self, tmp_path):
        path = self.write(
            tmp_path,
            [
                "G1,150,2018-01-02T04:00,2018-01-03T04:00,forced",
                "G2,200.5,2018-01-05T00:00,2018-01-06T12:00,Planned",
            ],
        )
        records = ingest_outages(path)
        assert [r.unit_id for r in records] == ["G1", "G2"]
        assert records[0].cause == "forced"
        assert records[1].cause == "planned"  # cause is normalized to lower case
        assert records[0].duration_hours == pytest.approx(24.0)
        assert records[1].rated_mw == pytest.approx(200.5)

    def test_rejects_unknown_cause(self, tmp_path):
        path = self.write(tmp_path, ["G1,150,2018-01-02T04:00,2018-01-03T04:00,maybe"])
        with pytest.raises(RecordValidationError, match="cause"):
            ingest_outages(path)

    def test_rejects_inverted_interval(self, tmp_path):
        path = self.write(tmp_path, ["G1,150,2018-01-03T04:00,2018-01-02T04:00,forced"])
        with pytest.raises(RecordValidationError, match="ends at or before"):
            ingest_outages(path)

    def test_rejects_bad_rated(self, tmp_path):
        path = self.write(tmp_path, ["G1,big,2018-01-02T04:00,2018-01-03T04:00,forced"])
        with pytest.raises(RecordValidationError, match="rated_mw"):
            ingest_outages(path)

    def test_header_only_file_is_empty_fleet(self, tmp_path):
        assert ingest_outages(self.write(tmp_path, [])) == []

    def test_record_validation(self):
        with pytest.raises(RecordValidationError, match="positive"):
            OutageRecord("G1", -1.0, 0, 60, "forced")

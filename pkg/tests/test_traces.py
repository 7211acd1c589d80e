import pytest

from plantrecon.traces import (
    EstimateStatus,
    EventDirection,
    IoSample,
    MalformedRowError,
    PositionSeries,
    RtlsSample,
    SignalKind,
    detect_events,
    estimate_position,
    load_io_trace,
    load_rtls_trace,
    match_events,
    split_labeled_segments,
)


def _io(rows):
    return [IoSample(t, tag, v) for (t, tag, v) in rows]


def _rtls(rows):
    return [RtlsSample(*r) for r in rows]


class TestLoadIo:
    def test_three_valid_rows(self, tmp_path):
        p = tmp_path / "io.csv"
        p.write_text("timestamp_ms,tag,value\n1,a,0.0\n2,a,1.0\n3,b,0.0\n")
        samples = load_io_trace(p)
        assert len(samples) == 3
        assert samples[0] == IoSample(1, "a", 0.0)

    def test_non_numeric_value(self, tmp_path):
        p = tmp_path / "io.csv"
        p.write_text("timestamp_ms,tag,value\n1,a,zero\n")
        with pytest.raises(MalformedRowError) as info:
            load_io_trace(p)
        assert info.value.row == 2

    def test_bad_header(self, tmp_path):
        p = tmp_path / "io.csv"
        p.write_text("time,tag,value\n")
        with pytest.raises(MalformedRowError):
            load_io_trace(p)

    def test_non_monotonic_sorted_with_warning(self, tmp_path, caplog):
        p = tmp_path / "io.csv"
        p.write_text("timestamp_ms,tag,value\n5,a,1.0\n1,a,0.0\n")
        with caplog.at_level("WARNING"):
            samples = load_io_trace(p)
        assert [s.timestamp_ms for s in samples] == [1, 5]
        assert any("non-monotonic" in r.message for r in caplog.records)

    def test_mini_fixture_counts(self, tmp_path, mini_plant):
        paths = mini_plant.write_outputs(tmp_path)
        io_samples = load_io_trace(paths["io_csv"])
        rtls_samples = load_rtls_trace(paths["rtls_csv"])
        assert len(io_samples) == mini_plant.ground_truth.counts["ioSamples"]
        assert len(rtls_samples) == mini_plant.ground_truth.counts["rtlsSamples"]


class TestLoadRtls:
    def test_labeled_column_optional(self, tmp_path):
        p = tmp_path / "rtls.csv"
        p.write_text("timestamp_ms,tracker_id,x_m,y_m,z_m\n1,t1,0.0,1.0,2.0\n")
        samples = load_rtls_trace(p)
        assert samples[0].location_label is None
        p2 = tmp_path / "labeled.csv"
        p2.write_text(
            "timestamp_ms,tracker_id,x_m,y_m,z_m,location_label\n1,t1,0.0,1.0,2.0,zoneA\n2,t1,0.0,1.0,2.0,\n"
        )
        samples = load_rtls_trace(p2)
        assert samples[0].location_label == "zoneA"
        assert samples[1].location_label is None

    def test_non_finite_coordinate_rejected(self, tmp_path):
        p = tmp_path / "rtls.csv"
        p.write_text("timestamp_ms,tracker_id,x_m,y_m,z_m\n1,t1,nan,1.0,2.0\n")
        with pytest.raises(MalformedRowError):
            load_rtls_trace(p)


class TestDetectEvents:
    def test_bool_transitions(self):
        samples = _io([(1, "a", 0.0), (2, "a", 0.0), (3, "a", 1.0), (4, "a", 1.0), (5, "a", 0.0)])
        events = detect_events(samples, SignalKind.BOOL)
        assert [(e.timestamp_ms, e.direction) for e in events.events] == [
            (3, EventDirection.RISING),
            (5, EventDirection.FALLING),
        ]

    def test_constant_series_no_events(self):
        samples = _io([(1, "a", 1.0), (2, "a", 1.0), (3, "a", 1.0)])
        assert len(detect_events(samples, SignalKind.BOOL)) == 0

    def test_analog_single_crossing(self):
        samples = _io([(t, "a", float(t)) for t in range(0, 11)])
        events = detect_events(samples, SignalKind.ANALOG, threshold=5.0, hysteresis=1.0)
        assert [e.direction for e in events.events] == [EventDirection.CROSSING]

    def test_analog_hysteresis_suppresses_chatter(self):
        values = [0.0, 5.1, 4.9, 5.1, 4.9, 10.0]
        samples = _io([(i, "a", v) for i, v in enumerate(values)])
        events = detect_events(samples, SignalKind.ANALOG, threshold=5.0, hysteresis=1.0)
        assert len(events.events) == 1  # only the decisive excursion fires


class TestMatchEvents:
    def test_picks_nearest_in_time(self):
        events = detect_events(_io([(900, "a", 0.0), (1000, "a", 1.0)]))
        rtls = _rtls([(990, "t1", 1.0, 0.0, 0.0, None), (1030, "t1", 2.0, 0.0, 0.0, None)])
        series = match_events(events, rtls, 500)
        assert series.points == [(1.0, 0.0, 0.0)]

    def test_event_outside_window_skipped(self):
        events = detect_events(_io([(0, "a", 0.0), (1000, "a", 1.0)]))
        rtls = _rtls([(1600, "t1", 1.0, 0.0, 0.0, None)])
        series = match_events(events, rtls, 500)
        assert len(series) == 0

    def test_tie_broken_by_earlier_then_tracker(self):
        events = detect_events(_io([(0, "a", 0.0), (1000, "a", 1.0)]))
        rtls = _rtls(
            [
                (990, "t2", 1.0, 0.0, 0.0, None),
                (1010, "t1", 2.0, 0.0, 0.0, None),
            ]
        )
        assert match_events(events, rtls, 500).points == [(1.0, 0.0, 0.0)]
        rtls = _rtls(
            [
                (1000, "t2", 3.0, 0.0, 0.0, None),
                (1000, "t1", 4.0, 0.0, 0.0, None),
            ]
        )
        assert match_events(events, rtls, 500).points == [(4.0, 0.0, 0.0)]

    def test_mini_every_sensor_event_matched(self, mini_plant, tmp_path):
        paths = mini_plant.write_outputs(tmp_path)
        io_samples = load_io_trace(paths["io_csv"])
        rtls = load_rtls_trace(paths["rtls_csv"])
        by_tag = {}
        for s in io_samples:
            by_tag.setdefault(s.tag, []).append(s)
        for tag in ("S_occ_1_1", "S_occ_1_2"):
            events = detect_events(by_tag[tag])
            assert len(events) > 0
            series = match_events(events, rtls, 500)
            assert len(series) == len(events)


class TestEstimatePosition:
    def test_mean(self):
        s = PositionSeries("a", [1, 2], [(0.0, 0.0, 0.0), (2.0, 0.0, 0.0)])
        est = estimate_position(s, min_matches=2)
        assert est.status is EstimateStatus.KNOWN
        assert est.mean == (1.0, 0.0, 0.0)

    def test_below_min_matches_unknown(self):
        s = PositionSeries("a", [1], [(1.0, 1.0, 1.0)])
        est = estimate_position(s, min_matches=5)
        assert est.status is EstimateStatus.UNKNOWN
        assert est.mean is None
        assert est.match_count == 1

    def test_identical_points(self):
        s = PositionSeries("a", [1, 2, 3], [(1.0, 2.0, 0.5)] * 3)
        est = estimate_position(s, min_matches=3)
        assert est.mean == (1.0, 2.0, 0.5)

    def test_mean_order_free(self):
        pts = [(1.0, 2.0, 3.0), (4.0, 5.0, 6.0), (7.0, 8.0, 9.0)]
        a = estimate_position(PositionSeries("a", [1, 2, 3], pts), 3)
        b = estimate_position(PositionSeries("a", [1, 2, 3], list(reversed(pts))), 3)
        assert a.mean == b.mean


class TestLabeledSegments:
    def test_runs_split_on_label_change_and_gaps(self):
        rows = [
            (1, "t1", 0.0, 0.0, 0.0, "A"),
            (2, "t1", 0.1, 0.0, 0.0, "A"),
            (3, "t1", 0.2, 0.0, 0.0, None),
            (4, "t1", 0.3, 0.0, 0.0, "B"),
            (5, "t1", 0.4, 0.0, 0.0, "A"),
        ]
        segments = split_labeled_segments(_rtls(rows))
        labels = [(label, len(series)) for label, series in segments]
        assert labels == [("A", 2), ("B", 1), ("A", 1)]

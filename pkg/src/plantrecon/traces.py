"""Recorded IO and material-position traces: ingestion and correlation.

File formats (UTF-8 CSV, ``.`` decimal point, one sample per row):

* IO trace header: ``timestamp_ms,tag,value``
* RTLS trace header: ``timestamp_ms,tracker_id,x_m,y_m,z_m`` with an
  optional trailing ``location_label`` column (training data only).

The correlation chain is: signal samples -> change events -> per-event
nearest-in-time material position -> per-component mean position.
"""

from __future__ import annotations

import csv
import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum

from .errors import DataError

logger = logging.getLogger(__name__)


class TraceError(DataError):
    pass


class MalformedRowError(TraceError):
    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class IoSample:
    timestamp_ms: int
    tag: str
    value: float


@dataclass(frozen=True)
class RtlsSample:
    timestamp_ms: int
    tracker_id: str
    x: float
    y: float
    z: float
    location_label: str | None = None


class EventDirection(str, Enum):
    RISING = "Rising"
    FALLING = "Falling"
    CROSSING = "Crossing"


@dataclass(frozen=True)
class SignalEvent:
    timestamp_ms: int
    direction: EventDirection


@dataclass
class EventSeries:
    tag: str
    events: list[SignalEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class PositionSeries:
    """Time-ordered positions attributed to one component (or tracker)."""

    owner_tag: str
    timestamps_ms: list[int] = field(default_factory=list)
    points: list[tuple[float, float, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def append(self, timestamp_ms: int, point: tuple[float, float, float]) -> None:
        self.timestamps_ms.append(timestamp_ms)
        self.points.append(point)


class EstimateStatus(str, Enum):
    KNOWN = "Known"
    UNKNOWN = "Unknown"


@dataclass
class PositionEstimate:
    owner_tag: str
    mean: tuple[float, float, float] | None
    match_count: int
    status: EstimateStatus


def _open_csv(path, expected_header: list[str], optional: list[str]):
    fh = open(path, encoding="utf-8", newline="")
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise MalformedRowError("empty file, header expected", 1) from None
    base = header[: len(expected_header)]
    extra = header[len(expected_header):]
    if base != expected_header or extra not in ([], optional):
        fh.close()
        raise MalformedRowError(
            f"header must be {','.join(expected_header)}"
            + (f"[,{','.join(optional)}]" if optional else "")
            + f", got {','.join(header)}",
            1,
        )
    return fh, reader, bool(extra)


def load_io_trace(path) -> list[IoSample]:
    """Load and time-sort an IO trace; non-monotonic input is only a warning."""
    fh, reader, _ = _open_csv(path, ["timestamp_ms", "tag", "value"], [])
    samples: list[IoSample] = []
    monotonic = True
    with fh:
        last_ts: dict[str, int] = {}
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRowError(f"expected 3 fields, got {len(row)}", rowno)
            try:
                ts = int(row[0])
                value = float(row[2])
            except ValueError as exc:
                raise MalformedRowError(str(exc), rowno) from None
            tag = row[1]
            if not tag:
                raise MalformedRowError("empty tag name", rowno)
            if tag in last_ts and ts < last_ts[tag]:
                monotonic = False
            last_ts[tag] = ts
            samples.append(IoSample(ts, tag, value))
    if not monotonic:
        logger.warning("%s: non-monotonic timestamps, sorting", path)
    samples.sort(key=lambda s: s.timestamp_ms)
    logger.info("%s: %d IO samples", path, len(samples))
    return samples


def load_rtls_trace(path) -> list[RtlsSample]:
    """Load and time-sort an RTLS trace; the label column is optional."""
    fh, reader, labeled = _open_csv(
        path, ["timestamp_ms", "tracker_id", "x_m", "y_m", "z_m"], ["location_label"]
    )
    samples: list[RtlsSample] = []
    monotonic = True
    last = None
    with fh:
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            want = 6 if labeled else 5
            if len(row) != want:
                raise MalformedRowError(f"expected {want} fields, got {len(row)}", rowno)
            try:
                ts = int(row[0])
                x, y, z = float(row[2]), float(row[3]), float(row[4])
            except ValueError as exc:
                raise MalformedRowError(str(exc), rowno) from None
            for v in (x, y, z):
                if v != v or v in (float("inf"), float("-inf")):
                    raise MalformedRowError("non-finite coordinate", rowno)
            if not row[1]:
                raise MalformedRowError("empty tracker id", rowno)
            label = (row[5] or None) if labeled else None
            if last is not None and ts < last:
                monotonic = False
            last = ts
            samples.append(RtlsSample(ts, row[1], x, y, z, label))
    if not monotonic:
        logger.warning("%s: non-monotonic timestamps, sorting", path)
    samples.sort(key=lambda s: s.timestamp_ms)
    logger.info("%s: %d RTLS samples", path, len(samples))
    return samples


class SignalKind(str, Enum):
    BOOL = "Bool"
    ANALOG = "Analog"


def detect_events(
    samples: list[IoSample],
    kind: SignalKind = SignalKind.BOOL,
    threshold: float = 0.5,
    hysteresis: float = 0.0,
) -> EventSeries:
    """Turn one tag's sample series into a change-event series.

    Bool signals produce Rising on 0->1 and Falling on 1->0. Analog
    signals produce Crossing events through a Schmitt trigger: a crossing
    fires when the value passes ``threshold + hysteresis`` coming from
    below ``threshold - hysteresis`` or vice versa, so noise inside the
    hysteresis band never fires.
    """
    if not samples:
        return EventSeries(tag="", events=[])
    tag = samples[0].tag
    if any(s.tag != tag for s in samples):
        raise TraceError("detect_events expects samples of a single tag")
    if any(b.timestamp_ms < a.timestamp_ms for a, b in zip(samples, samples[1:])):
        raise TraceError("samples must be sorted by timestamp")
    events: list[SignalEvent] = []
    if kind is SignalKind.BOOL:
        prev_on = samples[0].value > 0.5
        for s in samples[1:]:
            on = s.value > 0.5
            if on and not prev_on:
                events.append(SignalEvent(s.timestamp_ms, EventDirection.RISING))
            elif prev_on and not on:
                events.append(SignalEvent(s.timestamp_ms, EventDirection.FALLING))
            prev_on = on
    else:
        hi = threshold + hysteresis
        lo = threshold - hysteresis
        state = None  # 'above' | 'below' | unknown
        for s in samples:
            if s.value >= hi:
                if state == "below":
                    events.append(SignalEvent(s.timestamp_ms, EventDirection.CROSSING))
                state = "above"
            elif s.value <= lo:
                if state == "above":
                    events.append(SignalEvent(s.timestamp_ms, EventDirection.CROSSING))
                state = "below"
    # Equal-timestamp samples can collapse to simultaneous transitions;
    # keep timestamps strictly increasing by dropping repeats.
    deduped: list[SignalEvent] = []
    for e in events:
        if deduped and e.timestamp_ms <= deduped[-1].timestamp_ms:
            continue
        deduped.append(e)
    return EventSeries(tag=tag, events=deduped)


def match_events(
    events: EventSeries,
    rtls: list[RtlsSample],
    window_ms: int = 500,
) -> PositionSeries:
    """Attach the nearest-in-time material position to each signal event.

    Any tracker may supply the position. Events with no sample within
    ``window_ms`` are skipped. Ties on time distance are broken by the
    earlier sample, then by lexicographically smaller tracker id.
    """
    series = PositionSeries(owner_tag=events.tag)
    if not rtls:
        return series
    if any(b.timestamp_ms < a.timestamp_ms for a, b in zip(rtls, rtls[1:])):
        raise TraceError("RTLS samples must be sorted by timestamp")
    times = [s.timestamp_ms for s in rtls]
    for event in events.events:
        lo = bisect_left(times, event.timestamp_ms - window_ms)
        hi = bisect_right(times, event.timestamp_ms + window_ms)
        if lo >= hi:
            continue
        best = min(
            rtls[lo:hi],
            key=lambda s: (abs(s.timestamp_ms - event.timestamp_ms), s.timestamp_ms, s.tracker_id),
        )
        series.append(event.timestamp_ms, (best.x, best.y, best.z))
    return series


def estimate_position(series: PositionSeries, min_matches: int = 5) -> PositionEstimate:
    """Arithmetic-mean position; Unknown when too few events matched."""
    n = len(series.points)
    if n < min_matches:
        return PositionEstimate(series.owner_tag, None, n, EstimateStatus.UNKNOWN)
    sx = sum(p[0] for p in series.points)
    sy = sum(p[1] for p in series.points)
    sz = sum(p[2] for p in series.points)
    return PositionEstimate(
        series.owner_tag, (sx / n, sy / n, sz / n), n, EstimateStatus.KNOWN
    )


def split_labeled_segments(samples: list[RtlsSample]) -> list[tuple[str, PositionSeries]]:
    """Cut a labeled RTLS trace into per-(tracker, label) runs.

    A training segment is a maximal run of consecutive samples of one
    tracker carrying the same non-empty label; unlabeled samples separate
    runs.
    """
    by_tracker: dict[str, list[RtlsSample]] = {}
    for s in samples:
        by_tracker.setdefault(s.tracker_id, []).append(s)
    segments: list[tuple[str, PositionSeries]] = []
    for tracker in sorted(by_tracker):
        run_label: str | None = None
        run: PositionSeries | None = None
        for s in by_tracker[tracker]:
            label = s.location_label
            if label != run_label or label is None:
                if run is not None and len(run) > 0:
                    segments.append((run_label, run))  # type: ignore[arg-type]
                run = PositionSeries(owner_tag=tracker) if label else None
                run_label = label
            if run is not None:
                run.append(s.timestamp_ms, (s.x, s.y, s.z))
        if run is not None and len(run) > 0:
            segments.append((run_label, run))  # type: ignore[arg-type]
    return segments

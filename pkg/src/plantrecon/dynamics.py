"""Dynamics analysis: from recorded traces to physical location groups.

Correlates signal-change events with material positions to estimate where
each component physically sits, then assigns components to location
groups, by default with a 1-NN/DTW classifier trained on a labeled
position data set. The emitted graph fragment uses the same stable node
ids as the PLC analysis so the two merge cleanly.

The classifier's query series for a component is, by default, the
time-ordered series of positions matched to its events. The alternative
reading — classifying over raw tracker trajectory snippets around each
event — is available via ``raw_trajectory_queries``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .clustering import ClusterResult, DbscanParams, KMeansParams, cluster_positions
from .dtw import knn_classify, knn_train
from .graph import Edge, EdgeKind, Node, NodeKind, PropertyGraph, Provenance, node_id
from .traces import (
    EstimateStatus,
    IoSample,
    PositionEstimate,
    PositionSeries,
    RtlsSample,
    SignalKind,
    detect_events,
    estimate_position,
    match_events,
    split_labeled_segments,
)

logger = logging.getLogger(__name__)


@dataclass
class DynamicsParams:
    window_ms: int = 500
    min_matches: int = 5
    band: int | None = None
    mode: str = "classify"  # "classify" | "cluster"
    analog_hysteresis_fraction: float = 0.02
    kmeans: KMeansParams | None = None
    dbscan: DbscanParams | None = None
    raw_trajectory_queries: bool = False
    # Every training segment is resampled to one fixed length: unnormalized
    # DTW sums per-point costs, so mixed-length training series would bias
    # the ranking toward short segments. Also bounds the 1-NN run time.
    training_series_len: int = 32
    training_max_per_class: int = 10


@dataclass
class DynamicsResult:
    fragment: PropertyGraph
    estimates: dict[str, PositionEstimate]
    assignments: dict[str, str]
    matched: dict[str, PositionSeries]
    clustering: ClusterResult | None = None


def _signal_kind(data_type: str) -> SignalKind:
    return SignalKind.BOOL if data_type == "Bool" else SignalKind.ANALOG


def component_event_series(
    io_samples: list[IoSample],
    tag_types: dict[str, str],
    hysteresis_fraction: float,
):
    """Per-tag change events; analog thresholds sit mid-range with a
    hysteresis band sized as a fraction of the observed value range."""
    by_tag: dict[str, list[IoSample]] = {}
    for s in io_samples:
        by_tag.setdefault(s.tag, []).append(s)
    series = {}
    for tag in sorted(by_tag):
        samples = by_tag[tag]
        kind = _signal_kind(tag_types.get(tag, "Bool"))
        if kind is SignalKind.BOOL:
            series[tag] = detect_events(samples, kind)
        else:
            values = [s.value for s in samples]
            lo, hi = min(values), max(values)
            threshold = (lo + hi) / 2.0
            hyst = (hi - lo) * hysteresis_fraction
            series[tag] = detect_events(samples, kind, threshold, hyst)
    return series


def _resample(series: PositionSeries, length: int) -> PositionSeries:
    """Nearest-index resampling to exactly ``length`` points (n >= 1)."""
    n = len(series)
    if n == length:
        return series
    out = PositionSeries(owner_tag=series.owner_tag)
    for i in range(length):
        j = i * (n - 1) // (length - 1) if length > 1 else 0
        out.append(series.timestamps_ms[j], series.points[j])
    return out


def _cap(series: PositionSeries, max_len: int) -> PositionSeries:
    return _resample(series, max_len) if len(series) > max_len else series


def training_segments(
    labeled: list[RtlsSample], params: DynamicsParams
) -> list[tuple[PositionSeries, str]]:
    """Labeled (series, class) pairs, capped per class, uniform length."""
    per_class: dict[str, list[PositionSeries]] = {}
    for label, segment in split_labeled_segments(labeled):
        per_class.setdefault(label, []).append(segment)
    result: list[tuple[PositionSeries, str]] = []
    for label in sorted(per_class):
        segments = sorted(per_class[label], key=len, reverse=True)
        for segment in segments[: params.training_max_per_class]:
            result.append((_resample(segment, params.training_series_len), label))
    return result


def raw_trajectory_query(
    events, rtls: list[RtlsSample], window_ms: int, owner: str
) -> PositionSeries:
    """Alternate query construction: raw samples around each event."""
    series = PositionSeries(owner_tag=owner)
    times = [s.timestamp_ms for s in rtls]
    from bisect import bisect_left, bisect_right

    seen: set[int] = set()
    for event in events.events:
        lo = bisect_left(times, event.timestamp_ms - window_ms)
        hi = bisect_right(times, event.timestamp_ms + window_ms)
        for idx in range(lo, hi):
            if idx not in seen:
                seen.add(idx)
                s = rtls[idx]
                series.append(s.timestamp_ms, (s.x, s.y, s.z))
    return series


def analyze_dynamics(
    io_samples: list[IoSample],
    rtls_samples: list[RtlsSample],
    labeled_samples: list[RtlsSample],
    tag_kinds: dict[str, NodeKind],
    tag_types: dict[str, str],
    root_name: str,
    params: DynamicsParams | None = None,
) -> DynamicsResult:
    """Full dynamics pass over recorded traces.

    ``tag_kinds`` maps tag names to Sensor/Actuator (from the PLC tag
    table); ``tag_types`` maps tag names to their PLC data type. The
    returned fragment carries position labels, MaterialTracker nodes and
    PhysicalGroup membership, rooted at ``SystemRoot:<root_name>``.
    """
    params = params or DynamicsParams()
    events = component_event_series(io_samples, tag_types, params.analog_hysteresis_fraction)

    matched: dict[str, PositionSeries] = {}
    estimates: dict[str, PositionEstimate] = {}
    for tag in sorted(tag_kinds):
        ev = events.get(tag)
        if ev is None or not ev.events:
            series = PositionSeries(owner_tag=tag)
        else:
            series = match_events(ev, rtls_samples, params.window_ms)
        matched[tag] = series
        estimates[tag] = estimate_position(series, params.min_matches)

    assignments: dict[str, str] = {}
    clustering: ClusterResult | None = None
    if params.mode == "cluster":
        method = params.kmeans or params.dbscan
        if method is None:
            method = KMeansParams(k=max(1, len(estimates) // 4), seed=0)
        clustering = cluster_positions(list(estimates.values()), method)
        assignments = dict(clustering.assignments)
    else:
        training = training_segments(labeled_samples, params)
        if not training:
            logger.warning("no labeled training segments; components stay unassigned")
        else:
            model = knn_train(training, params.band)
            for tag in sorted(tag_kinds):
                if estimates[tag].status is not EstimateStatus.KNOWN:
                    continue
                if params.raw_trajectory_queries:
                    query = raw_trajectory_query(
                        events[tag], rtls_samples, params.window_ms, tag
                    )
                else:
                    query = matched[tag]
                if len(query) == 0:
                    continue
                assignments[tag] = knn_classify(model, _cap(query, params.training_series_len))

    fragment = build_physical_groups(assignments, estimates, tag_kinds, root_name)
    _add_trackers(fragment, rtls_samples, root_name)
    return DynamicsResult(fragment, estimates, assignments, matched, clustering)


def build_physical_groups(
    assignments: dict[str, str],
    estimates: dict[str, PositionEstimate] | list[PositionEstimate],
    tag_kinds: dict[str, NodeKind],
    root_name: str,
) -> PropertyGraph:
    """Graph fragment: PhysicalGroup nodes, membership edges, positions."""
    if isinstance(estimates, list):
        estimates = {e.owner_tag: e for e in estimates}
    g = PropertyGraph()
    root_id = node_id(NodeKind.SYSTEM_ROOT, root_name)
    g.add_node(Node(root_id, NodeKind.SYSTEM_ROOT, root_name, {}, Provenance.DYNAMICS_ANALYSIS))

    group_ids: dict[str, str] = {}
    for label in sorted(set(assignments.values())):
        gid = node_id(NodeKind.PHYSICAL_GROUP, label)
        g.add_node(
            Node(gid, NodeKind.PHYSICAL_GROUP, label, {"domain": "mechanic"}, Provenance.DYNAMICS_ANALYSIS)
        )
        g.add_edge(Edge(EdgeKind.CONTAINS, root_id, gid))
        group_ids[label] = gid

    for tag in sorted(tag_kinds):
        kind = tag_kinds[tag]
        est = estimates.get(tag)
        label_map = {}
        if est is not None and est.status is EstimateStatus.KNOWN and est.mean is not None:
            label_map = {
                "position.x": est.mean[0],
                "position.y": est.mean[1],
                "position.z": est.mean[2],
                "matchCount": est.match_count,
            }
        if not label_map and tag not in assignments:
            continue
        tid = node_id(kind, tag)
        g.add_node(Node(tid, kind, tag, label_map, Provenance.DYNAMICS_ANALYSIS))
        if tag in assignments:
            g.add_edge(Edge(EdgeKind.MEMBER_OF_PHYSICAL, tid, group_ids[assignments[tag]]))
    return g


def _add_trackers(g: PropertyGraph, rtls_samples: list[RtlsSample], root_name: str) -> None:
    root_id = node_id(NodeKind.SYSTEM_ROOT, root_name)
    last: dict[str, RtlsSample] = {}
    for s in rtls_samples:
        last[s.tracker_id] = s
    for tracker in sorted(last):
        s = last[tracker]
        tid = node_id(NodeKind.MATERIAL_TRACKER, tracker)
        g.add_node(
            Node(
                tid,
                NodeKind.MATERIAL_TRACKER,
                tracker,
                {"domain": "mechanic", "position.x": s.x, "position.y": s.y, "position.z": s.z},
                Provenance.DYNAMICS_ANALYSIS,
            )
        )
        g.add_edge(Edge(EdgeKind.CONTAINS, root_id, tid))

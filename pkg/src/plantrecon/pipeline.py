"""Stage wiring shared by the CLI: each stage reads and writes only its
declared files, and run_all composes them in order, so running the
subcommands by hand produces the same artifacts as one run-all.

Stage outputs inside ``out_dir``:

========================  ==================================================
``functional.dtgraph``    PLC analysis fragment
``dynamics.dtgraph``      dynamics analysis fragment
``plant.dtgraph``         merged graph with marked templates (final)
``templates.txt``         mined maximal patterns, human readable
``summary.txt``           graph size before/after template collapsing
``plant.aml``             AutomationML export
``metrics.report``        evaluation metrics (deterministic)
``timings.txt``           wall-clock stage timings (not deterministic)
========================  ==================================================
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import aml, dynamics, grouping, metrics, mining, plc, synth
from .clustering import DbscanParams, KMeansParams, cluster_positions
from .config import PipelineConfig
from .graph import NodeKind, PropertyGraph, load_graph, merge
from .traces import (
    EstimateStatus,
    PositionEstimate,
    load_io_trace,
    load_rtls_trace,
)

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    timings: list[tuple[str, float]] = field(default_factory=list)
    report: metrics.MetricsReport | None = None

    def total_seconds(self) -> float:
        return sum(t for _, t in self.timings)

    def timing_text(self) -> str:
        lines = [f"{name} = {seconds:.3f} s" for name, seconds in self.timings]
        lines.append(f"total = {self.total_seconds():.3f} s")
        return "\n".join(lines) + "\n"


def _out(cfg: PipelineConfig, name: str) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir / name


def _dynamics_params(cfg: PipelineConfig) -> dynamics.DynamicsParams:
    return dynamics.DynamicsParams(
        window_ms=cfg.window_ms,
        min_matches=cfg.min_matches,
        band=cfg.band,
        mode=cfg.mode,
        kmeans=KMeansParams(cfg.kmeans_k, cfg.seed) if cfg.kmeans_k else None,
        dbscan=DbscanParams(cfg.dbscan_eps, cfg.dbscan_min_pts) if cfg.dbscan_eps else None,
        raw_trajectory_queries=cfg.raw_trajectory_queries,
    )


def stage_analyze_plc(cfg: PipelineConfig) -> PropertyGraph:
    cfg.require("plc_xml")
    project = plc.parse_project(cfg.plc_xml.read_bytes())
    plc.prepare(project)
    tree = plc.build_call_tree(project)
    graph = grouping.functional_grouping(project, tree)
    graph.save(_out(cfg, "functional.dtgraph"))
    logger.info("functional fragment: %s", graph)
    return graph


def stage_analyze_dynamics(cfg: PipelineConfig) -> PropertyGraph:
    cfg.require("plc_xml", "io_csv", "rtls_csv")
    project = plc.parse_project(cfg.plc_xml.read_bytes())
    tag_kinds = {
        t.name: (NodeKind.SENSOR if t.is_input else NodeKind.ACTUATOR) for t in project.tags
    }
    tag_types = {t.name: t.data_type.value for t in project.tags}
    io_samples = load_io_trace(cfg.io_csv)
    rtls_samples = load_rtls_trace(cfg.rtls_csv)
    labeled = []
    if cfg.mode == "classify":
        cfg.require("labeled_rtls_csv")
        labeled = load_rtls_trace(cfg.labeled_rtls_csv)
    result = dynamics.analyze_dynamics(
        io_samples,
        rtls_samples,
        labeled,
        tag_kinds,
        tag_types,
        project.name,
        _dynamics_params(cfg),
    )
    result.fragment.save(_out(cfg, "dynamics.dtgraph"))
    logger.info("dynamics fragment: %s", result.fragment)
    return result.fragment


def merge_fragments(cfg: PipelineConfig) -> PropertyGraph:
    functional = load_graph(_out(cfg, "functional.dtgraph"))
    dynamics_path = _out(cfg, "dynamics.dtgraph")
    if dynamics_path.exists():
        merged = merge(functional, load_graph(dynamics_path))
    else:
        merged = functional
    return merged


def stage_mine(cfg: PipelineConfig) -> tuple[PropertyGraph, list[mining.Pattern]]:
    merged = merge_fragments(cfg)
    view = mining.project_for_mining(merged, frozenset(cfg.excluded_kinds))
    patterns = mining.mine(
        view,
        min_support=cfg.min_support,
        min_nodes=cfg.min_nodes,
        max_nodes=cfg.max_nodes,
        root_anchored_only=cfg.root_anchored_only,
    )
    templates = mining.select_templates(patterns)
    mining.mark_templates(merged, templates)
    merged.save(_out(cfg, "plant.dtgraph"))
    mining.write_templates_report(templates, _out(cfg, "templates.txt"))
    summary = mining.summarize(merged)
    _out(cfg, "summary.txt").write_text(summary.to_text(), encoding="utf-8")
    logger.info(
        "mined %d patterns, %d maximal templates", len(patterns), len(templates)
    )
    return merged, templates


def stage_export(cfg: PipelineConfig, graph: PropertyGraph | None = None) -> bytes:
    if graph is None:
        graph = load_graph(_out(cfg, "plant.dtgraph"))
    xml_bytes = aml.export_aml(graph)
    _out(cfg, "plant.aml").write_bytes(xml_bytes)
    findings = aml.validate_aml(xml_bytes)
    if findings:
        raise aml.AmlError(f"fresh export failed validation: {findings[0].message}")
    return xml_bytes


def templates_from_graph(graph: PropertyGraph) -> list[mining.Pattern]:
    """Recover the marked templates from a stored graph.

    The recovered embeddings are instance member sets (position order is
    not persisted); structure and support are exact.
    """
    patterns = []
    for node in graph.query(kinds={NodeKind.TEMPLATE_PATTERN}):
        structure = json.loads(str(node.labels["patternCode"]))
        embeddings = [
            tuple(str(graph.node(e.source).labels.get("members", "")).split(","))
            for e in graph.in_edges(node.id)
            if e.kind.value == "InstanceOf"
        ]
        patterns.append(
            mining.Pattern(
                code=(),
                support=int(node.labels.get("support", 0)),
                embeddings=embeddings,
                vertex_labels=tuple(structure["vertices"]),
                arcs=tuple((int(u), int(v), str(k)) for (u, v, k) in structure["edges"]),
                maximal=True,
            )
        )
    return patterns


def _estimates_from_graph(graph: PropertyGraph) -> list[PositionEstimate]:
    estimates = []
    for node in graph.query(kinds={NodeKind.SENSOR, NodeKind.ACTUATOR}):
        labels = node.labels
        if all(f"position.{axis}" in labels for axis in "xyz"):
            estimates.append(
                PositionEstimate(
                    node.name,
                    (
                        float(labels["position.x"]),
                        float(labels["position.y"]),
                        float(labels["position.z"]),
                    ),
                    int(labels.get("matchCount", 0)),
                    EstimateStatus.KNOWN,
                )
            )
        else:
            estimates.append(PositionEstimate(node.name, None, 0, EstimateStatus.UNKNOWN))
    return estimates


def stage_evaluate(
    cfg: PipelineConfig,
    graph: PropertyGraph | None = None,
    templates: list[mining.Pattern] | None = None,
    runtime_seconds: float = 0.0,
) -> metrics.MetricsReport:
    cfg.require("ground_truth")
    if graph is None:
        graph = load_graph(_out(cfg, "plant.dtgraph"))
    if templates is None:
        templates = templates_from_graph(graph)
    truth = synth.load_ground_truth(cfg.ground_truth)

    clustering_assignments = None
    if cfg.kmeans_k or cfg.dbscan_eps:
        method = (
            KMeansParams(cfg.kmeans_k, cfg.seed)
            if cfg.kmeans_k
            else DbscanParams(cfg.dbscan_eps, cfg.dbscan_min_pts)
        )
        estimates = _estimates_from_graph(graph)
        if any(e.status is EstimateStatus.KNOWN for e in estimates):
            clustering_assignments = cluster_positions(estimates, method).assignments

    report = metrics.evaluate(graph, templates, truth, runtime_seconds, clustering_assignments)
    _out(cfg, "metrics.report").write_text(report.to_text(), encoding="utf-8")
    return report


def run_all(cfg: PipelineConfig) -> RunResult:
    """analyze-plc -> analyze-dynamics -> merge -> mine -> export -> evaluate."""
    result = RunResult()

    def timed(name: str, fn, *args):
        start = time.perf_counter()
        value = fn(*args)
        result.timings.append((name, time.perf_counter() - start))
        return value

    timed("analyze-plc", stage_analyze_plc, cfg)
    timed("analyze-dynamics", stage_analyze_dynamics, cfg)
    graph, templates = timed("mine", stage_mine, cfg)
    timed("export", stage_export, cfg, graph)
    if cfg.ground_truth is not None:
        result.report = timed(
            "evaluate",
            lambda: stage_evaluate(cfg, graph, templates, result.total_seconds()),
        )
    _out(cfg, "timings.txt").write_text(result.timing_text(), encoding="utf-8")
    return result

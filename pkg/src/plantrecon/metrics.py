"""Evaluation metrics: partition agreement, template recovery, reporting.

The original evaluation of this approach measured expert time; that is
not reproducible at a desk, so the generator's ground truth is scored
instead: adjusted Rand index and pairwise F1 for the functional grouping,
per-component accuracy for the physical assignment, and recovery of the
expected repeated structures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError
from .graph import EdgeKind, NodeKind, PropertyGraph
from .mining import Pattern, patterns_isomorphic
from .synth import GroundTruth


class MetricsError(DataError):
    pass


class UniverseMismatchError(MetricsError):
    pass


def _check_universe(a: dict[str, str], b: dict[str, str]) -> None:
    if set(a) != set(b):
        only_a = sorted(set(a) - set(b))[:5]
        only_b = sorted(set(b) - set(a))[:5]
        raise UniverseMismatchError(
            f"partitions cover different elements (e.g. {only_a} vs {only_b})"
        )


def ari(partition_a: dict[str, str], partition_b: dict[str, str]) -> float:
    """Adjusted Rand index via the standard contingency formula."""
    _check_universe(partition_a, partition_b)
    n = len(partition_a)
    if n == 0:
        return 1.0
    table: dict[tuple[str, str], int] = {}
    a_sizes: dict[str, int] = {}
    b_sizes: dict[str, int] = {}
    for element, la in partition_a.items():
        lb = partition_b[element]
        table[(la, lb)] = table.get((la, lb), 0) + 1
        a_sizes[la] = a_sizes.get(la, 0) + 1
        b_sizes[lb] = b_sizes.get(lb, 0) + 1
    sum_cells = sum(math.comb(c, 2) for c in table.values())
    sum_a = sum(math.comb(c, 2) for c in a_sizes.values())
    sum_b = sum(math.comb(c, 2) for c in b_sizes.values())
    pairs = math.comb(n, 2)
    expected = sum_a * sum_b / pairs if pairs else 0.0
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        # Degenerate partitions (all-singleton or single-cluster on both
        # sides): agreement is total iff the tables coincide.
        return 1.0 if sum_cells == maximum else 0.0
    return (sum_cells - expected) / (maximum - expected)


def pairwise_f1(truth: dict[str, str], predicted: dict[str, str]) -> float:
    """F1 over same-group element pairs (truth = recall side)."""
    _check_universe(truth, predicted)
    elements = sorted(truth)
    tp = fp = fn = 0
    for i, x in enumerate(elements):
        for y in elements[i + 1:]:
            same_t = truth[x] == truth[y]
            same_p = predicted[x] == predicted[y]
            if same_t and same_p:
                tp += 1
            elif same_p:
                fp += 1
            elif same_t:
                fn += 1
    if tp == 0:
        return 1.0 if fp == 0 and fn == 0 else 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _as_pattern(structure: dict | Pattern) -> Pattern:
    if isinstance(structure, Pattern):
        return structure
    return Pattern(
        code=(),
        support=int(structure.get("support", 0)),
        embeddings=[],
        vertex_labels=tuple(structure["vertices"]),
        arcs=tuple((int(u), int(v), str(k)) for (u, v, k) in structure["edges"]),
    )


def template_recovery(expected: list[dict | Pattern], mined: list[Pattern]) -> float:
    """Fraction of expected templates found among the mined maximal
    patterns with matching structure and support."""
    if not expected:
        return 1.0
    hits = 0
    for exp in expected:
        pattern = _as_pattern(exp)
        for candidate in mined:
            if candidate.support == pattern.support and patterns_isomorphic(pattern, candidate):
                hits += 1
                break
    return hits / len(expected)


@dataclass
class MetricsReport:
    ari: float
    pairwise_f1: float
    classification_accuracy: float
    template_recovery: float
    runtime_seconds: float
    clustering_ari: float | None = None

    def to_text(self) -> str:
        """Deterministic ``metrics.report`` body.

        The wall-clock runtime is reported separately (timings file): its
        value changes run to run and would break byte-determinism here.
        """
        lines = [
            f"ari = {self.ari!r}",
            f"classification_accuracy = {self.classification_accuracy!r}",
            f"pairwise_f1 = {self.pairwise_f1!r}",
            f"template_recovery = {self.template_recovery!r}",
        ]
        if self.clustering_ari is not None:
            lines.insert(1, f"clustering_ari = {self.clustering_ari!r}")
        return "\n".join(lines) + "\n"


def functional_partition_of(graph: PropertyGraph) -> dict[str, str]:
    """Tag -> containing group id, for every Sensor/Actuator node."""
    out = {}
    for node in graph.query(kinds={NodeKind.SENSOR, NodeKind.ACTUATOR}):
        parent = graph.contains_parent(node.id)
        out[node.name] = parent if parent is not None else ""
    return out


def physical_assignments_of(graph: PropertyGraph) -> dict[str, str]:
    """Tag -> physical group label, from MemberOfPhysical edges."""
    out = {}
    for node in graph.query(kinds={NodeKind.SENSOR, NodeKind.ACTUATOR}):
        edges = graph.out_edges(node.id, EdgeKind.MEMBER_OF_PHYSICAL)
        if edges:
            out[node.name] = graph.node(edges[0].target).name
    return out


def evaluate(
    graph: PropertyGraph,
    templates: list[Pattern],
    ground_truth: GroundTruth,
    runtime_seconds: float,
    clustering_assignments: dict[str, str] | None = None,
) -> MetricsReport:
    """Score a finished pipeline run against the generator's ground truth."""
    truth_functional = ground_truth.functional_partition
    mined_functional = functional_partition_of(graph)
    missing = sorted(set(truth_functional) - set(mined_functional))
    if missing:
        raise UniverseMismatchError(f"graph lacks field devices {missing[:5]}")
    mined_functional = {t: mined_functional[t] for t in truth_functional}

    assignments = physical_assignments_of(graph)
    truth_physical = ground_truth.physical_partition
    correct = sum(1 for tag, label in assignments.items() if truth_physical.get(tag) == label)
    accuracy = correct / len(assignments) if assignments else 0.0

    clustering_ari = None
    if clustering_assignments:
        subset = {t: truth_physical[t] for t in clustering_assignments if t in truth_physical}
        clustering_ari = ari(subset, {t: clustering_assignments[t] for t in subset})

    return MetricsReport(
        ari=ari(truth_functional, mined_functional),
        pairwise_f1=pairwise_f1(truth_functional, mined_functional),
        classification_accuracy=accuracy,
        template_recovery=template_recovery(ground_truth.templates, templates),
        runtime_seconds=runtime_seconds,
        clustering_ari=clustering_ari,
    )

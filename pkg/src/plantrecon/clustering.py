"""Seeded clustering of estimated component positions.

Clustering is the opt-in alternative to 1-NN classification: it needs no
labeled training data, but positions sampled along continuous material
trajectories have no clean spatial gaps, so the split can differ from the
true location groups and the accuracy is generally lower. Callers get a
warning to that effect.

Both algorithms are implemented here rather than delegated so that the
results are bit-reproducible across runs and thread counts for a fixed
seed. K-means uses k-means++ seeding from a PCG64 stream, Lloyd
iterations capped at 300 or a centroid shift below 1e-9 m.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .traces import EstimateStatus, PositionEstimate

logger = logging.getLogger(__name__)


class ClusteringError(DataError):
    pass


class InsufficientDataError(ClusteringError):
    pass


@dataclass(frozen=True)
class KMeansParams:
    k: int
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-9
    n_init: int = 10


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int


@dataclass
class ClusterResult:
    """Partition over tags with Known estimates; Unknowns are rejected."""

    assignments: dict[str, str]
    rejected: list[str]

    def partition(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for tag, label in self.assignments.items():
            out.setdefault(label, set()).add(tag)
        return out


def _kmeans_once(points: np.ndarray, k: int, params: KMeansParams, rng) -> tuple[np.ndarray, float]:
    n = len(points)
    # k-means++ seeding.
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    dist2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = dist2.sum()
        if total == 0.0:
            centers[i:] = points[0]
            break
        probs = dist2 / total
        centers[i] = points[rng.choice(n, p=probs)]
        dist2 = np.minimum(dist2, ((points - centers[i]) ** 2).sum(axis=1))
    labels = np.zeros(n, dtype=int)
    for _ in range(params.max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new_centers = centers.copy()
        for c in range(k):
            members = points[labels == c]
            if len(members):
                new_centers[c] = members.mean(axis=0)
            else:
                # Re-seed an empty cluster on the point farthest from its center.
                far = d2.min(axis=1).argmax()
                new_centers[c] = points[far]
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift < params.tol:
            break
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, inertia


def kmeans(points: np.ndarray, params: KMeansParams) -> np.ndarray:
    """Deterministic seeded k-means (k-means++, best of n_init restarts);
    returns a cluster index per point."""
    k = min(params.k, len(points))
    rng = np.random.Generator(np.random.PCG64(params.seed))
    best_labels: np.ndarray | None = None
    best_inertia = math.inf
    for _ in range(max(1, params.n_init)):
        labels, inertia = _kmeans_once(points, k, params, rng)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    assert best_labels is not None
    return best_labels


def dbscan(points: np.ndarray, params: DbscanParams) -> np.ndarray:
    """Classic density clustering; returns cluster index per point, -1 noise."""
    n = len(points)
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    neighbors = [np.flatnonzero(d[i] <= params.eps) for i in range(n)]
    labels = np.full(n, -1, dtype=int)
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or len(neighbors[i]) < params.min_pts:
            continue
        labels[i] = cluster
        frontier = list(neighbors[i])
        while frontier:
            j = frontier.pop(0)
            if labels[j] == -1:
                labels[j] = cluster
                if len(neighbors[j]) >= params.min_pts:
                    frontier.extend(int(x) for x in neighbors[j] if labels[x] == -1)
        cluster += 1
    return labels


def cluster_positions(
    estimates: list[PositionEstimate],
    method: KMeansParams | DbscanParams,
) -> ClusterResult:
    """Partition the tags with Known position estimates.

    Cluster names are ``C0``, ``C1``, ... ordered by centroid so the
    naming is stable; DBSCAN noise points get ``noise``.
    """
    logger.warning(
        "clustering mode: positions lie along continuous trajectories, "
        "the split may differ from the true location groups"
    )
    known = sorted(
        (e for e in estimates if e.status is EstimateStatus.KNOWN),
        key=lambda e: e.owner_tag,
    )
    rejected = sorted(e.owner_tag for e in estimates if e.status is EstimateStatus.UNKNOWN)
    if not known:
        raise InsufficientDataError("no Known position estimates to cluster")
    points = np.array([e.mean for e in known], dtype=float)
    if isinstance(method, KMeansParams):
        raw = kmeans(points, method)
    else:
        raw = dbscan(points, method)
    # Stable naming: order clusters by their centroid tuple.
    order = {}
    centroids = []
    for c in sorted(set(int(x) for x in raw)):
        if c == -1:
            continue
        centroids.append((tuple(points[raw == c].mean(axis=0)), c))
    for rank, (_, c) in enumerate(sorted(centroids)):
        order[c] = f"C{rank}"
    assignments = {}
    for est, c in zip(known, raw):
        assignments[est.owner_tag] = order.get(int(c), "noise")
    return ClusterResult(assignments, rejected)

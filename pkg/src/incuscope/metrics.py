"""Per-snapshot network metrics and monthly feature vectors.

Counts and mean degree are taken on the bipartite snapshot itself
(mean degree = 2E/N over all nodes).  The clustering coefficient is not
well defined on a bipartite graph, so it is computed on the one-mode
developer projection: two developers connect when they share a neighbor
on the opposite side (a common correspondent for the social flavor, a
common file type for the technical one).
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .graph import SOCIAL, TECHNICAL, Snapshot

FEATURE_NAMES = (
    "social_nodes",
    "social_edges",
    "social_mean_degree",
    "social_clustering",
    "technical_nodes",
    "technical_edges",
    "technical_mean_degree",
    "technical_clustering",
)
NUM_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class MetricsRecord:
    project_id: str
    flavor: str
    month_from: int
    month_to: int
    num_left_nodes: int
    num_right_nodes: int
    num_nodes: int
    num_edges: int
    mean_degree: float
    clustering_coefficient: float


def project_to_developers(s: Snapshot) -> nx.Graph:
    """One-mode projection of a bipartite snapshot onto its developers.

    Vertices are all developer labels (both sides for social, left side for
    technical); an edge joins two developers iff they share a neighbor on
    the opposite side, edge direction ignored.
    """
    if s.flavor == SOCIAL:
        vertices = set(s.left_nodes) | set(s.right_nodes)
    else:
        vertices = set(s.left_nodes)
    g = nx.Graph()
    g.add_nodes_from(vertices)
    neighbors: dict[str, set[str]] = {}
    for e in s.edges:
        neighbors.setdefault(e.source, set()).add(e.target)
        neighbors.setdefault(e.target, set()).add(e.source)
    verts = sorted(vertices)
    for i, u in enumerate(verts):
        nu = neighbors.get(u, set())
        if not nu:
            continue
        for v in verts[i + 1 :]:
            if nu & neighbors.get(v, set()):
                g.add_edge(u, v)
    return g


def clustering_coefficient(g: nx.Graph) -> float:
    """Average local clustering over all vertices; vertices of degree < 2
    contribute 0, the empty graph yields 0."""
    if g.number_of_nodes() == 0:
        return 0.0
    return nx.average_clustering(g, count_zeros=True)


def compute_metrics(s: Snapshot) -> MetricsRecord:
    num_left = len(s.left_nodes)
    num_right = len(s.right_nodes)
    num_nodes = num_left + num_right
    num_edges = len(s.edges)
    mean_degree = 2.0 * num_edges / num_nodes if num_nodes else 0.0
    return MetricsRecord(
        project_id=s.project_id,
        flavor=s.flavor,
        month_from=s.month_from,
        month_to=s.month_to,
        num_left_nodes=num_left,
        num_right_nodes=num_right,
        num_nodes=num_nodes,
        num_edges=num_edges,
        mean_degree=mean_degree,
        clustering_coefficient=clustering_coefficient(project_to_developers(s)),
    )


def node_percentages(s: Snapshot) -> dict[str, dict[str, float]]:
    """Per-side share of total edge weight, in percent.

    A left node's share is its outgoing weight over the snapshot's total
    weight, a right node's its incoming weight; these are the Sankey node
    heights.  Empty sides give empty mappings.
    """
    total = s.total_weight
    left: dict[str, float] = {}
    right: dict[str, float] = {}
    if total:
        for e in s.edges:
            left[e.source] = left.get(e.source, 0.0) + e.weight
            right[e.target] = right.get(e.target, 0.0) + e.weight
        left = {n: 100.0 * w / total for n, w in left.items()}
        right = {n: 100.0 * w / total for n, w in right.items()}
    return {"left": left, "right": right}


def feature_vector(
    social: MetricsRecord | None, technical: MetricsRecord | None
) -> np.ndarray:
    """The 8 per-month features: nodes, edges, mean degree, clustering for
    the social then the technical network.  A missing record means an
    inactive month and contributes zeros."""
    vec = np.zeros(NUM_FEATURES, dtype=np.float64)
    for offset, rec in ((0, social), (4, technical)):
        if rec is not None:
            vec[offset + 0] = rec.num_nodes
            vec[offset + 1] = rec.num_edges
            vec[offset + 2] = rec.mean_degree
            vec[offset + 3] = rec.clustering_coefficient
    return vec


def feature_sequence(records, months: int) -> np.ndarray:
    """Ordered (months, 8) feature matrix for months 1..months, gap-filled
    with zero vectors for months without metrics."""
    by_key = {(r.flavor, r.month_from): r for r in records}
    rows = [
        feature_vector(by_key.get((SOCIAL, m)), by_key.get((TECHNICAL, m)))
        for m in range(1, months + 1)
    ]
    return np.stack(rows) if rows else np.zeros((0, NUM_FEATURES))

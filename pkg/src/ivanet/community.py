"""Flow-community detection and the top-k threshold scan."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .leontief import threshold_top_k
from .mapequation import (
    DEFAULT_TELEPORT,
    VisitDistribution,
    codelength,
    module_stats,
    optimize_assignment,
    stationary_visits,
)
from .network import FlowNetwork

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = 10


@dataclass(frozen=True)
class Partition:
    """Communities of a network, labelled 0..m-1 by decreasing size."""

    assignment: np.ndarray
    codelength: float
    exit: np.ndarray
    within: np.ndarray
    nodes: tuple[tuple[str, str], ...] = ()
    teleport_prob: float = DEFAULT_TELEPORT
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_communities(self) -> int:
        return int(self.assignment.max()) + 1 if self.assignment.size else 0

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_communities)

    def members(self, community: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == community)

    def member_nodes(self, community: int) -> list[tuple[str, str]]:
        return [self.nodes[i] for i in self.members(community)]


def canonical_labels(assignment) -> np.ndarray:
    """Relabel so communities are numbered by decreasing size, ties by first member."""
    assignment = np.asarray(assignment)
    _, first, inv, counts = np.unique(assignment, return_index=True, return_inverse=True, return_counts=True)
    order = np.lexsort((first, -counts))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inv].astype(np.int64)


def make_partition(network: FlowNetwork, visits: VisitDistribution, assignment, recorded: bool = True,
                   meta: dict | None = None) -> Partition:
    assignment = canonical_labels(assignment)
    stats = module_stats(network, visits, assignment, recorded)
    return Partition(
        assignment=assignment,
        codelength=codelength(network, visits, assignment, recorded),
        exit=stats.exit,
        within=stats.within,
        nodes=network.nodes,
        teleport_prob=visits.teleport_prob,
        meta=meta or {},
    )


def detect_communities(
    network: FlowNetwork,
    teleport_prob: float = DEFAULT_TELEPORT,
    seeds: int = DEFAULT_SEEDS,
    rng_seed: int = 0,
    recorded: bool = True,
    visits: VisitDistribution | None = None,
) -> Partition:
    """Minimise the map equation over ``seeds`` randomised greedy runs.

    Every run shuffles the node order with its own stream spawned from
    ``rng_seed``; the lowest codelength wins (earliest run on exact ties).
    """
    if network.n == 0:
        raise ValueError("network has no nodes")
    if visits is None:
        visits = stationary_visits(network, teleport_prob)
    best = None
    best_L = np.inf
    for child in np.random.SeedSequence(rng_seed).spawn(max(1, seeds)):
        rng = np.random.default_rng(child)
        assignment = optimize_assignment(network, visits, rng, recorded)
        L = codelength(network, visits, assignment, recorded)
        if L < best_L - 1e-13:
            best, best_L = assignment, L
    trivial = np.zeros(network.n, dtype=np.int64)
    if codelength(network, visits, trivial, recorded) <= best_L:
        best = trivial
    return make_partition(network, visits, best, recorded,
                          meta={"seeds": seeds, "rng_seed": rng_seed, "recorded_teleportation": recorded})


def active_nodes(network: FlowNetwork) -> np.ndarray:
    """Nodes with at least one incident link (self-loops excluded)."""
    w = network.weights.copy()
    np.fill_diagonal(w, 0.0)
    return np.flatnonzero((w.sum(axis=0) > 0) | (w.sum(axis=1) > 0))


@dataclass(frozen=True)
class ScanPoint:
    k: int
    n_active: int
    num_large: int
    codelength: float
    large_sizes: tuple[int, ...]


@dataclass(frozen=True)
class ScanResult:
    points: tuple[ScanPoint, ...]
    size_floor: int
    selected_k: int | None
    rule: str = "largest k with at least 2 communities above size_floor"

    def counts(self) -> dict[int, int]:
        return {p.k: p.num_large for p in self.points}


def partition_top_k(
    network: FlowNetwork,
    k: int,
    teleport_prob: float = DEFAULT_TELEPORT,
    seeds: int = DEFAULT_SEEDS,
    rng_seed: int = 0,
    recorded: bool = True,
) -> tuple[Partition, np.ndarray]:
    """Detect communities among the nodes that keep a link after ``threshold_top_k``.

    Returns the partition of the active subnetwork and the indices of those
    nodes in ``network``.
    """
    cut = network if k >= np.count_nonzero(network.weights) else threshold_top_k(network, k)
    idx = active_nodes(cut)
    sub = cut.subnetwork(idx)
    part = detect_communities(sub, teleport_prob, seeds, rng_seed, recorded)
    return part, idx


def threshold_scan(
    network: FlowNetwork,
    k_min: int,
    k_max: int,
    k_step: int,
    size_floor: int,
    teleport_prob: float = DEFAULT_TELEPORT,
    seeds: int = DEFAULT_SEEDS,
    rng_seed: int = 0,
    recorded: bool = True,
) -> ScanResult:
    """Count communities larger than ``size_floor`` for each retained-link count k."""
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    if k_step < 1:
        raise ValueError("k_step must be at least 1")
    points = []
    for k in range(k_min, k_max + 1, k_step):
        part, idx = partition_top_k(network, k, teleport_prob, seeds, rng_seed, recorded)
        sizes = part.sizes
        large = tuple(int(s) for s in sizes[sizes > size_floor])
        points.append(ScanPoint(k, int(idx.size), len(large), part.codelength, large))
        logger.debug("k=%d: %d active nodes, %d large communities", k, idx.size, len(large))
    eligible = [p.k for p in points if p.num_large >= 2]
    return ScanResult(tuple(points), size_floor, max(eligible) if eligible else None)


# ---------------------------------------------------------------------------
# regional labelling


@dataclass(frozen=True)
class CommunityLabel:
    community: int
    size: int
    dominant_region: str | None
    purity: float
    region_counts: dict


def label_regions(partition: Partition, regions: dict[str, str]) -> list[CommunityLabel]:
    """Dominant region and its share for each community.

    Nodes of unmapped countries count towards the size but not towards any
    region; ties between regions go to the alphabetically first.
    """
    labels = []
    for c in range(partition.n_communities):
        members = partition.member_nodes(c)
        counts = Counter(regions[country] for country, _ in members if country in regions)
        if counts:
            region, top = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
            purity = top / len(members)
        else:
            region, purity = None, 0.0
        labels.append(CommunityLabel(c, len(members), region, purity, dict(sorted(counts.items()))))
    return labels


def overlap_matrix(a: Partition, b: Partition) -> np.ndarray:
    """Node-count intersections between communities of two partitions (matched by node label)."""
    index_b = {node: i for i, node in enumerate(b.nodes)}
    M = np.zeros((a.n_communities, b.n_communities), dtype=int)
    for i, node in enumerate(a.nodes):
        j = index_b.get(node)
        if j is not None:
            M[a.assignment[i], b.assignment[j]] += 1
    return M


def sankey_links(a: Partition, b: Partition) -> list[dict]:
    M = overlap_matrix(a, b)
    return [
        {"community_a": int(i), "community_b": int(j), "node_overlap": int(M[i, j])}
        for i, j in zip(*np.nonzero(M))
    ]

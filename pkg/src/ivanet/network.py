"""Directed weighted flow networks over (country, sector) nodes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

#: Placeholder used in the unused half of a node label after aggregation.
ANY = "*"

GVAN = "GVAN"
IVAN = "IVAN"


@dataclass(frozen=True)
class FlowNetwork:
    """Dense directed network; ``weights[i, j]`` is the flow from node i to node j.

    Nodes are ``(country, sector)`` pairs. Aggregated networks use ``ANY`` in
    the collapsed position, e.g. ``("DEU", "*")`` for a country node.
    """

    nodes: tuple[tuple[str, str], ...]
    weights: np.ndarray
    kind: str = "subnetwork"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if w.shape[0] != len(self.nodes):
            raise ValueError(
                f"{len(self.nodes)} node labels for a {w.shape[0]}-node matrix"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        object.__setattr__(self, "nodes", tuple(tuple(n) for n in self.nodes))
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def labels(self) -> list[str]:
        return [node_label(node) for node in self.nodes]

    @property
    def countries(self) -> np.ndarray:
        return np.array([c for c, _ in self.nodes], dtype=object)

    @property
    def sectors(self) -> np.ndarray:
        return np.array([s for _, s in self.nodes], dtype=object)

    def link_count(self) -> int:
        """Number of directed links with positive weight, self-loops excluded."""
        w = self.weights.copy()
        np.fill_diagonal(w, 0.0)
        return int(np.count_nonzero(w))

    def subnetwork(self, index: Sequence[int], kind: str | None = None) -> "FlowNetwork":
        """Induced subnetwork on ``index`` (in the given order)."""
        idx = np.asarray(index, dtype=int)
        return FlowNetwork(
            nodes=tuple(self.nodes[i] for i in idx),
            weights=self.weights[np.ix_(idx, idx)],
            kind=kind or self.kind,
            meta=dict(self.meta),
        )

    def with_weights(self, weights: np.ndarray, kind: str | None = None) -> "FlowNetwork":
        return FlowNetwork(self.nodes, weights, kind or self.kind, dict(self.meta))

    def index_of(self) -> dict[tuple[str, str], int]:
        return {node: i for i, node in enumerate(self.nodes)}


def node_label(node: tuple[str, str]) -> str:
    country, sector = node
    if sector == ANY:
        return country
    if country == ANY:
        return sector
    return f"{country}_{sector}"


def from_edges(edges, nodes=None, kind: str = "subnetwork") -> FlowNetwork:
    """Build a network from ``(source, target, weight)`` triples.

    Plain hashable node ids are mapped to ``(str(id), "*")`` labels, which keeps
    small hand-built test graphs short to write.
    """
    edges = list(edges)
    if nodes is None:
        seen: dict = {}
        for s, t, _ in edges:
            seen.setdefault(s, None)
            seen.setdefault(t, None)
        nodes = list(seen)
    index = {v: i for i, v in enumerate(nodes)}
    w = np.zeros((len(nodes), len(nodes)))
    for s, t, x in edges:
        w[index[s], index[t]] += x
    labels = tuple(v if isinstance(v, tuple) else (str(v), ANY) for v in nodes)
    return FlowNetwork(labels, w, kind)

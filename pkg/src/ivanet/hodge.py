"""Helmholtz-Hodge decomposition of value flows into potential and circular parts.

For the net flow ``N_ij = F_ij - F_ji`` on every connected pair (unit pair
weights), the potential solves the graph Poisson problem

    sum_j w_ij (phi_i - phi_j) = sum_j N_ij,

the potential flow is ``w_ij (phi_i - phi_j)`` and the circular flow is what
remains; the latter is divergence free at every node. Each connected component
gets its own gauge ``sum phi = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import cg

from .network import ANY, FlowNetwork

#: Above this many nodes in a component the Laplacian is solved by CG.
DENSE_LIMIT = 2408

NET = "net-only"
NET_PLUS_BILATERAL = "net-plus-bilateral"


@dataclass(frozen=True)
class HodgeDecomposition:
    nodes: tuple[tuple[str, str], ...]
    phi: np.ndarray
    weights: np.ndarray
    net_flow: np.ndarray
    potential_flow: np.ndarray
    circular: np.ndarray
    components: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def residual(self) -> float:
        """Largest reconstruction error of the net flow."""
        if self.n == 0:
            return 0.0
        return float(np.abs(self.net_flow - self.circular - self.potential_flow).max())

    @property
    def divergence(self) -> np.ndarray:
        return self.net_flow.sum(axis=1)

    def circular_strength(self) -> np.ndarray:
        """Sum of ``|circular|`` over the pairs incident to each node."""
        return np.abs(self.circular).sum(axis=1)

    def labels(self) -> list[str]:
        from .network import node_label

        return [node_label(n) for n in self.nodes]


def _solve_component(lap: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    k = rhs.size
    if k == 1:
        return np.zeros(1)
    if k <= DENSE_LIMIT:
        # grounding the last node makes the reduced Laplacian positive definite
        c, low = linalg.cho_factor(lap[:-1, :-1], check_finite=False)
        x = np.append(linalg.cho_solve((c, low), rhs[:-1], check_finite=False), 0.0)
    else:
        A = sparse.csr_matrix(lap[:-1, :-1])
        x, info = cg(A, rhs[:-1], rtol=1e-13, maxiter=20 * k)
        if info != 0:
            raise RuntimeError(f"conjugate gradient did not converge (info={info})")
        x = np.append(x, 0.0)
    return x - x.mean()


def decompose(network: FlowNetwork) -> HodgeDecomposition:
    """Split the network's net flows into potential and circular components."""
    W = network.weights.copy()
    np.fill_diagonal(W, 0.0)
    n = W.shape[0]
    net = W - W.T
    adj = ((W + W.T) > 0).astype(float)
    div = net.sum(axis=1)
    phi = np.zeros(n)
    if n:
        n_comp, comp = csgraph.connected_components(sparse.csr_matrix(adj), directed=False)
    else:
        n_comp, comp = 0, np.zeros(0, dtype=int)
    for c in range(n_comp):
        idx = np.flatnonzero(comp == c)
        sub = adj[np.ix_(idx, idx)]
        lap = np.diag(sub.sum(axis=1)) - sub
        phi[idx] = _solve_component(lap, div[idx])
    potential = adj * (phi[:, None] - phi[None, :])
    circular = net - potential
    circular = 0.5 * (circular - circular.T)
    return HodgeDecomposition(
        nodes=network.nodes,
        phi=phi,
        weights=adj,
        net_flow=net,
        potential_flow=potential,
        circular=circular,
        components=comp,
        meta={"pair_weight": "unit", "n_components": int(n_comp)},
    )


def bilateral_circulation(network: FlowNetwork) -> np.ndarray:
    """Two-node loop flow ``min(F_ij, F_ji)`` that the net flow cancels out."""
    W = network.weights.copy()
    np.fill_diagonal(W, 0.0)
    return np.minimum(W, W.T)


def group_index(network: FlowNetwork, by: str) -> tuple[list[str], np.ndarray]:
    if by == "country":
        keys = [c for c, _ in network.nodes]
    elif by == "sector":
        keys = [s for _, s in network.nodes]
    else:
        raise ValueError(f"group_by must be 'country' or 'sector', got {by!r}")
    groups = list(dict.fromkeys(keys))
    pos = {g: i for i, g in enumerate(groups)}
    return groups, np.array([pos[k] for k in keys], dtype=int)


def aggregate(network: FlowNetwork, group_by: str) -> FlowNetwork:
    """Sum flows between countries (or sectors); within-group flows are dropped."""
    groups, member = group_index(network, group_by)
    M = np.zeros((network.n, len(groups)))
    M[np.arange(network.n), member] = 1.0
    agg = M.T @ network.weights @ M
    dropped = float(np.trace(agg))
    np.fill_diagonal(agg, 0.0)
    nodes = [(g, ANY) if group_by == "country" else (ANY, g) for g in groups]
    return FlowNetwork(
        tuple(nodes), agg, f"{network.kind}-by-{group_by}",
        meta=dict(network.meta, aggregated_by=group_by, dropped_within_group=dropped),
    )


@dataclass(frozen=True)
class GroupScores:
    """Potential and circular strength per group, with the route that produced them."""

    labels: list[str]
    phi: np.ndarray
    circular_strength: np.ndarray
    mode: str


def group_scores(network: FlowNetwork, group_by: str, mode: str = "aggregate-then-decompose") -> GroupScores:
    """Group-level potentials and circulation.

    ``aggregate-then-decompose`` decomposes the aggregated network.
    ``decompose-then-aggregate`` decomposes the node network and reports the
    mean node potential of each group and the summed ``|circular|`` of
    node pairs that straddle groups.
    """
    if mode == "aggregate-then-decompose":
        agg = aggregate(network, group_by)
        d = decompose(agg)
        return GroupScores(d.labels(), d.phi, d.circular_strength(), mode)
    if mode == "decompose-then-aggregate":
        groups, member = group_index(network, group_by)
        d = decompose(network)
        g = len(groups)
        counts = np.bincount(member, minlength=g)
        phi = np.bincount(member, weights=d.phi, minlength=g) / counts
        C = np.abs(d.circular)
        cross = member[:, None] != member[None, :]
        strength = np.bincount(member, weights=(C * cross).sum(axis=1), minlength=g)
        return GroupScores(list(groups), phi, strength, mode)
    raise ValueError(f"unknown mode {mode!r}")


def _ranked(labels, values, descending: bool, top: int) -> list[tuple[str, float]]:
    order = sorted(range(len(labels)), key=lambda i: ((-values[i]) if descending else values[i], labels[i]))
    return [(labels[i], float(values[i])) for i in order[:top]]


def rank_potentials(decomp: HodgeDecomposition | GroupScores, top: int = 5) -> dict[str, list]:
    """Highest and lowest potentials; equal values are ordered by label."""
    labels = decomp.labels() if isinstance(decomp, HodgeDecomposition) else decomp.labels
    return {
        "highest": _ranked(labels, decomp.phi, True, top),
        "lowest": _ranked(labels, decomp.phi, False, top),
    }


def rank_circulation(decomp: HodgeDecomposition | GroupScores, top: int = 5) -> list[tuple[str, float]]:
    if isinstance(decomp, HodgeDecomposition):
        labels, strength = decomp.labels(), decomp.circular_strength()
    else:
        labels, strength = decomp.labels, decomp.circular_strength
    return _ranked(labels, strength, True, top)


def v_curve_data(decomp: HodgeDecomposition) -> list[tuple[str, float, float]]:
    """``(label, potential, circular strength)`` per node, for scatter plots."""
    return list(zip(decomp.labels(), decomp.phi.tolist(), decomp.circular_strength().tolist()))


def top_circular_links(decomp: HodgeDecomposition, k: int = 20) -> list[tuple[int, int, float]]:
    """The ``k`` largest circular flows, oriented along the positive direction."""
    i, j = np.nonzero(decomp.circular > 0)
    vals = decomp.circular[i, j]
    order = np.lexsort((j, i, -vals))[:k]
    return [(int(i[o]), int(j[o]), float(vals[o])) for o in order]

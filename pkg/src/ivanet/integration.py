"""Economic integration index of a community and its sectoral parts.

    E   = sum_{i>j in C} |Y^c_ij| / sum_{i,j in C} G_ij
    E_k = the same with both sums restricted to the community's sector-k nodes

``Y^c`` is the circular flow of the international network restricted to the
community and ``G`` the global network including domestic flows. In
``net-plus-bilateral`` mode the two-node loop flow ``min(Y_ij, Y_ji)`` is
added to the numerator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hodge import NET, NET_PLUS_BILATERAL, HodgeDecomposition, bilateral_circulation, decompose
from .network import FlowNetwork

logger = logging.getLogger(__name__)

MODES = (NET, NET_PLUS_BILATERAL)
COMMUNITY = "community"
GLOBAL = "global"


@dataclass(frozen=True)
class IntegrationReport:
    year: int | None
    community: int | None
    nodes: tuple[tuple[str, str], ...]
    E: float | None
    numerator: float
    denominator: float
    mode: str
    E_k: dict = field(default_factory=dict)
    region: str | None = None


def _positions(nodes, index: dict) -> np.ndarray:
    try:
        return np.array([index[n] for n in nodes], dtype=int)
    except KeyError as exc:
        raise ValueError(f"node {exc.args[0]} is missing from the network") from None


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def _numerator(decomp: HodgeDecomposition, local: np.ndarray, mode: str, bilateral: np.ndarray | None) -> float:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    sub = np.ix_(local, local)
    total = 0.5 * float(np.abs(decomp.circular[sub]).sum())
    if mode == NET_PLUS_BILATERAL:
        if bilateral is None:
            raise ValueError("net-plus-bilateral mode needs the bilateral circulation matrix")
        total += 0.5 * float(bilateral[sub].sum())
    return total


def integration_index(
    ivan_circular: HodgeDecomposition,
    gvan: FlowNetwork,
    community: Sequence[tuple[str, str]] | None = None,
    mode: str = NET,
    bilateral: np.ndarray | None = None,
    denominator: str = COMMUNITY,
    year: int | None = None,
    community_id: int | None = None,
) -> IntegrationReport:
    """Integration index of ``community`` (default: every decomposed node).

    ``bilateral`` is ``bilateral_circulation`` of the same restricted
    international network, needed only in ``net-plus-bilateral`` mode.
    ``denominator="global"`` divides by the whole global network instead of the
    community's part of it.
    """
    nodes = tuple(community) if community is not None else ivan_circular.nodes
    local = _positions(nodes, {n: i for i, n in enumerate(ivan_circular.nodes)})
    g = _positions(nodes, gvan.index_of())
    num = _numerator(ivan_circular, local, mode, bilateral)
    if denominator == COMMUNITY:
        den = float(gvan.weights[np.ix_(g, g)].sum())
    elif denominator == GLOBAL:
        den = float(gvan.weights.sum())
    else:
        raise ValueError(f"denominator must be {COMMUNITY!r} or {GLOBAL!r}")
    return IntegrationReport(year, community_id, nodes, _ratio(num, den), num, den, mode)


def sectoral_index(
    ivan_circular: HodgeDecomposition,
    gvan: FlowNetwork,
    sector: str,
    community: Sequence[tuple[str, str]] | None = None,
    mode: str = NET,
    bilateral: np.ndarray | None = None,
) -> float | None:
    """``E_k`` for one sector; ``None`` with fewer than two such nodes or no flow."""
    nodes = tuple(community) if community is not None else ivan_circular.nodes
    nodes = tuple(n for n in nodes if n[1] == sector)
    if len(nodes) < 2:
        return None
    local = _positions(nodes, {n: i for i, n in enumerate(ivan_circular.nodes)})
    g = _positions(nodes, gvan.index_of())
    num = _numerator(ivan_circular, local, mode, bilateral)
    den = float(gvan.weights[np.ix_(g, g)].sum())
    return _ratio(num, den)


def community_integration(
    ivan: FlowNetwork,
    gvan: FlowNetwork,
    members: Sequence[tuple[str, str]],
    modes: Sequence[str] = MODES,
    denominator: str = COMMUNITY,
    year: int | None = None,
    community_id: int | None = None,
    region: str | None = None,
    decomp: HodgeDecomposition | None = None,
) -> list[IntegrationReport]:
    """Restrict the international network to ``members``, decompose, and index it."""
    members = tuple(members)
    sub = ivan.subnetwork(_positions(members, ivan.index_of()))
    if decomp is None:
        decomp = decompose(sub)
    bilateral = bilateral_circulation(sub)
    sectors = list(dict.fromkeys(s for _, s in members))
    reports = []
    for mode in modes:
        rep = integration_index(decomp, gvan, members, mode, bilateral, denominator, year, community_id)
        E_k = {s: sectoral_index(decomp, gvan, s, members, mode, bilateral) for s in sectors}
        reports.append(
            IntegrationReport(rep.year, rep.community, rep.nodes, rep.E, rep.numerator,
                              rep.denominator, mode, E_k, region)
        )
    return reports


def integration_series(tables, config) -> list[IntegrationReport]:
    """Full per-year analysis of each table; failing years are logged and skipped."""
    from .pipeline import analyze_year

    reports = []
    for table in tables:
        try:
            reports += analyze_year(table, config).reports
        except Exception as exc:  # keep the remaining years
            logger.error("year %s failed: %s", getattr(table, "year", "?"), exc)
    return reports

"""Leontief system and value-added network construction.

The global value-added network links every node to every other node with the
value added in the first node that is induced, directly or through any chain
of intermediate purchases, by final demand for the second node's output::

    A = Z diag(T)^-1      L = (I - A)^-1      V = VA / T      F = FD 1
    G = diag(V) L diag(F)

The international network is G with every within-country block set to zero.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .ingest import IOTable
from .network import GVAN, IVAN, FlowNetwork

logger = logging.getLogger(__name__)


class LeontiefError(ArithmeticError):
    """The demand-driven model has no convergent solution."""


@dataclass(frozen=True)
class LeontiefSystem:
    A: np.ndarray
    L: np.ndarray
    V: np.ndarray
    F: np.ndarray
    nodes: tuple[tuple[str, str], ...]
    n_sectors: int
    spectral_radius: float


def _divide_by_output(x: np.ndarray, T: np.ndarray) -> np.ndarray:
    active = T != 0
    out = np.zeros_like(x, dtype=float)
    if x.ndim == 1:
        out[active] = x[active] / T[active]
    else:
        out[:, active] = x[:, active] / T[active]
    return out


def spectral_radius_bound(A: np.ndarray, iters: int = 200, tol: float = 1e-10) -> float:
    """Estimate of the spectral radius of ``|A|``, an upper bound for that of ``A``.

    Uses the max column sum when it already proves convergence, otherwise power
    iteration on ``|A|`` (Perron-Frobenius).
    """
    M = np.abs(A)
    if M.size == 0:
        return 0.0
    colsum = M.sum(axis=0).max()
    if colsum < 1.0:
        return float(colsum)
    x = np.full(M.shape[0], 1.0 / M.shape[0])
    rho = 0.0
    for _ in range(iters):
        y = M @ x
        norm = y.sum()
        if norm == 0.0:
            return 0.0
        y /= norm
        if np.abs(y - x).sum() < tol:
            x = y
            rho = norm
            break
        x, rho = y, norm
    return float(rho)


def build_leontief(table: IOTable, check_tol: float = 1e-8) -> LeontiefSystem:
    """Technical coefficients, Leontief inverse and value-added coefficients.

    Columns with zero total output get zero coefficients. Raises
    :class:`LeontiefError` when ``I - A`` is singular or when the spectral
    radius estimate of ``A`` is not below one.
    """
    T = table.T
    A = _divide_by_output(table.Z, T)
    rho = spectral_radius_bound(A)
    if rho >= 1.0:
        raise LeontiefError(f"spectral radius of A is not below 1 (estimate {rho:.6g})")
    n = A.shape[0]
    I_minus_A = np.eye(n) - A
    try:
        lu, piv = linalg.lu_factor(I_minus_A, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise LeontiefError(f"I - A is singular: {exc}") from exc
    if n and np.min(np.abs(np.diag(lu))) == 0.0:
        raise LeontiefError("I - A is singular")
    L = linalg.lu_solve((lu, piv), np.eye(n), check_finite=False)
    residual = np.abs(L @ I_minus_A - np.eye(n)).max(initial=0.0)
    if residual > check_tol * max(1.0, np.abs(L).max(initial=0.0)):
        raise LeontiefError(f"L (I - A) deviates from I by {residual:.3g}")
    V = _divide_by_output(table.VA, T)
    if np.any(V > 1 + 1e-9) or np.any(V < -1e-9):
        logger.warning("value-added coefficients outside [0, 1]: min %.3g max %.3g", V.min(), V.max())
    F = table.FD.sum(axis=1)
    return LeontiefSystem(A, L, V, F, table.nodes, table.n_sectors, rho)


def build_gvan(system: LeontiefSystem) -> FlowNetwork:
    """``G = diag(V) L diag(F)``; non-positive entries become absent links."""
    G = system.V[:, None] * system.L * system.F[None, :]
    negative = int(np.count_nonzero(G < 0))
    if negative:
        logger.warning("clamped %d negative induced flows to zero", negative)
    G = np.where(G > 0, G, 0.0)
    return FlowNetwork(
        system.nodes, G, GVAN,
        meta={"n_sectors": system.n_sectors, "clamped_negative": negative},
    )


def domestic_mask(n_nodes: int, n_sectors: int) -> np.ndarray:
    """Boolean mask of within-country cells for the ``country * n_s + sector`` layout."""
    if n_sectors <= 0 or n_nodes % n_sectors:
        raise ValueError(f"{n_nodes} nodes cannot be split into blocks of {n_sectors} sectors")
    country = np.arange(n_nodes) // n_sectors
    return country[:, None] == country[None, :]


def build_ivan(gvan: FlowNetwork, n_sectors: int) -> FlowNetwork:
    """Copy of ``gvan`` with every within-country block zeroed."""
    if gvan.kind not in (GVAN, IVAN):
        raise ValueError(f"expected a GVAN, got kind {gvan.kind!r}")
    mask = domestic_mask(gvan.n, n_sectors)
    Y = np.where(mask, 0.0, gvan.weights)
    meta = dict(gvan.meta, n_sectors=n_sectors)
    return FlowNetwork(gvan.nodes, Y, IVAN, meta)


def threshold_top_k(network: FlowNetwork, k: int) -> FlowNetwork:
    """Keep only the ``k`` heaviest links.

    Ties are broken by ``(source, target)`` index order, so the kept link sets
    are nested in ``k``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    w = network.weights
    src, dst = np.nonzero(w)
    vals = w[src, dst]
    if k >= vals.size:
        if k > vals.size:
            warnings.warn(
                f"k={k} exceeds the {vals.size} links present; keeping all",
                RuntimeWarning,
                stacklevel=2,
            )
        return network.with_weights(w.copy())
    order = np.lexsort((dst, src, -vals))[:k]
    out = np.zeros_like(w)
    out[src[order], dst[order]] = vals[order]
    return FlowNetwork(network.nodes, out, network.kind, dict(network.meta, top_k=k))

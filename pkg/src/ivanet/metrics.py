"""Structural statistics of flow networks and log-normal strength fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .network import FlowNetwork

BFS_BATCH = 512


@dataclass(frozen=True)
class StructuralReport:
    n_nodes: int
    n_links: int
    density: float
    reciprocity: float
    clustering_coefficient: float
    diameter: int
    average_path_length: float
    average_betweenness: float
    assortativity: float
    average_in_degree: float
    average_out_degree: float
    strongly_connected: bool
    directed_assortativity: dict = field(default_factory=dict)
    averages_over_nonzero: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def _adjacency(network: FlowNetwork) -> np.ndarray:
    A = network.weights > 0
    np.fill_diagonal(A, False)
    return A


def shortest_paths(A: np.ndarray, batch: int = BFS_BATCH):
    """Hop distances and betweenness from level-synchronous BFS over source batches.

    Returns ``(dist_sum, reachable_pairs, diameter, betweenness)``. Betweenness
    follows Brandes' dependency recursion over ordered pairs, endpoints
    excluded, with shortest-path multiplicities.
    """
    n = A.shape[0]
    Af = A.astype(float)
    AfT = np.ascontiguousarray(Af.T)
    between = np.zeros(n)
    dist_sum = 0
    pairs = 0
    diameter = 0
    for start in range(0, n, batch):
        src = np.arange(start, min(n, start + batch))
        b = src.size
        dist = np.full((b, n), -1, dtype=np.int32)
        sigma = np.zeros((b, n))
        dist[np.arange(b), src] = 0
        sigma[np.arange(b), src] = 1.0
        frontier = sigma.copy()
        d = 0
        while True:
            nxt = frontier @ Af
            new = (nxt > 0) & (dist < 0)
            if not new.any():
                break
            d += 1
            dist[new] = d
            sigma[new] = nxt[new]
            frontier = np.where(new, nxt, 0.0)
        reach = dist > 0
        dist_sum += int(dist[reach].sum())
        pairs += int(reach.sum())
        diameter = max(diameter, d)
        delta = np.zeros((b, n))
        for level in range(d, 0, -1):
            at = dist == level
            coef = np.where(at, (1.0 + delta) / np.where(at, sigma, 1.0), 0.0)
            back = coef @ AfT
            prev = dist == level - 1
            delta += np.where(prev, sigma * back, 0.0)
        delta[np.arange(b), src] = 0.0
        between += delta.sum(axis=0)
    return dist_sum, pairs, diameter, between


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if x.size == 0:
        return float("nan")
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return float("nan")
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def clustering(A: np.ndarray) -> np.ndarray:
    """Local clustering on the undirected projection; degree < 2 gives 0."""
    U = (A | A.T).astype(float)
    k = U.sum(axis=1)
    links = ((U @ U) * U).sum(axis=1) / 2.0
    possible = k * (k - 1) / 2.0
    c = np.zeros_like(k)
    ok = possible > 0
    c[ok] = links[ok] / possible[ok]
    return c


def assortativity(A: np.ndarray) -> float:
    """Degree correlation across links of the undirected projection."""
    U = A | A.T
    k = U.sum(axis=1).astype(float)
    i, j = np.nonzero(U)
    return _pearson(k[i] - 1, k[j] - 1)


def directed_assortativity(A: np.ndarray) -> dict[str, float]:
    """Source/target degree correlations over directed links, keyed ``source-target``."""
    kin = A.sum(axis=0).astype(float)
    kout = A.sum(axis=1).astype(float)
    i, j = np.nonzero(A)
    deg = {"in": kin, "out": kout}
    return {
        f"{a}-{b}": _pearson(deg[a][i], deg[b][j])
        for a in ("out", "in")
        for b in ("in", "out")
    }


def _mean_nonzero(x: np.ndarray) -> float:
    nz = x[x != 0]
    return float(nz.mean()) if nz.size else 0.0


def structural_report(network: FlowNetwork) -> StructuralReport:
    """Unweighted statistics of the directed link structure.

    Path statistics cover reachable ordered pairs only; ``strongly_connected``
    tells whether that is every pair. Degree and betweenness averages skip
    zero values.
    """
    n = network.n
    if n == 0:
        raise ValueError("network has no nodes")
    A = _adjacency(network)
    l = int(A.sum())
    density = l / (n * (n - 1)) if n > 1 else 0.0
    reciprocity = float((A & A.T).sum() / l) if l else 0.0
    dist_sum, pairs, diameter, between = shortest_paths(A)
    return StructuralReport(
        n_nodes=n,
        n_links=l,
        density=density,
        reciprocity=reciprocity,
        clustering_coefficient=float(clustering(A).mean()),
        diameter=int(diameter),
        average_path_length=dist_sum / pairs if pairs else 0.0,
        average_betweenness=_mean_nonzero(between),
        assortativity=assortativity(A),
        average_in_degree=_mean_nonzero(A.sum(axis=0).astype(float)),
        average_out_degree=_mean_nonzero(A.sum(axis=1).astype(float)),
        strongly_connected=pairs == n * (n - 1),
        directed_assortativity=directed_assortativity(A),
    )


@dataclass(frozen=True)
class LogFit:
    mu: float
    sigma: float
    log_base: str
    n_positive: int


@dataclass(frozen=True)
class StrengthFit:
    in_strength: np.ndarray
    out_strength: np.ndarray
    log_base: str
    fits: dict

    @property
    def mu_in(self) -> float:
        return self.fits["in"][self.log_base].mu

    @property
    def sigma_in(self) -> float:
        return self.fits["in"][self.log_base].sigma

    @property
    def mu_out(self) -> float:
        return self.fits["out"][self.log_base].mu

    @property
    def sigma_out(self) -> float:
        return self.fits["out"][self.log_base].sigma

    def ccdf(self, direction: str = "in") -> tuple[np.ndarray, np.ndarray]:
        s = self.in_strength if direction == "in" else self.out_strength
        return ccdf_points(s)


_LOGS = {"e": np.log, "10": np.log10}


def log_fit(strength: np.ndarray, log_base: str = "e") -> LogFit:
    s = np.asarray(strength, dtype=float)
    s = s[s > 0]
    if s.size == 0:
        raise ValueError("no positive strengths to fit")
    logs = _LOGS[log_base](s)
    return LogFit(float(logs.mean()), float(logs.std()), log_base, int(s.size))


def strength_fit(network: FlowNetwork, log_base: str = "e") -> StrengthFit:
    """Mean and population standard deviation of log in/out strengths.

    Fits are computed in both natural and base-10 logs; ``log_base`` picks the
    one the ``mu_*``/``sigma_*`` shortcuts report.
    """
    if log_base not in _LOGS:
        raise ValueError("log_base must be 'e' or '10'")
    W = network.weights
    s_in = W.sum(axis=0)
    s_out = W.sum(axis=1)
    if not (np.any(s_in > 0) or np.any(s_out > 0)):
        raise ValueError("all strengths are zero")
    fits = {
        name: {base: log_fit(s, base) for base in _LOGS}
        for name, s in (("in", s_in), ("out", s_out))
    }
    return StrengthFit(s_in, s_out, log_base, fits)


def ccdf_points(strength: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted positive strengths and the share of positive strengths at least as large."""
    s = np.sort(np.asarray(strength, dtype=float))
    s = s[s > 0]
    n = s.size
    first = np.searchsorted(s, s, side="left")
    return s, (n - first) / n


def lognormal_pdf(x, mu: float, sigma: float):
    x = np.asarray(x, dtype=float)
    return np.exp(-((np.log(x) - mu) ** 2) / (2 * sigma**2)) / (math.sqrt(2 * math.pi) * sigma * x)

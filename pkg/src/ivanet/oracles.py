"""Slow, definition-level reference computations for the test suite.

Nothing here imports the production implementation of the quantity it
checks: the Leontief series does not call the LU solve, the Hodge oracle does
not use the Cholesky path, and the partition enumerator carries its own random
walk and map-equation evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .network import FlowNetwork


def leontief_series(A: np.ndarray, tol: float = 1e-14, max_terms: int = 100_000) -> np.ndarray:
    """``sum_k A^k`` until the largest entry of the latest term is below ``tol``."""
    A = np.asarray(A, dtype=float)
    total = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for _ in range(max_terms):
        term = term @ A
        total = total + term
        if np.abs(term).max(initial=0.0) < tol:
            return total
    raise RuntimeError(f"power series did not converge within {max_terms} terms")


@dataclass(frozen=True)
class HodgeOracle:
    phi: np.ndarray
    circular: np.ndarray
    potential_flow: np.ndarray


def hodge_pseudoinverse(network: FlowNetwork) -> HodgeOracle:
    """Potentials from the Moore-Penrose inverse of the unit-weight Laplacian."""
    if network.n > 200:
        raise ValueError("oracle is limited to 200 nodes")
    W = network.weights.copy()
    np.fill_diagonal(W, 0.0)
    net = W - W.T
    adj = ((W + W.T) > 0).astype(float)
    lap = np.diag(adj.sum(axis=1)) - adj
    div = net.sum(axis=1)
    vals, vecs = np.linalg.eigh(lap)
    inv = np.where(vals > 1e-10 * max(1.0, vals.max(initial=0.0)), 1.0 / np.where(vals == 0, 1, vals), 0.0)
    phi = vecs @ (inv * (vecs.T @ div))
    pot = adj * (phi[:, None] - phi[None, :])
    return HodgeOracle(phi, net - pot, pot)


def set_partitions(n: int) -> Iterator[list[int]]:
    """All set partitions of ``range(n)`` as restricted growth strings."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i: int, m: int):
        if i == n:
            yield list(labels)
            return
        for c in range(m + 1):
            labels[i] = c
            yield from rec(i + 1, max(m, c + 1))

    yield from rec(1, 1)


def teleporting_walk(W: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Dense transition matrix and its stationary vector (leading eigenvector)."""
    n = W.shape[0]
    out = W.sum(axis=1)
    P = np.empty((n, n))
    for a in range(n):
        if out[a] > 0:
            P[a] = (1 - tau) * W[a] / out[a] + tau / n
        else:
            P[a] = 1.0 / n
    vals, vecs = np.linalg.eig(P.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    return P, v / v.sum()


def map_equation(W: np.ndarray, p: np.ndarray, tau: float, labels) -> float:
    """Eq.-level evaluation: exit rates straight from per-node transition splits."""
    n = W.shape[0]
    labels = list(labels)
    modules = sorted(set(labels))
    out = W.sum(axis=1)
    q = {}
    for m in modules:
        inside = [a for a in range(n) if labels[a] == m]
        n_out = n - len(inside)
        total = 0.0
        for a in inside:
            if out[a] > 0:
                leave = sum(W[a, b] for b in range(n) if labels[b] != m) / out[a]
                total += p[a] * ((1 - tau) * leave + tau * n_out / n)
            else:
                total += p[a] * n_out / n
        q[m] = total
    q_all = sum(q.values())
    L = 0.0
    if q_all > 0:
        L -= sum(x * math.log2(x / q_all) for x in q.values() if x > 0)
    for m in modules:
        within = q[m] + sum(p[a] for a in range(n) if labels[a] == m)
        terms = [q[m]] + [p[a] for a in range(n) if labels[a] == m]
        L -= sum(x * math.log2(x / within) for x in terms if x > 0)
    return L


@dataclass(frozen=True)
class BruteForcePartition:
    labels: tuple[int, ...]
    codelength: float
    ties: int


def partition_bruteforce(network: FlowNetwork, tau: float = 0.15, tol: float = 1e-12) -> BruteForcePartition:
    """Exhaustive map-equation minimum over every set partition (n <= 8)."""
    n = network.n
    if n > 8:
        raise ValueError("exhaustive search is limited to 8 nodes")
    W = network.weights
    _, p = teleporting_walk(W, tau)
    best = None
    best_L = math.inf
    ties = 0
    for labels in set_partitions(n):
        L = map_equation(W, p, tau, labels)
        if L < best_L - tol:
            best, best_L, ties = labels, L, 1
        elif abs(L - best_L) <= tol:
            ties += 1
    return BruteForcePartition(tuple(best), best_L, ties)

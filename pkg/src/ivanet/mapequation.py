"""Two-level map equation for directed weighted networks.

The walker follows an out-link with probability ``1 - tau`` (proportionally
to link weight) and teleports to a uniformly random node with probability
``tau``; nodes without out-links always teleport. Teleportation steps are
recorded, i.e. a teleport that lands outside the current module counts as a
module exit. For module ``i`` with ``n_i`` of the ``n`` nodes::

    q_i = sum_{a in i, b not in i} f_ab  +  t_i (n - n_i) / n

where ``f_ab = p_a (1 - tau) w_ab / s_a`` is the link flow and ``t_i`` the
teleporting mass of the module's nodes. The codelength is evaluated as

    L = q H(Q) + sum_i p_i H(P^i)

with ``q = sum q_i`` and ``p_i = q_i + sum_{a in i} p_a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .network import FlowNetwork

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

DEFAULT_TELEPORT = 0.15

# Levels with at most this many (super-)nodes try every module as a move
# target, not only linked ones; teleportation makes unlinked merges useful.
ALL_MODULES_LIMIT = 64


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class VisitDistribution:
    p: np.ndarray
    teleport_prob: float
    iterations: int = 0
    residual: float = 0.0


def stationary_visits(
    network: FlowNetwork,
    teleport_prob: float = DEFAULT_TELEPORT,
    tol: float = 1e-15,
    max_iter: int = 100_000,
) -> VisitDistribution:
    """Stationary visit rates of the teleporting random walk (power iteration).

    Iterates until the L1 change drops below ``tol``; convergence stalls at
    rounding level, so a change that stops shrinking within ``1e3 * eps * n``
    is also accepted.
    """
    if not 0.0 < teleport_prob < 1.0:
        raise ValueError("teleport_prob must lie strictly between 0 and 1")
    W = network.weights
    n = W.shape[0]
    if n == 0:
        raise ValueError("network has no nodes")
    P, dangling = _transition(W)
    p = np.full(n, 1.0 / n)
    floor = max(tol, 1e3 * np.finfo(float).eps * np.sqrt(n))
    residual = np.inf
    for it in range(1, max_iter + 1):
        jump = teleport_prob * p[~dangling].sum() + p[dangling].sum()
        new = (1.0 - teleport_prob) * (P.T @ p) + jump / n
        new /= new.sum()
        residual = float(np.abs(new - p).sum())
        p = new
        if residual < tol or (residual < floor and it > 10):
            return VisitDistribution(p, teleport_prob, it, residual)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (residual {residual:.3g})"
    )


def _transition(W: np.ndarray):
    out = W.sum(axis=1)
    dangling = out <= 0
    scale = np.zeros_like(out)
    scale[~dangling] = 1.0 / out[~dangling]
    P = sparse.csr_matrix(W * scale[:, None]) if np.count_nonzero(W) < 0.3 * W.size else W * scale[:, None]
    return P, dangling


def flow_terms(network: FlowNetwork, visits: VisitDistribution, recorded: bool = True):
    """Link flows (CSR, self-loops dropped) and per-node teleporting mass."""
    W = network.weights
    p = visits.p
    tau = visits.teleport_prob
    out = W.sum(axis=1)
    dangling = out <= 0
    scale = np.zeros_like(out)
    scale[~dangling] = p[~dangling] / out[~dangling]
    step = (1.0 - tau) if recorded else 1.0
    F = sparse.csr_matrix(W * (step * scale)[:, None])
    F.setdiag(0.0)
    F.eliminate_zeros()
    if recorded:
        tele = np.where(dangling, p, tau * p)
    else:
        tele = np.zeros_like(p)
    return F, tele


def _plogp(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


@dataclass(frozen=True)
class ModuleStats:
    exit: np.ndarray
    flow: np.ndarray
    size: np.ndarray

    @property
    def total_exit(self) -> float:
        return float(self.exit.sum())

    @property
    def within(self) -> np.ndarray:
        """Per-module rate ``p_i`` (node visits plus exit)."""
        return self.flow + self.exit


def module_stats(
    network: FlowNetwork,
    visits: VisitDistribution,
    assignment: np.ndarray,
    recorded: bool = True,
) -> ModuleStats:
    assignment = np.asarray(assignment, dtype=int)
    n = network.n
    m = int(assignment.max()) + 1 if n else 0
    F, tele = flow_terms(network, visits, recorded)
    coo = F.tocoo()
    leaving = assignment[coo.row] != assignment[coo.col]
    link_exit = np.bincount(assignment[coo.row[leaving]], weights=coo.data[leaving], minlength=m)
    size = np.bincount(assignment, minlength=m).astype(float)
    tele_m = np.bincount(assignment, weights=tele, minlength=m)
    exit_ = link_exit + tele_m * (n - size) / n
    flow = np.bincount(assignment, weights=visits.p, minlength=m)
    return ModuleStats(exit_, flow, size)


def codelength(
    network: FlowNetwork,
    visits: VisitDistribution,
    assignment,
    recorded: bool = True,
) -> float:
    """Map-equation codelength in bits per step for a node-to-module assignment."""
    assignment = np.asarray(assignment, dtype=int)
    if assignment.shape != (network.n,):
        raise ValueError("assignment must give one module per node")
    stats = module_stats(network, visits, assignment, recorded)
    q = stats.total_exit
    index_term = 0.0
    if q > 0:
        Q = stats.exit[stats.exit > 0] / q
        index_term = -q * float(np.sum(Q * np.log2(Q)))
    module_term = 0.0
    p = visits.p
    for i in np.flatnonzero(stats.within > 0):
        pi = stats.within[i]
        probs = np.append(p[assignment == i], stats.exit[i]) / pi
        probs = probs[probs > 0]
        module_term -= pi * float(np.sum(probs * np.log2(probs)))
    return index_term + module_term


# ---------------------------------------------------------------------------
# greedy optimisation


@njit(cache=True)
def _plogp1(x):
    if x > 0.0:
        return x * np.log2(x)
    return 0.0


@njit(cache=True)
def _move_nodes(
    order, indptr_o, idx_o, val_o, indptr_i, idx_i, val_i,
    node_flow, node_tele, node_count, node_out, node_in,
    module, mod_flow, mod_tele, mod_count, mod_out, mod_members,
    empty, n_empty, n_total, max_passes, min_gain, all_modules,
):
    """Single-node moves until a full pass changes nothing. Returns the number of moves.

    Candidate targets are the modules linked to the node, one empty module,
    and, when ``all_modules`` is set, every other non-empty module as well.
    """
    n = order.size
    n_mod = mod_flow.size
    fo = np.zeros(n_mod)
    fi = np.zeros(n_mod)
    seen = np.zeros(n_mod, dtype=np.bool_)
    touched = np.empty(n_mod, dtype=np.int64)
    total_exit = 0.0
    for m in range(n_mod):
        total_exit += mod_out[m] + mod_tele[m] * (n_total - mod_count[m]) / n_total
    moves = 0
    for _ in range(max_passes):
        moved = 0
        for oi in range(n):
            v = order[oi]
            a = module[v]
            nt = 0
            for k in range(indptr_o[v], indptr_o[v + 1]):
                m = module[idx_o[k]]
                if not seen[m]:
                    seen[m] = True
                    touched[nt] = m
                    nt += 1
                fo[m] += val_o[k]
            for k in range(indptr_i[v], indptr_i[v + 1]):
                m = module[idx_i[k]]
                if not seen[m]:
                    seen[m] = True
                    touched[nt] = m
                    nt += 1
                fi[m] += val_i[k]
            if all_modules:
                for m in range(n_mod):
                    if mod_members[m] > 0 and not seen[m]:
                        seen[m] = True
                        touched[nt] = m
                        nt += 1
            # module a without v
            out_a = mod_out[a] - (node_out[v] - fo[a]) + fi[a]
            flow_a = mod_flow[a] - node_flow[v]
            tele_a = mod_tele[a] - node_tele[v]
            cnt_a = mod_count[a] - node_count[v]
            ex_a_old = mod_out[a] + mod_tele[a] * (n_total - mod_count[a]) / n_total
            ex_a_new = out_a + tele_a * (n_total - cnt_a) / n_total
            best = -1
            best_delta = 0.0
            # candidates: neighbouring modules, then one empty module
            n_cand = nt
            use_empty = mod_members[a] > 1 and n_empty > 0
            if use_empty:
                n_cand += 1
            for c in range(n_cand):
                if c < nt:
                    b = touched[c]
                else:
                    b = empty[n_empty - 1]
                if b == a:
                    continue
                ex_b_old = mod_out[b] + mod_tele[b] * (n_total - mod_count[b]) / n_total
                out_b = mod_out[b] + (node_out[v] - fo[b]) - fi[b]
                flow_b = mod_flow[b] + node_flow[v]
                tele_b = mod_tele[b] + node_tele[v]
                cnt_b = mod_count[b] + node_count[v]
                ex_b_new = out_b + tele_b * (n_total - cnt_b) / n_total
                tot_new = total_exit - ex_a_old - ex_b_old + ex_a_new + ex_b_new
                delta = (
                    _plogp1(tot_new) - _plogp1(total_exit)
                    - 2.0 * (_plogp1(ex_a_new) + _plogp1(ex_b_new) - _plogp1(ex_a_old) - _plogp1(ex_b_old))
                    + _plogp1(ex_a_new + flow_a) + _plogp1(ex_b_new + flow_b)
                    - _plogp1(ex_a_old + mod_flow[a]) - _plogp1(ex_b_old + mod_flow[b])
                )
                if delta < best_delta - min_gain or (
                    best >= 0 and abs(delta - best_delta) <= min_gain and b < best
                ):
                    best = b
                    best_delta = delta
            if best >= 0 and best_delta < -min_gain:
                b = best
                if mod_members[b] == 0:
                    n_empty -= 1
                ex_b_old = mod_out[b] + mod_tele[b] * (n_total - mod_count[b]) / n_total
                mod_out[b] = mod_out[b] + (node_out[v] - fo[b]) - fi[b]
                mod_flow[b] += node_flow[v]
                mod_tele[b] += node_tele[v]
                mod_count[b] += node_count[v]
                mod_members[b] += 1
                ex_b_new = mod_out[b] + mod_tele[b] * (n_total - mod_count[b]) / n_total
                mod_out[a] = out_a
                mod_flow[a] = flow_a
                mod_tele[a] = tele_a
                mod_count[a] = cnt_a
                mod_members[a] -= 1
                if mod_members[a] == 0:
                    empty[n_empty] = a
                    n_empty += 1
                    mod_out[a] = 0.0
                    mod_flow[a] = 0.0
                    mod_tele[a] = 0.0
                    mod_count[a] = 0.0
                    ex_a_new = 0.0
                total_exit += ex_a_new + ex_b_new - ex_a_old - ex_b_old
                module[v] = b
                moved += 1
            for c in range(nt):
                m = touched[c]
                fo[m] = 0.0
                fi[m] = 0.0
                seen[m] = False
        moves += moved
        if moved == 0:
            break
    return moves


class _Level:
    """Flow data of one aggregation level (original nodes or merged modules)."""

    def __init__(self, F: sparse.csr_matrix, flow, tele, count):
        F = sparse.csr_matrix(F)
        F.setdiag(0.0)
        F.eliminate_zeros()
        F.sort_indices()
        self.F = F
        Fc = F.tocsc()
        Fc.sort_indices()
        self.Fc = Fc
        self.flow = np.asarray(flow, dtype=float)
        self.tele = np.asarray(tele, dtype=float)
        self.count = np.asarray(count, dtype=float)
        self.out = np.asarray(F.sum(axis=1)).ravel()
        self.inn = np.asarray(F.sum(axis=0)).ravel()

    @property
    def n(self) -> int:
        return self.flow.size

    def aggregate(self, module: np.ndarray) -> "_Level":
        m = int(module.max()) + 1
        M = sparse.csr_matrix((np.ones(self.n), (np.arange(self.n), module)), shape=(self.n, m))
        return _Level(
            (M.T @ self.F @ M).tocsr(),
            np.bincount(module, weights=self.flow, minlength=m),
            np.bincount(module, weights=self.tele, minlength=m),
            np.bincount(module, weights=self.count, minlength=m),
        )

    def move(self, module: np.ndarray, rng: np.random.Generator, n_total: int,
             max_passes: int = 200, min_gain: float = 1e-14):
        n = self.n
        module = module.astype(np.int64)
        mod_flow = np.bincount(module, weights=self.flow, minlength=n)
        mod_tele = np.bincount(module, weights=self.tele, minlength=n)
        mod_count = np.bincount(module, weights=self.count, minlength=n)
        mod_members = np.bincount(module, minlength=n).astype(np.int64)
        coo = self.F.tocoo()
        leaving = module[coo.row] != module[coo.col]
        mod_out = np.bincount(module[coo.row[leaving]], weights=coo.data[leaving], minlength=n)
        empty = np.zeros(n, dtype=np.int64)
        free = np.flatnonzero(mod_members == 0)[::-1]
        empty[: free.size] = free
        order = rng.permutation(n).astype(np.int64)
        moves = _move_nodes(
            order,
            self.F.indptr.astype(np.int64), self.F.indices.astype(np.int64), self.F.data,
            self.Fc.indptr.astype(np.int64), self.Fc.indices.astype(np.int64), self.Fc.data,
            self.flow, self.tele, self.count, self.out, self.inn,
            module, mod_flow, mod_tele, mod_count, mod_out, mod_members,
            empty, free.size, float(n_total), max_passes, min_gain,
            n <= ALL_MODULES_LIMIT,
        )
        return int(moves), module


def _compact(labels: np.ndarray) -> np.ndarray:
    _, inv = np.unique(labels, return_inverse=True)
    return inv.astype(np.int64)


def optimize_assignment(
    network: FlowNetwork,
    visits: VisitDistribution,
    rng: np.random.Generator,
    recorded: bool = True,
    max_rounds: int = 20,
) -> np.ndarray:
    """One greedy run: node moves, aggregation into super-nodes, repeat.

    After the hierarchy converges the result is re-tuned from the original
    nodes (moves start from the current modules) until the codelength stops
    improving.
    """
    F, tele = flow_terms(network, visits, recorded)
    base = _Level(F, visits.p, tele, np.ones(network.n))
    n_total = network.n
    assignment = np.arange(network.n, dtype=np.int64)
    best = np.inf
    for _ in range(max_rounds):
        assignment = _multilevel(base, assignment, rng, n_total)
        L = codelength(network, visits, assignment, recorded)
        if L >= best - 1e-12:
            break
        best = L
    return assignment


def _multilevel(base: _Level, start: np.ndarray, rng, n_total: int) -> np.ndarray:
    level = base
    _, module = level.move(start.copy(), rng, n_total)
    assignment = _compact(module)
    while True:
        level = level.aggregate(_compact(module))
        moves, module = level.move(np.arange(level.n, dtype=np.int64), rng, n_total)
        if moves == 0:
            return assignment
        assignment = _compact(module)[assignment]

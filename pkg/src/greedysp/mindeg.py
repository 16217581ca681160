"""Starting permutations from minimum-degree elimination.

:func:`neighbor_min_degree` eliminates nodes of an estimated undirected
graph, retesting only pairs of neighbours of the eliminated node.
:func:`classic_min_degree` runs minimum degree directly on a precision
matrix, either symbolically (neighbours of the eliminated node become a
clique) or numerically (the graph after each step is the nonzero pattern of
the marginal precision matrix of the remaining variables).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable

import numpy as np

from .ci import CiOracle, GaussianOracle, GaussianSuffStats
from .errors import GuardError
from .graph import Dag, bit, full_mask, iter_nodes
from .imap import Permutation, imap_parent_masks


@dataclass
class EliminationState:
    """Remaining nodes, their current undirected graph and assigned positions."""

    remaining: int
    adj: list[int]
    position: dict[int, int]

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    def lowest_degree_nodes(self) -> list[int]:
        nodes = list(iter_nodes(self.remaining))
        if not nodes:
            return []
        low = min(self.degree(v) for v in nodes)
        return [v for v in nodes if self.degree(v) == low]

    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for i in iter_nodes(self.remaining)
                         for j in iter_nodes(self.adj[i]) if i < j)

    def permutation(self) -> Permutation:
        p = len(self.position)
        perm = [0] * p
        for v, pos in self.position.items():
            perm[pos - 1] = v
        return tuple(perm)


def as_oracle(source, tau: float | None = None, alpha: float | None = None) -> CiOracle:
    if isinstance(source, CiOracle):
        return source
    if isinstance(source, GaussianSuffStats):
        return GaussianOracle(source, tau=tau, alpha=alpha)
    raise TypeError("expected a CI oracle or Gaussian statistics")


def _moral_mask(p: int, moral_graph: Iterable[tuple[int, int]] | None) -> list[int] | None:
    if moral_graph is None:
        return None
    allowed = [0] * (p + 1)
    for i, j in moral_graph:
        allowed[i] |= bit(j)
        allowed[j] |= bit(i)
    return allowed


def initial_state(oracle: CiOracle, allowed: list[int] | None = None) -> EliminationState:
    """Edge i -- j iff i and j are dependent given all other nodes."""
    p = oracle.p
    fm = full_mask(p)
    adj = [0] * (p + 1)
    for i, j in combinations(range(1, p + 1), 2):
        if allowed is not None and not allowed[i] >> j & 1:
            continue
        if not oracle.indep_mask(i, j, fm & ~bit(i) & ~bit(j)):
            adj[i] |= bit(j)
            adj[j] |= bit(i)
    return EliminationState(fm, adj, {})


def eliminate(state: EliminationState, k: int, dependent: Callable[[int, int, int], bool]) -> EliminationState:
    """Remove k and update the graph among its neighbours.

    Missing neighbour pairs are added; existing neighbour pairs are kept iff
    ``dependent(i, j, S - {i, j, k})``; all other pairs keep their status.
    """
    s = state.remaining
    adj = list(state.adj)
    nbrs = adj[k]
    for i, j in combinations(iter_nodes(nbrs), 2):
        if adj[i] >> j & 1:
            keep = dependent(i, j, s & ~bit(i) & ~bit(j) & ~bit(k))
        else:
            keep = True
        if keep:
            adj[i] |= bit(j)
            adj[j] |= bit(i)
        else:
            adj[i] &= ~bit(j)
            adj[j] &= ~bit(i)
    for v in iter_nodes(nbrs):
        adj[v] &= ~bit(k)
    adj[k] = 0
    position = dict(state.position)
    position[k] = s.bit_count()
    return EliminationState(s & ~bit(k), adj, position)


def neighbor_min_degree(source, tau: float | None = None, seed=None, *,
                        alpha: float | None = None, rng: np.random.Generator | None = None,
                        moral_graph: Iterable[tuple[int, int]] | None = None
                        ) -> tuple[Permutation, Dag]:
    """Neighbour-based minimum degree ordering and its minimal I-MAP.

    ``source`` is a CI oracle or Gaussian statistics (then ``tau`` or
    ``alpha`` selects the tester).  Ties among lowest-degree nodes are broken
    uniformly at random with ``rng`` (or a generator seeded with ``seed``).
    The first eliminated node goes to the last position.
    """
    oracle = as_oracle(source, tau, alpha)
    if rng is None:
        rng = np.random.default_rng(seed)
    allowed = _moral_mask(oracle.p, moral_graph)
    state = initial_state(oracle, allowed)

    def dependent(i, j, s):
        return not oracle.indep_mask(i, j, s)

    while state.remaining:
        low = state.lowest_degree_nodes()
        k = low[int(rng.integers(len(low)))]
        state = eliminate(state, k, dependent)
    perm = state.permutation()
    pa = imap_parent_masks(perm, oracle)
    if allowed is not None:
        pa = [m & allowed[v] if v else 0 for v, m in enumerate(pa)]
    return perm, Dag.from_parent_masks(oracle.p, pa)


def _enumerate(state: EliminationState, step, memo) -> frozenset[tuple[int, ...]]:
    """All elimination orders reachable from ``state`` under every tie-break."""
    if not state.remaining:
        return frozenset({()})
    key = (state.remaining, tuple(state.adj))
    hit = memo.get(key)
    if hit is not None:
        return hit
    out = set()
    for k in state.lowest_degree_nodes():
        for rest in _enumerate(step(state, k), step, memo):
            out.add((k,) + rest)
    memo[key] = frozenset(out)
    return memo[key]


def _orders_to_perms(orders) -> frozenset[Permutation]:
    return frozenset(tuple(reversed(o)) for o in orders)


def neighbor_min_degree_outputs(source, tau: float | None = None, *, alpha: float | None = None,
                                max_nodes: int = 8) -> frozenset[Permutation]:
    """Every permutation the neighbour-based algorithm can output."""
    oracle = as_oracle(source, tau, alpha)
    if oracle.p > max_nodes:
        raise GuardError(f"exhaustive enumeration refused for p = {oracle.p} > {max_nodes}")

    def dependent(i, j, s):
        return not oracle.indep_mask(i, j, s)

    start = initial_state(oracle)
    return _orders_to_perms(_enumerate(start, lambda st, k: eliminate(st, k, dependent), {}))


def _pattern(theta: np.ndarray, tol: float) -> list[int]:
    p = theta.shape[0]
    adj = [0] * (p + 1)
    d = np.sqrt(np.abs(np.diag(theta)))
    for a, b in combinations(range(p), 2):
        if abs(theta[a, b]) > tol * d[a] * d[b]:
            adj[a + 1] |= bit(b + 1)
            adj[b + 1] |= bit(a + 1)
    return adj


def _symbolic_step(state: EliminationState, k: int) -> EliminationState:
    adj = list(state.adj)
    nbrs = adj[k]
    for v in iter_nodes(nbrs):
        adj[v] |= nbrs & ~bit(v)
        adj[v] &= ~bit(k)
    adj[k] = 0
    position = dict(state.position)
    position[k] = state.remaining.bit_count()
    return EliminationState(state.remaining & ~bit(k), adj, position)


def _numeric_step_factory(theta: np.ndarray, tol: float):
    cov = np.linalg.inv(theta)

    def step(state: EliminationState, k: int) -> EliminationState:
        remaining = state.remaining & ~bit(k)
        nodes = list(iter_nodes(remaining))
        adj = [0] * len(state.adj)
        if nodes:
            idx = [v - 1 for v in nodes]
            marg = np.linalg.inv(cov[np.ix_(idx, idx)])
            sub = _pattern(marg, tol)
            for a, v in enumerate(nodes):
                for b in iter_nodes(sub[a + 1]):
                    adj[v] |= bit(nodes[b - 1])
        position = dict(state.position)
        position[k] = state.remaining.bit_count()
        return EliminationState(remaining, adj, position)

    return step


def classic_min_degree(theta: np.ndarray, *, mode: str = "symbolic", exhaustive: bool = True,
                       seed=None, tol: float = 1e-9, max_nodes: int = 8):
    """Minimum degree ordering on the nonzero pattern of a precision matrix.

    ``mode="symbolic"`` connects the neighbours of each eliminated node into a
    clique.  ``mode="numeric"`` recomputes the pattern of the marginal
    precision matrix of the remaining variables, which also removes edges
    that cancel numerically.  With ``exhaustive=True`` the set of
    permutations over all tie-breaks is returned; otherwise one seeded
    branch is followed and its permutation returned.  Entries count as
    nonzero when their scaled magnitude exceeds ``tol``.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError("precision matrix must be square")
    if not np.allclose(theta, theta.T):
        raise ValueError("precision matrix must be symmetric")
    p = theta.shape[0]
    if mode == "symbolic":
        step = _symbolic_step
    elif mode == "numeric":
        step = _numeric_step_factory(theta, tol)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    start = EliminationState(full_mask(p), _pattern(theta, tol), {})
    if exhaustive:
        if p > max_nodes:
            raise GuardError(f"exhaustive enumeration refused for p = {p} > {max_nodes}")
        return _orders_to_perms(_enumerate(start, step, {}))
    rng = np.random.default_rng(seed)
    state = start
    while state.remaining:
        low = state.lowest_degree_nodes()
        state = step(state, low[int(rng.integers(len(low)))])
    return state.permutation()

"""Order-independent PC algorithm, used as a baseline."""

from __future__ import annotations

from itertools import combinations

from ..ci import CiOracle, GaussianOracle, GaussianSuffStats
from ..graph import Pdag, bit, iter_nodes, meek_closure


def as_ci_source(source, alpha_or_tau: float | None = None) -> CiOracle:
    """Oracles pass through; Gaussian statistics with a sample size are tested
    with Fisher z at level ``alpha_or_tau``, exact covariances thresholded at it."""
    if isinstance(source, CiOracle):
        return source
    if isinstance(source, GaussianSuffStats):
        if alpha_or_tau is None:
            raise ValueError("Gaussian statistics need alpha (samples) or tau (exact)")
        if source.n is not None:
            return GaussianOracle(source, alpha=alpha_or_tau)
        return GaussianOracle(source, tau=alpha_or_tau)
    raise TypeError("expected a CI oracle or Gaussian statistics")


def pc_skeleton(oracle: CiOracle, max_cond: int | None = None):
    """Stable skeleton search: at each level the candidate conditioning sets
    come from the adjacencies frozen at the start of that level."""
    p = oracle.p
    full = (1 << (p + 1)) - 2
    adj = [0] + [full & ~bit(v) for v in range(1, p + 1)]
    sepset: dict[tuple[int, int], frozenset[int]] = {}
    level = 0
    while max_cond is None or level <= max_cond:
        frozen = list(adj)
        tested = False
        for i in range(1, p + 1):
            for j in iter_nodes(frozen[i]):
                if not adj[i] >> j & 1:
                    continue
                cand = tuple(iter_nodes(frozen[i] & ~bit(j)))
                if len(cand) < level:
                    continue
                tested = True
                for s in combinations(cand, level):
                    m = 0
                    for v in s:
                        m |= bit(v)
                    if oracle.indep_mask(i, j, m):
                        adj[i] &= ~bit(j)
                        adj[j] &= ~bit(i)
                        sepset[(min(i, j), max(i, j))] = frozenset(s)
                        break
        if not tested:
            break
        level += 1
    return adj, sepset


def pc_baseline(stats_or_oracle, alpha_or_tau: float | None = None,
                max_cond: int | None = None) -> Pdag:
    """Skeleton, v-structures from separating sets, then Meek closure."""
    oracle = as_ci_source(stats_or_oracle, alpha_or_tau)
    p = oracle.p
    adj, sepset = pc_skeleton(oracle, max_cond)
    arrows: set[tuple[int, int]] = set()
    for k in range(1, p + 1):
        for i, j in combinations(iter_nodes(adj[k]), 2):
            if adj[i] >> j & 1:
                continue
            if k in sepset.get((i, j), frozenset()):
                continue
            for a in (i, j):
                if (k, a) not in arrows:
                    arrows.add((a, k))
    undirected = []
    for i in range(1, p + 1):
        for j in iter_nodes(adj[i]):
            if i < j and (i, j) not in arrows and (j, i) not in arrows:
                undirected.append((i, j))
    return meek_closure(p, arrows, undirected)

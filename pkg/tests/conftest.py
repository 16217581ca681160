import sys
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from greedysp.ci import CiSet
from greedysp.graph import Dag


# Independence sets used across several test modules.
C_TRIANGLE_TRAP = [(1, 2, {4}), (1, 3, {2}), (2, 4, {1, 3})]
C_NOT_FAITHFUL = [(1, 5, {2, 3}), (2, 4, {1, 3}), (3, 5, {1, 2, 4}), (1, 4, {2, 3, 5}), (1, 4, {2, 3})]
C_EDGE_TRAP = [(1, 3, {2}), (2, 4, {1, 3}), (4, 5, set())]
C_SIX = [(1, 3, set()), (1, 5, {2, 3, 4}), (4, 6, {1, 2, 3, 5}), (1, 3, {2, 4, 5, 6})]


@pytest.fixture
def trap4():
    return CiSet(4, C_TRIANGLE_TRAP)


@pytest.fixture
def not_faithful5():
    return CiSet(5, C_NOT_FAITHFUL)


@pytest.fixture
def edge_trap5():
    return CiSet(5, C_EDGE_TRAP)


@pytest.fixture
def six():
    return CiSet(6, C_SIX)


def random_dag(p: int, prob: float, rng: np.random.Generator, shuffle: bool = True) -> Dag:
    """Erdos-Renyi DAG, optionally under a random relabelling of the nodes."""
    labels = rng.permutation(p) + 1 if shuffle else np.arange(1, p + 1)
    arrows = [(int(labels[i]), int(labels[j])) for i, j in combinations(range(p), 2)
              if rng.random() < prob]
    return Dag(p, arrows)


def path_dsep(g: Dag, i: int, j: int, s) -> bool:
    """d-separation by enumerating simple paths and checking every triple.

    Deliberately naive and independent of the library's moralisation code.
    """
    s = set(s)
    nbrs = {v: set(g.parents(v)) | set(g.children(v)) for v in range(1, g.p + 1)}
    anc_s = set()
    for v in s:
        anc_s |= g.ancestors(v) | {v}

    def active(path):
        for a, b, c in zip(path, path[1:], path[2:]):
            collider = g.has_arrow(a, b) and g.has_arrow(c, b)
            if collider and b not in anc_s:
                return False
            if not collider and b in s:
                return False
        return True

    stack = [[i]]
    while stack:
        path = stack.pop()
        last = path[-1]
        for nxt in nbrs[last]:
            if nxt in path:
                continue
            cand = path + [nxt]
            if nxt == j:
                if active(cand):
                    return False
                continue
            stack.append(cand)
    return True

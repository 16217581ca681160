"""Minimal I-MAPs of permutations and their update after a covered-arrow flip.

For a permutation ``pi`` the minimal I-MAP ``G_pi`` has the arrow
``pi_a -> pi_b`` (a < b) exactly when the oracle reports ``pi_a`` and ``pi_b``
dependent given every other node placed at or before position b.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .ci import CiOracle
from .graph import Dag, GraphError, bit, is_covered, iter_nodes


Permutation = tuple[int, ...]


def check_perm(perm: Iterable[int], p: int) -> Permutation:
    perm = tuple(int(v) for v in perm)
    if sorted(perm) != list(range(1, p + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{p}")
    return perm


def imap_parent_masks(perm: Sequence[int], oracle: CiOracle) -> list[int]:
    """Parent bitmasks of G_perm (index 0 unused)."""
    pa = [0] * (len(perm) + 1)
    query = oracle.indep_mask
    prefix = 0
    for b in perm:
        m = 0
        for a in iter_nodes(prefix):
            if not query(a, b, prefix & ~bit(a)):
                m |= bit(a)
        pa[b] = m
        prefix |= bit(b)
    return pa


class ParentCache:
    """Memoised parent sets: the parents of v given the set of nodes placed
    before it depend only on (v, that set), not on their order."""

    def __init__(self, oracle: CiOracle):
        self.oracle = oracle
        self._cache: dict[tuple[int, int], int] = {}

    def parents(self, v: int, prefix: int) -> int:
        key = (v, prefix)
        m = self._cache.get(key)
        if m is None:
            m = 0
            query = self.oracle.indep_mask
            for a in iter_nodes(prefix):
                if not query(a, v, prefix & ~bit(a)):
                    m |= bit(a)
            self._cache[key] = m
        return m

    def masks(self, perm: Sequence[int]) -> list[int]:
        pa = [0] * (len(perm) + 1)
        prefix = 0
        for v in perm:
            pa[v] = self.parents(v, prefix)
            prefix |= bit(v)
        return pa

    def count(self, perm: Sequence[int]) -> int:
        total = 0
        prefix = 0
        for v in perm:
            total += self.parents(v, prefix).bit_count()
            prefix |= bit(v)
        return total


def imap_arrow_count(perm: Sequence[int], oracle: CiOracle) -> int:
    return sum(m.bit_count() for m in imap_parent_masks(perm, oracle))


def imap_dag(perm: Sequence[int], oracle: CiOracle) -> Dag:
    return Dag.from_parent_masks(len(perm), imap_parent_masks(perm, oracle))


@dataclass(frozen=True)
class MinimalImap:
    """A DAG together with the permutation it was built from.

    ``approximate`` is set when the DAG came from a constrained update on an
    oracle that is not known to be faithful, in which case the defining
    property is not guaranteed.
    """

    dag: Dag
    perm: Permutation
    source: str = "oracle"
    approximate: bool = False


def minimal_imap(perm: Iterable[int], oracle: CiOracle) -> MinimalImap:
    perm = check_perm(perm, oracle.p)
    return MinimalImap(imap_dag(perm, oracle), perm, oracle.tag)


def flip_permutation(perm: Sequence[int], i: int, j: int) -> Permutation:
    """Move j to the position immediately before i.

    When i -> j is covered in a DAG with linear extension ``perm`` the result
    is a linear extension of the DAG with that arrow reversed, because every
    other parent of j is also a parent of i and so already precedes i.
    """
    perm = list(perm)
    pi, pj = perm.index(i), perm.index(j)
    if pi > pj:
        raise ValueError(f"{i} does not precede {j} in the permutation")
    perm.pop(pj)
    perm.insert(pi, j)
    return tuple(perm)


def adjacent_flip_permutation(dag: Dag, perm: Sequence[int], i: int, j: int) -> Permutation:
    """Linear extension of ``dag`` in which i and j are adjacent, then swapped.

    Nodes between i and j that are descendants of i move after j; the others
    move before i.  This realises the covered flip as one adjacent
    transposition.
    """
    perm = list(perm)
    pi, pj = perm.index(i), perm.index(j)
    between = perm[pi + 1:pj]
    desc = dag.descendants_mask(bit(i))
    before = [v for v in between if not desc >> v & 1]
    after = [v for v in between if desc >> v & 1]
    return tuple(perm[:pi] + before + [j, i] + after + perm[pj + 1:])


def constrained_flip_update(m: MinimalImap, a: tuple[int, int], oracle: CiOracle,
                            mode: str = "full") -> MinimalImap:
    """The minimal I-MAP after reversing the covered arrow ``a = (i, j)``.

    ``mode="full"`` rebuilds from the flipped permutation.  ``mode="constrained"``
    reverses the arrow and then, for each common parent k, drops k -> i when
    i _||_ k | (pa(i) + j - k) and drops k -> j when j _||_ k | (pa(i) - k).
    The two agree whenever the oracle is faithful to some DAG.
    """
    i, j = a
    g = m.dag
    if not is_covered(g, i, j):
        raise GraphError(f"arrow {i}->{j} is not covered")
    tau = flip_permutation(m.perm, i, j)
    if mode == "full":
        return MinimalImap(imap_dag(tau, oracle), tau, oracle.tag)
    if mode != "constrained":
        raise ValueError(f"unknown update mode {mode!r}")
    pa = list(g.parent_masks)
    s = pa[i]
    pa[j] &= ~bit(i)
    pa[i] = s | bit(j)
    for k in iter_nodes(s):
        if oracle.indep_mask(i, k, (s | bit(j)) & ~bit(k)):
            pa[i] &= ~bit(k)
        if oracle.indep_mask(j, k, s & ~bit(k)):
            pa[j] &= ~bit(k)
    faithful_kind = oracle.tag in ("dsep",)
    return MinimalImap(Dag.from_parent_masks(g.p, pa), tau, oracle.tag,
                       approximate=m.approximate or not faithful_kind)

"""Quotients of the permutohedron edge graph and Edge SP.

Vertices of the permutohedron are permutations of 1..p and edges are
adjacent transpositions.  The edge swapping positions t and t+1 of ``pi`` is
labelled by the statement ``pi_t _||_ pi_{t+1} | {pi_1, ..., pi_{t-1}}``.

* the DAG associahedron contracts edges whose label is in a CI set,
* the even permutohedron contracts every swap of the first two positions,
* the even associahedron contracts both.

Graphs are built explicitly (guarded by size) as :class:`QuotientPolytopeGraph`.
Edge SP itself (:class:`EdgeWalker`) walks permutations lazily, so it also
runs where building the whole graph would be too large.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Sequence

from .ci import CiOracle
from .errors import GuardError
from .formats import format_perm
from .graph import Dag, Pdag, bit
from .imap import ParentCache, Permutation, check_perm, imap_parent_masks


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _swap(perm: Permutation, t: int) -> Permutation:
    q = list(perm)
    q[t], q[t + 1] = q[t + 1], q[t]
    return tuple(q)


def _prefix_mask(perm: Sequence[int], t: int) -> int:
    m = 0
    for v in perm[:t]:
        m |= bit(v)
    return m


@dataclass
class QuotientPolytopeGraph:
    """Vertex classes of permutations, their labels and the class adjacency."""

    kind: str
    p: int
    classes: list[frozenset]
    labels: list[tuple]
    adjacency: list[frozenset]
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for k, members in enumerate(self.classes):
            for perm in members:
                self._index[perm] = k

    @property
    def n_vertices(self) -> int:
        return len(self.classes)

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a, nb in enumerate(self.adjacency) for b in nb if a < b)

    def class_of(self, perm: Iterable[int]) -> int:
        return self._index[tuple(perm)]

    def label(self, k: int):
        return self.labels[k][0] if self.labels[k] else None

    def to_json(self) -> str:
        vertices = []
        for k, members in enumerate(self.classes):
            vertices.append({
                "id": k,
                "members": sorted(format_perm(m) for m in members),
                "labels": [_label_json(lab) for lab in self.labels[k]],
            })
        doc = {"schema_version": 1, "kind": self.kind, "p": self.p,
               "vertices": vertices, "edges": [list(e) for e in self.edges()]}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def to_dot(self) -> str:
        lines = [f"graph {self.kind.replace('-', '_')} {{"]
        for k, members in enumerate(self.classes):
            name = ",".join(sorted(format_perm(m) for m in members))
            lines.append(f'  v{k} [label="{name}"];')
        for a, b in self.edges():
            lines.append(f"  v{a} -- v{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _label_json(label) -> dict:
    if isinstance(label, Dag):
        return {"directed": [list(a) for a in label.sorted_arrows()], "undirected": []}
    if isinstance(label, Pdag):
        return {"directed": [list(a) for a in sorted(label.directed)],
                "undirected": [list(a) for a in sorted(label.undirected)]}
    return {"perms": sorted(format_perm(m) for m in label)}


def _quotient(p: int, contract, label_of, kind: str, max_nodes: int, force: bool,
              warn_multi: bool = False) -> QuotientPolytopeGraph:
    if p > max_nodes and not force:
        raise GuardError(f"enumerating {p}! permutations refused (limit p <= {max_nodes})")
    perms = list(permutations(range(1, p + 1)))
    index = {perm: k for k, perm in enumerate(perms)}
    uf = _UnionFind(len(perms))
    for k, perm in enumerate(perms):
        for t in range(p - 1):
            if contract(perm, t):
                uf.union(k, index[_swap(perm, t)])
    roots: dict[int, int] = {}
    members: list[list] = []
    for k, perm in enumerate(perms):
        r = uf.find(k)
        if r not in roots:
            roots[r] = len(members)
            members.append([])
        members[roots[r]].append(perm)
    cls_of = [roots[uf.find(k)] for k in range(len(perms))]
    adjacency = [set() for _ in members]
    for k, perm in enumerate(perms):
        for t in range(p - 1):
            other = cls_of[index[_swap(perm, t)]]
            if other != cls_of[k]:
                adjacency[cls_of[k]].add(other)
    labels = []
    for group in members:
        seen = []
        for perm in group:
            lab = label_of(perm)
            if lab is not None and lab not in seen:
                seen.append(lab)
        labels.append(tuple(seen))
        if warn_multi and len(seen) > 1:
            warnings.warn("CI set is not a graphoid: a vertex class carries several "
                          "distinct minimal I-MAPs", stacklevel=3)
            warn_multi = False
    return QuotientPolytopeGraph(kind, p, [frozenset(g) for g in members], labels,
                                 [frozenset(a) for a in adjacency])


def dag_associahedron_graph(c: CiOracle, p: int | None = None, *, max_nodes: int = 7,
                            force: bool = False) -> QuotientPolytopeGraph:
    """Contract every permutohedron edge whose CI label holds in ``c``.

    Each class is labelled by the distinct minimal I-MAPs of its members; a
    warning is emitted when some class has more than one.
    """
    p = c.p if p is None else p

    def contract(perm, t):
        return c.indep_mask(perm[t], perm[t + 1], _prefix_mask(perm, t))

    def label(perm):
        return Dag.from_parent_masks(p, imap_parent_masks(perm, c))

    return _quotient(p, contract, label, "assoc", max_nodes, force, warn_multi=True)


def even_permutohedron_graph(p: int, *, max_nodes: int = 8, force: bool = False) -> QuotientPolytopeGraph:
    """Contract the swaps of the first two positions (classes of size two)."""
    if p < 2:
        raise ValueError("the even permutohedron needs p >= 2")
    return _quotient(p, lambda perm, t: t == 0, lambda perm: None, "even", max_nodes, force)


def _merge_orientations(p: int, dags) -> Pdag:
    """One partially directed graph for a class: arrows seen in both
    orientations across the members become undirected."""
    arrows = set().union(*(g.arrows for g in dags))
    undirected = sorted({(min(a), max(a)) for a in arrows if (a[1], a[0]) in arrows})
    directed = [a for a in arrows if (a[1], a[0]) not in arrows]
    return Pdag(p, directed, undirected)


def even_associahedron_graph(c: CiOracle, p: int | None = None, *, max_nodes: int = 7,
                             force: bool = False) -> QuotientPolytopeGraph:
    """Contract CI-labelled edges and first-two swaps.

    Inside a class the members' minimal I-MAPs differ only by reversed
    trivially covered arrows, so each class is labelled by one partially
    directed graph with those arrows left undirected. A warning is emitted
    when members disagree on the skeleton (the CI set is then no graphoid).
    """
    p = c.p if p is None else p

    def contract(perm, t):
        return t == 0 or c.indep_mask(perm[t], perm[t + 1], _prefix_mask(perm, t))

    def label(perm):
        return Dag.from_parent_masks(p, imap_parent_masks(perm, c))

    g = _quotient(p, contract, label, "even-assoc", max_nodes, force)
    if any(len({d.skeleton() for d in dags}) > 1 for dags in g.labels):
        warnings.warn("CI set is not a graphoid: a vertex class mixes minimal I-MAPs "
                      "with different skeletons", stacklevel=2)
    g.labels = [(_merge_orientations(p, dags),) for dags in g.labels]
    return g


def even_associahedron_vertices(c: CiOracle, p: int | None = None, **kw) -> list[Pdag]:
    """The partially directed labels of the even associahedron's vertices."""
    g = even_associahedron_graph(c, p, **kw)
    return [g.label(k) for k in range(g.n_vertices)]


def even_perm_coordinates(cls) -> tuple[Fraction, ...]:
    """Coordinates of an even-permutohedron class: node v gets the average of
    its (1-based) positions in the two member permutations."""
    if isinstance(cls, (tuple, list)) and cls and isinstance(cls[0], int):
        members = [tuple(cls)]
    else:
        members = [tuple(m) for m in cls]
    perm = members[0]
    other = (perm[1], perm[0]) + perm[2:]
    if any(m not in (perm, other) for m in members):
        raise ValueError("not an even-permutohedron class")
    p = len(perm)
    pos = {v: k + 1 for k, v in enumerate(perm)}
    pos2 = {v: k + 1 for k, v in enumerate(other)}
    return tuple(Fraction(pos[v] + pos2[v], 2) for v in range(1, p + 1))


# Edge SP ------------------------------------------------------------------------

class EdgeWalker:
    """Edge SP over permutations.

    Two permutations are neighbours when they differ by an adjacent
    transposition, which covers both the contracted edges (inside a vertex
    class) and the edges between classes.  From the current root the walk
    searches depth first for a permutation with strictly fewer arrows,
    passing only through permutations with at most the root's count (or any
    count when ``weakly_decreasing`` is False); it restarts from each sparser
    permutation found and stops when none is reachable.
    """

    def __init__(self, oracle: CiOracle, weakly_decreasing: bool = True):
        self.oracle = oracle
        self.weakly_decreasing = weakly_decreasing
        self._parents = ParentCache(oracle)

    def count(self, perm: Permutation) -> int:
        return self._parents.count(perm)

    def _better(self, root: Permutation) -> Permutation | None:
        bound = self.count(root)
        p = len(root)
        seen = {root}
        stack = [root]
        while stack:
            perm = stack.pop()
            nxt = []
            for t in range(p - 1):
                q = _swap(perm, t)
                if q in seen:
                    continue
                c = self.count(q)
                if c < bound:
                    return q
                if c > bound and self.weakly_decreasing:
                    continue
                seen.add(q)
                nxt.append(q)
            stack.extend(reversed(nxt))
        return None

    def search(self, start: Sequence[int]) -> tuple[Dag, list[tuple[Permutation, int]]]:
        root = check_perm(start, self.oracle.p)
        walk = [(root, self.count(root))]
        while True:
            better = self._better(root)
            if better is None:
                break
            root = better
            walk.append((root, self.count(root)))
        return Dag.from_parent_masks(len(root), self._parents.masks(root)), walk


def edge_sp(c_or_oracle: CiOracle, start: Sequence[int], p: int | None = None,
            weakly_decreasing: bool = True, max_nodes: int = 10,
            force: bool = False) -> tuple[Dag, list[tuple[Permutation, int]]]:
    """Edge SP from ``start``; returns the final DAG and the walk of roots
    ``(permutation, arrow count)``."""
    oracle = c_or_oracle
    p = oracle.p if p is None else p
    if p > max_nodes and not force:
        raise GuardError(f"edge SP refused for p = {p} > {max_nodes}")
    return EdgeWalker(oracle, weakly_decreasing).search(start)

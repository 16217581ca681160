"""Directed acyclic graphs, partially directed graphs and the graph operations
the search algorithms rely on.

Nodes are the integers ``1..p``.  Internally every node set is an ``int``
bitmask in which node ``i`` occupies bit ``i`` (bit 0 is unused), so node
labels and bit positions coincide and no index translation is ever needed.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Iterator


class GraphError(ValueError):
    """Raised for malformed graphs: bad node labels, cycles, size mismatch."""


def bit(i: int) -> int:
    return 1 << i


def mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def iter_nodes(mask: int) -> Iterator[int]:
    """Yield the nodes of a bitmask in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def nodes_of(mask: int) -> tuple[int, ...]:
    return tuple(iter_nodes(mask))


def full_mask(p: int) -> int:
    return (1 << (p + 1)) - 2


def _check_node(p: int, v: int) -> None:
    if not isinstance(v, int) or isinstance(v, bool) or v < 1 or v > p:
        raise GraphError(f"node {v!r} outside 1..{p}")


def _topological_order(p: int, pa: tuple[int, ...]) -> tuple[int, ...] | None:
    """Kahn's algorithm, always releasing the smallest available node."""
    remaining = full_mask(p)
    order = []
    while remaining:
        ready = 0
        for v in iter_nodes(remaining):
            if not pa[v] & remaining:
                ready = v
                break
        if not ready:
            return None
        order.append(ready)
        remaining &= ~bit(ready)
    return tuple(order)


class Dag:
    """An immutable DAG on nodes ``1..p`` stored as parent bitmasks.

    Equality and hashing use the parent masks, which is the same as comparing
    sorted arrow lists.
    """

    __slots__ = ("p", "_pa", "_ch", "_hash")

    def __init__(self, p: int, arrows: Iterable[tuple[int, int]] = ()):
        if p < 0:
            raise GraphError("node count must be non-negative")
        pa = [0] * (p + 1)
        for arrow in arrows:
            i, j = arrow
            _check_node(p, i)
            _check_node(p, j)
            if i == j:
                raise GraphError(f"self loop at node {i}")
            if pa[i] & bit(j):
                raise GraphError(f"both {i}->{j} and {j}->{i} present")
            pa[j] |= bit(i)
        self._init(p, tuple(pa))
        if _topological_order(p, self._pa) is None:
            raise GraphError("graph contains a directed cycle")

    def _init(self, p: int, pa: tuple[int, ...]) -> None:
        self.p = p
        self._pa = pa
        self._ch = None
        self._hash = hash((p, pa))

    @classmethod
    def from_parent_masks(cls, p: int, pa: Iterable[int], check: bool = False) -> "Dag":
        """Build from parent bitmasks indexed by node (index 0 ignored)."""
        g = cls.__new__(cls)
        pa = tuple(pa)
        if len(pa) != p + 1:
            raise GraphError("parent mask list must have length p + 1")
        g._init(p, (0,) + pa[1:])
        if check:
            fm = full_mask(p)
            for v in range(1, p + 1):
                if pa[v] & ~fm or pa[v] & bit(v):
                    raise GraphError(f"invalid parent mask for node {v}")
            if _topological_order(p, g._pa) is None:
                raise GraphError("graph contains a directed cycle")
        return g

    @classmethod
    def empty(cls, p: int) -> "Dag":
        return cls.from_parent_masks(p, [0] * (p + 1))

    @classmethod
    def complete(cls, order: Iterable[int]) -> "Dag":
        order = tuple(order)
        pa = [0] * (len(order) + 1)
        prefix = 0
        for v in order:
            pa[v] = prefix
            prefix |= bit(v)
        return cls.from_parent_masks(len(order), pa)

    # basic accessors ---------------------------------------------------
    @property
    def parent_masks(self) -> tuple[int, ...]:
        return self._pa

    @property
    def key(self) -> tuple[int, ...]:
        """Canonical hashable identity (equivalent to the sorted arrow list)."""
        return self._pa

    def pa_mask(self, v: int) -> int:
        return self._pa[v]

    def ch_mask(self, v: int) -> int:
        if self._ch is None:
            ch = [0] * (self.p + 1)
            for j in range(1, self.p + 1):
                for i in iter_nodes(self._pa[j]):
                    ch[i] |= bit(j)
            self._ch = tuple(ch)
        return self._ch[v]

    def parents(self, v: int) -> frozenset[int]:
        return frozenset(iter_nodes(self._pa[v]))

    def children(self, v: int) -> frozenset[int]:
        return frozenset(iter_nodes(self.ch_mask(v)))

    def has_arrow(self, i: int, j: int) -> bool:
        return bool(self._pa[j] >> i & 1)

    def adjacent(self, i: int, j: int) -> bool:
        return self.has_arrow(i, j) or self.has_arrow(j, i)

    @property
    def arrows(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.sorted_arrows())

    def sorted_arrows(self) -> list[tuple[int, int]]:
        return sorted((i, j) for j in range(1, self.p + 1) for i in iter_nodes(self._pa[j]))

    @property
    def n_arrows(self) -> int:
        return sum(m.bit_count() for m in self._pa)

    def __len__(self) -> int:
        return self.n_arrows

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(a), max(a)) for a in self.sorted_arrows())

    def neighbor_mask(self, v: int) -> int:
        return self._pa[v] | self.ch_mask(v)

    def ancestors_mask(self, seeds: int) -> int:
        """Ancestors of the node set ``seeds`` including the seeds."""
        result = seeds
        frontier = seeds
        while frontier:
            new = 0
            for v in iter_nodes(frontier):
                new |= self._pa[v]
            frontier = new & ~result
            result |= frontier
        return result

    def descendants_mask(self, seeds: int) -> int:
        """Descendants of ``seeds`` including the seeds."""
        result = seeds
        frontier = seeds
        while frontier:
            new = 0
            for v in iter_nodes(frontier):
                new |= self.ch_mask(v)
            frontier = new & ~result
            result |= frontier
        return result

    def descendants(self, v: int) -> frozenset[int]:
        """Strict descendants of ``v``."""
        return frozenset(iter_nodes(self.descendants_mask(bit(v)) & ~bit(v)))

    def ancestors(self, v: int) -> frozenset[int]:
        """Strict ancestors of ``v``."""
        return frozenset(iter_nodes(self.ancestors_mask(bit(v)) & ~bit(v)))

    def topological_order(self) -> tuple[int, ...]:
        order = _topological_order(self.p, self._pa)
        assert order is not None
        return order

    def is_linear_extension(self, perm: Iterable[int]) -> bool:
        seen = 0
        perm = tuple(perm)
        if sorted(perm) != list(range(1, self.p + 1)):
            return False
        for v in perm:
            if self._pa[v] & ~seen:
                return False
            seen |= bit(v)
        return True

    def sinks(self) -> tuple[int, ...]:
        return tuple(v for v in range(1, self.p + 1) if not self.ch_mask(v))

    def immoralities(self) -> frozenset[tuple[int, int, int]]:
        """Triples ``(a, c, b)`` with ``a < b``, ``a -> c <- b`` and a, b non-adjacent."""
        out = set()
        for c in range(1, self.p + 1):
            for a, b in combinations(iter_nodes(self._pa[c]), 2):
                if not self.adjacent(a, b):
                    out.add((a, c, b))
        return frozenset(out)

    # modifications (all return new graphs) ------------------------------
    def _replace(self, pa: list[int], check: bool) -> "Dag":
        return Dag.from_parent_masks(self.p, pa, check=check)

    def with_arrow(self, i: int, j: int) -> "Dag":
        _check_node(self.p, i)
        _check_node(self.p, j)
        if self.adjacent(i, j):
            raise GraphError(f"{i} and {j} already adjacent")
        pa = list(self._pa)
        pa[j] |= bit(i)
        return self._replace(pa, check=True)

    def without_arrow(self, i: int, j: int) -> "Dag":
        if not self.has_arrow(i, j):
            raise GraphError(f"arrow {i}->{j} not present")
        pa = list(self._pa)
        pa[j] &= ~bit(i)
        return self._replace(pa, check=False)

    def with_arrow_reversed(self, i: int, j: int) -> "Dag":
        if not self.has_arrow(i, j):
            raise GraphError(f"arrow {i}->{j} not present")
        pa = list(self._pa)
        pa[j] &= ~bit(i)
        pa[i] |= bit(j)
        return self._replace(pa, check=True)

    def induced_parent_masks(self, keep: int) -> tuple[int, ...]:
        return tuple(m & keep if (keep >> v) & 1 else 0 for v, m in enumerate(self._pa))

    # dunder --------------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dag) and self.p == other.p and self._pa == other._pa

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        arrows = ", ".join(f"{i}->{j}" for i, j in self.sorted_arrows())
        return f"Dag(p={self.p}, [{arrows}])"


class Pdag:
    """A partially directed graph: directed arrows plus undirected edges.

    Used for essential graphs (CPDAGs) and for the labels of the even
    associahedron.  Undirected edges are stored as ``(min, max)`` pairs.
    """

    __slots__ = ("p", "directed", "undirected")

    def __init__(self, p: int, directed: Iterable[tuple[int, int]] = (),
                 undirected: Iterable[tuple[int, int]] = ()):
        directed = frozenset((int(i), int(j)) for i, j in directed)
        undirected = frozenset((min(i, j), max(i, j)) for i, j in undirected)
        seen = set()
        for i, j in list(directed) + list(undirected):
            _check_node(p, i)
            _check_node(p, j)
            if i == j:
                raise GraphError(f"self loop at node {i}")
            pair = (min(i, j), max(i, j))
            if pair in seen:
                raise GraphError(f"pair {pair} listed more than once")
            seen.add(pair)
        self.p = p
        self.directed = directed
        self.undirected = undirected

    @classmethod
    def from_dag(cls, g: Dag) -> "Pdag":
        return cls(g.p, g.arrows, ())

    def status(self, i: int, j: int) -> str:
        """Edge status of the unordered pair: 'none', 'undirected', '->' or '<-'."""
        a, b = min(i, j), max(i, j)
        if (a, b) in self.undirected:
            return "undirected"
        if (a, b) in self.directed:
            return "->"
        if (b, a) in self.directed:
            return "<-"
        return "none"

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(a), max(a)) for a in self.directed) | self.undirected

    def n_edges(self) -> int:
        return len(self.directed) + len(self.undirected)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Pdag) and self.p == other.p
                and self.directed == other.directed and self.undirected == other.undirected)

    def __hash__(self) -> int:
        return hash((self.p, self.directed, self.undirected))

    def __repr__(self) -> str:
        parts = [f"{i}->{j}" for i, j in sorted(self.directed)]
        parts += [f"{i}--{j}" for i, j in sorted(self.undirected)]
        return f"Pdag(p={self.p}, [{', '.join(parts)}])"


Cpdag = Pdag


# d-separation ---------------------------------------------------------------

def d_separated_mask(g: Dag, i: int, j: int, s: int) -> bool:
    """d-separation of i and j given the node mask ``s``.

    Reachability in the moral graph of the ancestral set of {i, j} ∪ s after
    removing s.
    """
    pa = g.parent_masks
    anc = g.ancestors_mask(bit(i) | bit(j) | s)
    adj = [0] * (g.p + 1)
    for v in iter_nodes(anc):
        pv = pa[v]
        adj[v] |= pv
        for u in iter_nodes(pv):
            adj[u] |= bit(v) | (pv & ~bit(u))
    allowed = anc & ~s
    target = bit(j)
    seen = bit(i)
    frontier = bit(i)
    while frontier:
        nxt = 0
        for v in iter_nodes(frontier):
            nxt |= adj[v]
        nxt &= allowed & ~seen
        if nxt & target:
            return False
        seen |= nxt
        frontier = nxt
    return True


def d_separated(g: Dag, i: int, j: int, s: Iterable[int] = ()) -> bool:
    """True iff i and j are d-separated given the node set s in g."""
    _check_node(g.p, i)
    _check_node(g.p, j)
    s = tuple(s)
    for v in s:
        _check_node(g.p, v)
    if i == j:
        raise GraphError("d-separation query needs two distinct nodes")
    if i in s or j in s:
        raise GraphError("conditioning set must exclude the queried nodes")
    return d_separated_mask(g, i, j, mask_of(s))


# covered arrows and Markov equivalence --------------------------------------

def is_covered(g: Dag, i: int, j: int) -> bool:
    return g.has_arrow(i, j) and g.pa_mask(i) == g.pa_mask(j) & ~bit(i)


def covered_arrows(g: Dag) -> frozenset[tuple[int, int]]:
    """All arrows i->j of g with pa(i) = pa(j) minus i."""
    return frozenset(sorted_covered_arrows(g))


def sorted_covered_arrows(g: Dag) -> list[tuple[int, int]]:
    pa = g.parent_masks
    out = []
    for j in range(1, g.p + 1):
        for i in iter_nodes(pa[j]):
            if pa[i] == pa[j] & ~bit(i):
                out.append((i, j))
    out.sort()
    return out


def reverse_covered(g: Dag, a: tuple[int, int]) -> Dag:
    """Reverse the covered arrow ``a``; raises GraphError when it is not covered."""
    i, j = a
    if not is_covered(g, i, j):
        raise GraphError(f"arrow {i}->{j} is not a covered arrow")
    pa = list(g.parent_masks)
    pa[j] &= ~bit(i)
    pa[i] |= bit(j)
    return Dag.from_parent_masks(g.p, pa)


def markov_equivalent(g: Dag, h: Dag) -> bool:
    if g.p != h.p:
        raise GraphError("graphs have different node counts")
    return g.skeleton() == h.skeleton() and g.immoralities() == h.immoralities()


# Meek closure and essential graphs -------------------------------------------

def meek_closure(p: int, directed: Iterable[tuple[int, int]],
                 undirected: Iterable[tuple[int, int]]) -> Pdag:
    """Apply Meek's rules R1-R4 to a fixpoint, scanning edges in sorted order."""
    d = set(directed)
    u = {(min(a, b), max(a, b)) for a, b in undirected}

    def adj(a: int, b: int) -> bool:
        return (a, b) in d or (b, a) in d or (min(a, b), max(a, b)) in u

    def und(a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in u

    nodes = range(1, p + 1)
    changed = True
    while changed:
        changed = False
        for a, b in sorted(u):
            for x, y in ((a, b), (b, a)):
                if _meek_orients(x, y, nodes, d, adj, und):
                    u.discard((a, b))
                    d.add((x, y))
                    changed = True
                    break
    return Pdag(p, d, u)


def _meek_orients(x, y, nodes, d, adj, und) -> bool:
    """Whether one of R1-R4 orients the undirected edge x -- y as x -> y."""
    # R1: z -> x -- y with z, y non-adjacent
    for z in nodes:
        if (z, x) in d and z != y and not adj(z, y):
            return True
    # R2: x -> z -> y
    for z in nodes:
        if (x, z) in d and (z, y) in d:
            return True
    # R3: x -- z1 -> y, x -- z2 -> y, z1 and z2 non-adjacent
    mids = [z for z in nodes if z not in (x, y) and und(x, z) and (z, y) in d]
    for z1, z2 in combinations(mids, 2):
        if not adj(z1, z2):
            return True
    # R4: x -- z, z -> w -> y, x adjacent to w, z and y non-adjacent
    for z in nodes:
        if z in (x, y) or not und(x, z) or adj(z, y):
            continue
        for w in nodes:
            if w in (x, y, z):
                continue
            if (z, w) in d and (w, y) in d and adj(x, w):
                return True
    return False


def essential_graph(g: Dag) -> Pdag:
    """The CPDAG of g's Markov equivalence class."""
    immoral = set()
    for a, c, b in g.immoralities():
        immoral.add((a, c))
        immoral.add((b, c))
    undirected = [a for a in g.sorted_arrows() if a not in immoral]
    return meek_closure(g.p, immoral, undirected)


def shd(a: Pdag, b: Pdag) -> int:
    """Number of node pairs whose edge status differs between a and b."""
    if isinstance(a, Dag):
        a = Pdag.from_dag(a)
    if isinstance(b, Dag):
        b = Pdag.from_dag(b)
    if a.p != b.p:
        raise GraphError("graphs have different node counts")
    pairs = a.skeleton() | b.skeleton()
    return sum(1 for i, j in pairs if a.status(i, j) != b.status(i, j))


def pdag_to_dag(g: Pdag) -> Dag | None:
    """A consistent DAG extension of a partially directed graph (Dor and Tarsi),
    or None when no extension exists."""
    p = g.p
    d = set(g.directed)
    u = set(g.undirected)
    remaining = set(range(1, p + 1))
    arrows = set()

    def nbrs(x):
        return {y for y in remaining if (min(x, y), max(x, y)) in u}

    def adjacent_in(x):
        return ({y for y in remaining if (x, y) in d or (y, x) in d}) | nbrs(x)

    while remaining:
        chosen = None
        for x in sorted(remaining):
            if any((x, y) in d for y in remaining):
                continue
            nx = nbrs(x)
            ax = adjacent_in(x)
            if all(ax - {y} <= adjacent_in(y) | {y} for y in nx):
                chosen = x
                break
        if chosen is None:
            return None
        for y in remaining:
            if (y, chosen) in d:
                arrows.add((y, chosen))
            pair = (min(y, chosen), max(y, chosen))
            if pair in u:
                arrows.add((y, chosen))
        remaining.discard(chosen)
    return Dag(p, arrows)


def linear_extensions(g: Dag) -> Iterator[tuple[int, ...]]:
    """All topological orders of g, in lexicographic order."""
    p = g.p
    pa = g.parent_masks
    prefix: list[int] = []

    def rec(placed: int):
        if len(prefix) == p:
            yield tuple(prefix)
            return
        for v in range(1, p + 1):
            if not placed >> v & 1 and not pa[v] & ~placed:
                prefix.append(v)
                yield from rec(placed | bit(v))
                prefix.pop()

    yield from rec(0)


def markov_equivalence_class(g: Dag) -> set[Dag]:
    """All members of g's class, enumerated by covered-arrow reversals."""
    seen = {g}
    stack = [g]
    while stack:
        h = stack.pop()
        for a in sorted_covered_arrows(h):
            nxt = reverse_covered(h, a)
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen

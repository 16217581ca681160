"""Chickering's edge operation: turning an independence map into its target by
arrow additions and covered-arrow reversals.

``g`` is an independence map of ``h`` (written g <= h) when every CI statement
encoded by h holds in g.  While g != h, :func:`apply_edge_operation` returns a
graph one step closer to h that is still an independence map of it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvariantError
from .graph import Dag, GraphError, bit, d_separated_mask, full_mask, is_covered, iter_nodes


@dataclass(frozen=True)
class ChickeringStep:
    """One operation: ``kind`` is "add" or "reverse"; ``rule`` names the case
    (4: add into a sink, 6: covered reversal, 7 and 8: additions making an
    arrow covered)."""

    kind: str
    arrow: tuple[int, int]
    rule: int


def is_independence_map(g: Dag, h: Dag) -> bool:
    """True iff every CI statement of h holds in g.

    Checks the local Markov statements of h (each node independent of its
    non-descendants given its parents) as d-separations in g.
    """
    if g.p != h.p:
        raise GraphError("graphs have different node counts")
    fm = full_mask(h.p)
    for v in range(1, h.p + 1):
        pa = h.pa_mask(v)
        rest = fm & ~h.descendants_mask(bit(v)) & ~pa
        for u in iter_nodes(rest):
            if not d_separated_mask(g, v, u, pa):
                return False
    return True


def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _prune_common_sinks(g: Dag, h: Dag) -> int:
    """Remove sinks shared by g and h with equal parent sets, repeatedly.
    Returns the mask of nodes that remain."""
    keep = full_mask(g.p)
    changed = True
    while changed:
        changed = False
        for y in iter_nodes(keep):
            if (not g.ch_mask(y) & keep and not h.ch_mask(y) & keep
                    and g.pa_mask(y) & keep == h.pa_mask(y) & keep):
                keep &= ~bit(y)
                changed = True
    return keep


def _desc_within(g: Dag, v: int, keep: int) -> int:
    out = 0
    frontier = bit(v)
    while frontier:
        nxt = 0
        for u in iter_nodes(frontier):
            nxt |= g.ch_mask(u) & keep
        frontier = nxt & ~out
        out |= frontier
    return out


def _anc_within(g: Dag, v: int, keep: int) -> int:
    out = 0
    frontier = bit(v)
    while frontier:
        nxt = 0
        for u in iter_nodes(frontier):
            nxt |= g.pa_mask(u) & keep
        frontier = nxt & ~out
        out |= frontier
    return out


def apply_edge_operation(g: Dag, h: Dag, check: bool = False) -> tuple[Dag, ChickeringStep]:
    """One arrow addition or covered reversal taking g towards h."""
    if g.p != h.p:
        raise GraphError("graphs have different node counts")
    if g == h:
        raise GraphError("graphs are already equal")
    if check and not is_independence_map(g, h):
        raise GraphError("g is not an independence map of h")
    keep = _prune_common_sinks(g, h)
    if not keep:
        raise InvariantError("no nodes left after pruning common sinks")
    sinks_h = [y for y in iter_nodes(keep) if not h.ch_mask(y) & keep]
    y = sinks_h[0]
    if not g.ch_mask(y) & keep:
        missing = h.pa_mask(y) & keep & ~g.pa_mask(y)
        if not missing:
            raise InvariantError(f"sink {y} has no parent in h missing from g")
        x = _lowest(missing)
        return g.with_arrow(x, y), ChickeringStep("add", (x, y), 4)
    de = _desc_within(g, y, keep)
    maximal = [d for d in iter_nodes(de) if not _anc_within(h, d, keep) & de]
    if not maximal:
        raise InvariantError("no maximal descendant found")
    d = maximal[0]
    cands = [z for z in iter_nodes(g.ch_mask(y) & keep)
             if z == d or _desc_within(g, z, keep) >> d & 1]
    cand_mask = 0
    for z in cands:
        cand_mask |= bit(z)
    tops = [z for z in cands if not _anc_within(g, z, keep) & cand_mask]
    z = tops[0]
    if is_covered(g, y, z):
        return g.with_arrow_reversed(y, z), ChickeringStep("reverse", (y, z), 6)
    only_y = g.pa_mask(y) & ~g.pa_mask(z)
    if only_y:
        x = _lowest(only_y)
        return g.with_arrow(x, z), ChickeringStep("add", (x, z), 7)
    only_z = g.pa_mask(z) & ~g.pa_mask(y) & ~bit(y)
    if not only_z:
        raise InvariantError(f"arrow {y}->{z} is covered but was not reversed")
    x = _lowest(only_z)
    return g.with_arrow(x, y), ChickeringStep("add", (x, y), 8)


def sequence_bound(g: Dag, h: Dag) -> tuple[int, int]:
    """``(r, m)``: arrows of h reversed in g, and arrows of h absent from g."""
    r = m = 0
    for i, j in h.sorted_arrows():
        if g.has_arrow(j, i):
            r += 1
        elif not g.has_arrow(i, j):
            m += 1
    return r, m


def chickering_sequence(g: Dag, h: Dag, check: bool = True) -> list[tuple[Dag, ChickeringStep]]:
    """Apply edge operations until g equals h; at most r + 2m steps."""
    if check and not is_independence_map(g, h):
        raise GraphError("g is not an independence map of h")
    r, m = sequence_bound(g, h)
    limit = r + 2 * m
    out = []
    cur = g
    while cur != h:
        if len(out) >= limit:
            raise InvariantError(f"sequence exceeded the bound r + 2m = {limit}")
        cur, step = apply_edge_operation(cur, h)
        out.append((cur, step))
    return out

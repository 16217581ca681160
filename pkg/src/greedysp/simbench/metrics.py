"""Recovery metrics between a true DAG and an estimated essential graph."""

from __future__ import annotations

from dataclasses import dataclass

from ..graph import Dag, Pdag, essential_graph, shd


@dataclass(frozen=True)
class Recovery:
    shd: int
    exact: bool
    tp: int
    fp: int
    fn: int


def skeleton_confusion(truth: Pdag | Dag, est: Pdag | Dag) -> tuple[int, int, int]:
    a = truth.skeleton()
    b = est.skeleton()
    return len(a & b), len(b - a), len(a - b)


def recovery(truth: Dag, est: Pdag | Dag) -> Recovery:
    """SHD to the true essential graph, exact-class flag and skeleton counts."""
    target = essential_graph(truth)
    if isinstance(est, Dag):
        est = essential_graph(est)
    tp, fp, fn = skeleton_confusion(target, est)
    d = shd(target, est)
    return Recovery(d, d == 0, tp, fp, fn)


def format_pdag_compact(g: Pdag) -> str:
    parts = [f"{i}>{j}" for i, j in sorted(g.directed)]
    parts += [f"{i}-{j}" for i, j in sorted(g.undirected)]
    return " ".join(parts)


def parse_pdag_compact(p: int, text: str) -> Pdag:
    directed, undirected = [], []
    for tok in text.split():
        if ">" in tok:
            a, b = tok.split(">")
            directed.append((int(a), int(b)))
        else:
            a, b = tok.split("-")
            undirected.append((int(a), int(b)))
    return Pdag(p, directed, undirected)

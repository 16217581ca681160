"""Plain-text file formats: DAG / CPDAG edge lists, CI statement lists,
matrices as CSV and permutation strings.

DAG files hold one arrow per line (``i -> j``); CPDAG files may also hold
undirected edges (``i -- j``).  Lines starting with ``#`` are comments, except
that a ``# nodes: P`` comment records the node count so isolated nodes survive
a round trip.  CI files hold one statement per line,
``i _||_ j | s1 s2 ...`` with an empty conditioning set written ``i _||_ j |``.
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import Dag, GraphError, Pdag


class FormatError(ValueError):
    """Raised when an input file cannot be parsed."""


_NODES_RE = re.compile(r"^#\s*nodes\s*[:=]\s*(\d+)\s*$")
_EDGE_RE = re.compile(r"^(\d+)\s*(->|--|<-)\s*(\d+)$")
_CI_RE = re.compile(r"^(\d+)\s+_\|\|_\s+(\d+)\s*\|\s*([\d\s]*)$")


def _read_text(source: str | Path) -> str:
    if isinstance(source, Path) or ("\n" not in str(source) and Path(str(source)).is_file()):
        return Path(source).read_text()
    return str(source)


def _edge_lines(text: str) -> tuple[int | None, list[tuple[int, str, int, int]]]:
    declared = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _NODES_RE.match(line)
            if m:
                declared = int(m.group(1))
            continue
        line = line.split("#", 1)[0].strip()
        m = _EDGE_RE.match(line)
        if not m:
            raise FormatError(f"line {lineno}: cannot parse edge {raw!r}")
        a, op, b = int(m.group(1)), m.group(2), int(m.group(3))
        if op == "<-":
            a, b, op = b, a, "->"
        edges.append((a, op, b, lineno))
    return declared, edges


def _node_count(declared, edges, p):
    top = max((max(a, b) for a, _, b, _ in edges), default=0)
    if p is None:
        p = declared if declared is not None else top
    if top > p:
        raise FormatError(f"node {top} exceeds node count {p}")
    if min((min(a, b) for a, _, b, _ in edges), default=1) < 1:
        raise FormatError("nodes are numbered from 1")
    return p


def parse_dag(source: str | Path, p: int | None = None) -> Dag:
    declared, edges = _edge_lines(_read_text(source))
    p = _node_count(declared, edges, p)
    arrows = []
    for a, op, b, lineno in edges:
        if op != "->":
            raise FormatError(f"line {lineno}: undirected edge in a DAG file")
        arrows.append((a, b))
    try:
        return Dag(p, arrows)
    except GraphError as exc:
        raise FormatError(str(exc)) from exc


def parse_pdag(source: str | Path, p: int | None = None) -> Pdag:
    declared, edges = _edge_lines(_read_text(source))
    p = _node_count(declared, edges, p)
    try:
        return Pdag(p, [(a, b) for a, op, b, _ in edges if op == "->"],
                    [(a, b) for a, op, b, _ in edges if op == "--"])
    except GraphError as exc:
        raise FormatError(str(exc)) from exc


def format_dag(g: Dag) -> str:
    lines = [f"# nodes: {g.p}"] + [f"{i} -> {j}" for i, j in g.sorted_arrows()]
    return "\n".join(lines) + "\n"


def format_pdag(g: Pdag) -> str:
    lines = [f"# nodes: {g.p}"]
    lines += [f"{i} -> {j}" for i, j in sorted(g.directed)]
    lines += [f"{i} -- {j}" for i, j in sorted(g.undirected)]
    return "\n".join(lines) + "\n"


def parse_ci_statements(source: str | Path) -> list[tuple[int, int, frozenset[int]]]:
    """Parse a CI file into raw ``(i, j, S)`` triples (not yet validated
    against a node count)."""
    out = []
    for lineno, raw in enumerate(_read_text(source).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _CI_RE.match(line)
        if not m:
            raise FormatError(f"line {lineno}: cannot parse CI statement {raw!r}")
        i, j = int(m.group(1)), int(m.group(2))
        s = frozenset(int(t) for t in m.group(3).split())
        if i == j or i in s or j in s or min([i, j, *s]) < 1:
            raise FormatError(f"line {lineno}: malformed CI statement {raw!r}")
        out.append((i, j, s))
    return out


def format_ci_statements(statements: Iterable) -> str:
    lines = []
    for st in statements:
        i, j, s = st if isinstance(st, tuple) else (st.i, st.j, st.s)
        rest = " ".join(str(v) for v in sorted(s))
        lines.append(f"{i} _||_ {j} | {rest}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def read_matrix_csv(source: str | Path) -> np.ndarray:
    """Read a numeric CSV, skipping a header row if its first cell is not numeric."""
    rows = list(csv.reader(io.StringIO(_read_text(source))))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError("empty matrix file")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    try:
        mat = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric matrix entry: {exc}") from exc
    if mat.ndim != 2 or len({len(r) for r in rows}) != 1:
        raise FormatError("ragged matrix rows")
    return mat


def write_matrix_csv(path: str | Path, mat: np.ndarray, header: bool = True) -> None:
    mat = np.asarray(mat, dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow([f"X{k}" for k in range(1, mat.shape[1] + 1)])
    for row in mat:
        writer.writerow([repr(float(x)) for x in row])
    Path(path).write_text(buf.getvalue())


def format_perm(perm: Iterable[int]) -> str:
    """Digit string for p <= 9, comma separated otherwise."""
    perm = tuple(perm)
    if len(perm) <= 9:
        return "".join(str(v) for v in perm)
    return ",".join(str(v) for v in perm)


def parse_perm(text: str, p: int | None = None) -> tuple[int, ...]:
    text = text.strip()
    if "," in text:
        perm = tuple(int(t) for t in text.split(",") if t.strip())
    elif text.isdigit():
        perm = tuple(int(c) for c in text)
    else:
        raise FormatError(f"cannot parse permutation {text!r}")
    n = len(perm) if p is None else p
    if sorted(perm) != list(range(1, n + 1)):
        raise FormatError(f"{text!r} is not a permutation of 1..{n}")
    return perm

"""Greedy sparsest-permutation search.

The core routine is a depth-first search over covered-arrow reversals.  From
a root DAG it looks for a strictly better DAG reachable through a chain of
reversals whose intermediate DAGs are never worse than the root; when one is
found the search restarts from it, and when none is left the root is a local
optimum.  "Better" means fewer arrows, or a higher BIC for the scored
variant.

Moves are generated in a fixed order (lexicographically smallest covered
arrow first) and a covered flip ``i -> j`` in a DAG built from ``perm`` moves
j to just before i in ``perm``, so every run is deterministic given its
start.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

from .ci import CiOracle, GaussianOracle, GaussianSuffStats, NumericalError
from .errors import GuardError
from .formats import format_perm
from .graph import (Dag, bit, d_separated_mask, essential_graph, full_mask, iter_nodes,
                    sorted_covered_arrows)
from .imap import (MinimalImap, ParentCache, Permutation, check_perm, constrained_flip_update,
                   flip_permutation, imap_parent_masks)
from .mindeg import neighbor_min_degree


def dag_hash(g: Dag) -> str:
    """Short stable digest of the sorted arrow list."""
    text = f"{g.p}:" + ";".join(f"{i},{j}" for i, j in g.sorted_arrows())
    return hashlib.sha1(text.encode()).hexdigest()[:12]


@dataclass
class SearchConfig:
    """Search controls.

    ``depth`` bounds the length of reversal chains explored from a root
    (None for unbounded); ``runs`` is the number of restarts.  The first run
    starts from ``start`` ("random", "order", "mindeg" or an explicit
    permutation) and later runs from uniformly random permutations drawn from
    a generator seeded with ``seed``.  ``record_expansions`` adds the covered
    arrows of every expanded DAG to the trace.
    """

    depth: int | None = None
    runs: int = 1
    start: str | Sequence[int] = "random"
    score: str = "sparsity"
    seed: int | None = 0
    time_limit: float | None = None
    record_expansions: bool = False

    def __post_init__(self):
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be at least 1 when bounded")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.score not in ("sparsity", "bic"):
            raise ValueError(f"unknown score {self.score!r}")
        if not isinstance(self.start, str):
            self.start = tuple(int(v) for v in self.start)
        elif self.start not in ("random", "order", "mindeg"):
            raise ValueError(f"unknown start policy {self.start!r}")


@dataclass
class SearchTrace:
    """Event log of a search: run starts, improvements, expansions, run ends."""

    steps: list[dict] = field(default_factory=list)
    visited: int = 0
    termination: str = ""

    def add(self, **event) -> None:
        self.steps.append(event)

    def runs(self) -> list[list[dict]]:
        out: dict[int, list[dict]] = {}
        for st in self.steps:
            out.setdefault(st["run"], []).append(st)
        return [out[k] for k in sorted(out)]

    def to_jsonl(self) -> str:
        lines = [json.dumps(st, sort_keys=True) for st in self.steps]
        lines.append(json.dumps({"event": "summary", "visited": self.visited,
                                 "termination": self.termination}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "SearchTrace":
        tr = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            ev = json.loads(line)
            if ev.get("event") == "summary":
                tr.visited = ev["visited"]
                tr.termination = ev["termination"]
            else:
                tr.steps.append(ev)
        return tr


# moves -----------------------------------------------------------------------

@dataclass(frozen=True)
class _Node:
    perm: Permutation
    dag: Dag
    value: float  # lower is better


class SparsityMoves:
    """Covered flips scored by arrow count.

    ``mode="full"`` rebuilds the minimal I-MAP of the flipped permutation;
    ``mode="constrained"`` updates only arrows into the flipped pair.  Built
    I-MAPs are cached by permutation, so one instance can serve many starts.
    """

    def __init__(self, oracle: CiOracle, mode: str = "full", allowed: list[int] | None = None):
        if mode not in ("full", "constrained"):
            raise ValueError(f"unknown mode {mode!r}")
        self.oracle = oracle
        self.mode = mode
        self.allowed = allowed
        self._imaps: dict[Permutation, Dag] = {}
        self._parents = ParentCache(oracle)

    def imap(self, perm: Permutation) -> Dag:
        g = self._imaps.get(perm)
        if g is None:
            pa = self._parents.masks(perm)
            if self.allowed is not None:
                pa = [m & self.allowed[v] if v else 0 for v, m in enumerate(pa)]
            g = Dag.from_parent_masks(len(perm), pa)
            self._imaps[perm] = g
        return g

    def root(self, perm: Permutation) -> _Node:
        g = self.imap(perm)
        return _Node(perm, g, g.n_arrows)

    def neighbours(self, node: _Node):
        for i, j in sorted_covered_arrows(node.dag):
            if self.mode == "full":
                tau = flip_permutation(node.perm, i, j)
                g = self.imap(tau)
            else:
                m = constrained_flip_update(MinimalImap(node.dag, node.perm), (i, j),
                                            self.oracle, mode="constrained")
                tau, g = m.perm, m.dag
            yield (i, j), _Node(tau, g, g.n_arrows)

    def tolerance(self, value: float) -> float:
        return 0.0

    def score(self, node: _Node) -> float:
        return float(node.dag.n_arrows)


def bic_local_score(cov: np.ndarray, n: int, v: int, pmask: int) -> float:
    """Gaussian log-likelihood of node v given parents minus its BIC penalty."""
    par = [u - 1 for u in iter_nodes(pmask)]
    var = cov[v - 1, v - 1]
    if par:
        s_pp = cov[np.ix_(par, par)]
        s_pv = cov[par, v - 1]
        try:
            beta = np.linalg.solve(s_pp, s_pv)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular regression of node {v} on {par}") from exc
        var = var - float(s_pv @ beta)
    if var <= 1e-300:
        raise NumericalError(f"non-positive residual variance for node {v}")
    return -0.5 * n * (math.log(2 * math.pi * var) + 1) - 0.5 * math.log(n) * (len(par) + 1)


def bic_score(g: Dag, stats: GaussianSuffStats) -> float:
    """BIC of a DAG: sum of node log-likelihoods minus (log n / 2)(|G| + p)."""
    if stats.n is None:
        raise ValueError("BIC needs a sample size")
    return sum(bic_local_score(stats.cov, stats.n, v, g.pa_mask(v)) for v in range(1, g.p + 1))


class BicMoves:
    """Covered flips of the best-scoring DAG consistent with a permutation."""

    max_predecessors = 14

    def __init__(self, stats: GaussianSuffStats):
        if stats.n is None:
            raise ValueError("BIC needs a sample size")
        self.stats = stats
        self._local: dict[tuple[int, int], float] = {}
        self._best: dict[tuple[int, int], tuple[float, int]] = {}
        self._fits: dict[Permutation, tuple[Dag, float]] = {}

    def local(self, v: int, pmask: int) -> float:
        key = (v, pmask)
        s = self._local.get(key)
        if s is None:
            s = bic_local_score(self.stats.cov, self.stats.n, v, pmask)
            self._local[key] = s
        return s

    def best_parents(self, v: int, pred: int) -> tuple[float, int]:
        """Best parent set of v among the nodes in ``pred`` (exhaustive)."""
        key = (v, pred)
        hit = self._best.get(key)
        if hit is not None:
            return hit
        if pred.bit_count() > self.max_predecessors:
            raise GuardError("exact parent-set search limited to 14 predecessors")
        best = (self.local(v, 0), 0)
        sub = pred
        while sub:
            s = self.local(v, sub)
            cand = (s, sub)
            if s > best[0] + 1e-12 or (abs(s - best[0]) <= 1e-12
                                       and (sub.bit_count(), sub) < (best[1].bit_count(), best[1])):
                best = cand
            sub = (sub - 1) & pred
        self._best[key] = best
        return best

    def fit(self, perm: Permutation) -> tuple[Dag, float]:
        hit = self._fits.get(perm)
        if hit is not None:
            return hit
        pa = [0] * (len(perm) + 1)
        total = 0.0
        prefix = 0
        for v in perm:
            s, m = self.best_parents(v, prefix)
            pa[v] = m
            total += s
            prefix |= bit(v)
        out = (Dag.from_parent_masks(len(perm), pa), total)
        self._fits[perm] = out
        return out

    def root(self, perm: Permutation) -> _Node:
        g, s = self.fit(perm)
        return _Node(perm, g, -s)

    def neighbours(self, node: _Node):
        for i, j in sorted_covered_arrows(node.dag):
            tau = flip_permutation(node.perm, i, j)
            g, s = self.fit(tau)
            yield (i, j), _Node(tau, g, -s)

    def tolerance(self, value: float) -> float:
        return 1e-9 * max(1.0, abs(value))

    def score(self, node: _Node) -> float:
        return -node.value


# the descent engine -------------------------------------------------------------

class _Clock:
    def __init__(self, limit: float | None):
        self.deadline = None if limit is None else time.monotonic() + limit
        self.ticks = 0

    def expired(self) -> bool:
        if self.deadline is None:
            return False
        self.ticks += 1
        return self.ticks % 64 == 0 and time.monotonic() > self.deadline


class _Expired(Exception):
    pass


def _search_better(root: _Node, moves, depth: int | None, clock: _Clock,
                   trace: SearchTrace | None, run: int, record: bool):
    """DFS for a strictly better node through weakly worse-free chains.

    A DAG is re-entered only when reached by a shorter chain than before,
    which makes bounded-depth search exact and unbounded search visit each
    DAG once.  Returns ``(node, path, visited)`` with node None when the root
    is a local optimum.
    """
    tol = moves.tolerance(root.value)
    best_depth = {root.dag: 0}
    stack = [(root, 0, ())]
    while stack:
        if clock.expired():
            raise _Expired(len(best_depth))
        node, d, path = stack.pop()
        if depth is not None and d >= depth:
            continue
        children = []
        covered = []
        for move, child in moves.neighbours(node):
            covered.append(list(move))
            if child.value < root.value - tol:
                if record and trace is not None:
                    trace.add(run=run, event="expand", dag=dag_hash(node.dag),
                              perm=format_perm(node.perm), covered=covered)
                return child, path + (move,), len(best_depth)
            if child.value > root.value + tol:
                continue
            nd = d + 1
            if best_depth.get(child.dag, math.inf) <= nd:
                continue
            best_depth[child.dag] = nd
            children.append((child, nd, path + (move,)))
        if record and trace is not None:
            trace.add(run=run, event="expand", dag=dag_hash(node.dag),
                      perm=format_perm(node.perm), covered=covered)
        stack.extend(reversed(children))
    return None, (), len(best_depth)


def _descend(start: Permutation, moves, depth: int | None, clock: _Clock,
             trace: SearchTrace | None, run: int, record: bool = False) -> tuple[_Node, str, int]:
    node = moves.root(start)
    visited = 0
    if trace is not None:
        trace.add(run=run, event="start", perm=format_perm(start), dag=dag_hash(node.dag),
                  arrows=node.dag.n_arrows, score=moves.score(node))
    while True:
        try:
            better, path, seen = _search_better(node, moves, depth, clock, trace, run, record)
        except _Expired as exc:
            visited += exc.args[0]
            reason = "timeout"
            break
        visited += seen
        if better is None:
            reason = "local-optimum"
            break
        node = better
        if trace is not None:
            trace.add(run=run, event="improve", perm=format_perm(node.perm),
                      dag=dag_hash(node.dag), arrows=node.dag.n_arrows,
                      score=moves.score(node), path=[list(m) for m in path])
    if trace is not None:
        trace.add(run=run, event="end", reason=reason, visited=visited,
                  perm=format_perm(node.perm), dag=dag_hash(node.dag), arrows=node.dag.n_arrows)
    return node, reason, visited


def random_permutation(p: int, rng: np.random.Generator) -> Permutation:
    return tuple(int(v) + 1 for v in rng.permutation(p))


def resolve_start(start, p: int, rng: np.random.Generator, oracle: CiOracle | None,
                   moral: Iterable[tuple[int, int]] | None = None) -> Permutation:
    if not isinstance(start, str):
        return check_perm(start, p)
    if start == "order":
        return tuple(range(1, p + 1))
    if start == "random":
        return random_permutation(p, rng)
    if oracle is None:
        raise ValueError("a mindeg start needs a CI tester")
    perm, _ = neighbor_min_degree(oracle, rng=rng, moral_graph=moral)
    return perm


def run_search(p: int, moves, cfg: SearchConfig, oracle: CiOracle | None = None,
               moral=None) -> tuple[Dag, SearchTrace]:
    """Restarted descent with any moves object (``root``, ``neighbours``,
    ``tolerance``, ``score``); ``oracle`` is only needed for mindeg starts."""
    trace = SearchTrace()
    if p <= 1:
        trace.termination = "trivial"
        return Dag.empty(p), trace
    rng = np.random.default_rng(cfg.seed)
    clock = _Clock(cfg.time_limit)
    best = None
    best_key = None
    for run in range(cfg.runs):
        start = (resolve_start(cfg.start, p, rng, oracle, moral) if run == 0
                 else random_permutation(p, rng))
        node, reason, visited = _descend(start, moves, cfg.depth, clock, trace, run,
                                         cfg.record_expansions)
        trace.visited += visited
        trace.termination = reason
        key = (node.value, node.dag.n_arrows, dag_hash(node.dag))
        if best_key is None or key < best_key:
            best, best_key = node, key
        if reason == "timeout":
            break
    return best.dag, trace


def triangle_sp(oracle: CiOracle, cfg: SearchConfig | None = None) -> tuple[Dag, SearchTrace]:
    """Triangle SP with depth bound ``cfg.depth`` and ``cfg.runs`` restarts.

    Returns the sparsest local optimum found (ties broken by DAG digest).
    """
    cfg = cfg or SearchConfig()
    if cfg.score == "bic":
        raise ValueError("use triangle_sp_bic for BIC scoring")
    return run_search(oracle.p, SparsityMoves(oracle), cfg, oracle)


def triangle_sp_bic(stats: GaussianSuffStats, cfg: SearchConfig | None = None,
                    start_oracle: CiOracle | None = None) -> tuple[Dag, SearchTrace]:
    """Triangle SP over permutations scored by the BIC of their best DAG."""
    cfg = cfg or SearchConfig(score="bic")
    if stats.n is not None and stats.n <= stats.p + 3:
        raise ValueError("BIC search needs n > p + 3")
    return run_search(stats.p, BicMoves(stats), cfg, start_oracle)


def highdim_greedy_sp(stats, tau: float | None = None, cfg: SearchConfig | None = None,
                      moral_graph: Iterable[tuple[int, int]] | None = None, *,
                      alpha: float | None = None) -> tuple[Dag, SearchTrace]:
    """Triangle SP with thresholded tests and constrained conditioning sets.

    ``stats`` is Gaussian statistics (tested with ``tau`` or ``alpha``) or
    any CI oracle.  With ``moral_graph`` the search never creates arrows
    between pairs outside that edge set.
    """
    cfg = cfg or SearchConfig(start="mindeg")
    if isinstance(stats, CiOracle):
        oracle = stats
    else:
        if tau is not None and tau <= 0:
            raise ValueError("tau must be positive")
        oracle = GaussianOracle(stats, tau=tau, alpha=alpha)
    allowed = None
    moral = None
    if moral_graph is not None:
        moral = [tuple(e) for e in moral_graph]
        allowed = [0] * (oracle.p + 1)
        for i, j in moral:
            allowed[i] |= bit(j)
            allowed[j] |= bit(i)
    moves = SparsityMoves(oracle, mode="constrained", allowed=allowed)
    return run_search(oracle.p, moves, cfg, oracle, moral)


# brute force and assumption checks ------------------------------------------------

@dataclass
class SpResult:
    min_arrows: int
    dags: frozenset
    mecs: frozenset

    def __iter__(self):
        return iter((self.min_arrows, self.dags, self.mecs))


def sp_brute_force(oracle: CiOracle, p: int | None = None, force: bool = False,
                   max_nodes: int = 8) -> SpResult:
    """Minimum arrow count over all p! minimal I-MAPs, the DAGs attaining it
    and their essential graphs."""
    p = oracle.p if p is None else p
    if p > max_nodes and not force:
        raise GuardError(f"brute force over {p}! permutations refused (limit p <= {max_nodes})")
    best = math.inf
    dags: set[Dag] = set()
    cache = ParentCache(oracle)
    for perm in permutations(range(1, p + 1)):
        pa = cache.masks(perm)
        count = sum(m.bit_count() for m in pa)
        if count < best:
            best = count
            dags = set()
        if count == best:
            dags.add(Dag.from_parent_masks(p, pa))
    mecs = frozenset(essential_graph(g) for g in dags)
    return SpResult(int(best) if dags else 0, frozenset(dags), mecs)


@dataclass
class AssumptionReport:
    which: str
    holds: bool
    witness: Permutation | None = None
    failing_starts: list = field(default_factory=list)
    min_arrows: int | None = None
    n_sparsest_mecs: int | None = None
    outputs: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds


def check_assumption(oracle: CiOracle, p: int | None = None, which: str = "TSP",
                     max_nodes: int = 6, force: bool = False) -> AssumptionReport:
    """Decide TSP, ESP or SMR for an oracle by exhaustive enumeration.

    TSP and ESP hold when the respective search, started from every
    permutation, always ends in the sparsest Markov equivalence class (which
    must then be unique).  SMR holds when the sparsest class is unique.
    ``outputs`` maps each start to the essential graph reached.  The
    reported witness is the failing start whose minimal I-MAP has the fewest
    arrows (ties broken lexicographically).
    """
    p = oracle.p if p is None else p
    which = which.upper()
    if which not in ("TSP", "ESP", "SMR"):
        raise ValueError(f"unknown assumption {which!r}")
    if p > max_nodes and not force:
        raise GuardError(f"exhaustive check refused for p = {p} > {max_nodes}")
    sp = sp_brute_force(oracle, p, force=True)
    report = AssumptionReport(which, len(sp.mecs) == 1, min_arrows=sp.min_arrows,
                              n_sparsest_mecs=len(sp.mecs))
    if which == "SMR":
        return report
    target = next(iter(sp.mecs)) if len(sp.mecs) == 1 else None
    if which == "TSP":
        moves = SparsityMoves(oracle)

        def run(start):
            node, _, _ = _descend(start, moves, None, _Clock(None), None, 0)
            return node.dag
    else:
        from .polytope import EdgeWalker
        walker = EdgeWalker(oracle)

        def run(start):
            return walker.search(start)[0]

    for start in permutations(range(1, p + 1)):
        cpdag = essential_graph(run(start))
        report.outputs[start] = cpdag
        if cpdag != target:
            report.failing_starts.append(start)
    report.holds = not report.failing_starts and target is not None
    if report.failing_starts:
        # the most misleading failing start: its own I-MAP is already the sparsest
        cache = ParentCache(oracle)
        report.witness = min(report.failing_starts, key=lambda s: (cache.count(s), s))
    return report


# faithfulness-type checks -------------------------------------------------------

def _all_subsets(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def is_faithful(oracle: CiOracle, g: Dag) -> bool:
    """The oracle's statements are exactly the d-separations of g."""
    fm = full_mask(g.p)
    for i, j in combinations(range(1, g.p + 1), 2):
        for s in _all_subsets(fm & ~bit(i) & ~bit(j)):
            if oracle.indep_mask(i, j, s) != d_separated_mask(g, i, j, s):
                return False
    return True


def is_markov(oracle: CiOracle, g: Dag) -> bool:
    """Every d-separation of g is among the oracle's statements."""
    fm = full_mask(g.p)
    for i, j in combinations(range(1, g.p + 1), 2):
        for s in _all_subsets(fm & ~bit(i) & ~bit(j)):
            if d_separated_mask(g, i, j, s) and not oracle.indep_mask(i, j, s):
                return False
    return True


def adjacency_faithful(oracle: CiOracle, g: Dag) -> bool:
    """No adjacent pair of g has a separating set in the oracle."""
    fm = full_mask(g.p)
    for i, j in g.skeleton():
        if any(oracle.indep_mask(i, j, s) for s in _all_subsets(fm & ~bit(i) & ~bit(j))):
            return False
    return True


def orientation_faithful(oracle: CiOracle, g: Dag) -> bool:
    """Unshielded triples i - k - j of g: a collider must keep i, j dependent
    given every set containing k, a non-collider given every set avoiding k."""
    fm = full_mask(g.p)
    for k in range(1, g.p + 1):
        nb = g.neighbor_mask(k)
        for i, j in combinations(iter_nodes(nb), 2):
            if g.adjacent(i, j):
                continue
            collider = g.has_arrow(i, k) and g.has_arrow(j, k)
            rest = fm & ~bit(i) & ~bit(j) & ~bit(k)
            for s in _all_subsets(rest):
                cond = s | bit(k) if collider else s
                if oracle.indep_mask(i, j, cond):
                    return False
    return True

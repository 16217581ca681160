"""Conditional-independence statements and oracles.

Every oracle answers ``independent(i, j, s)`` for distinct nodes ``i, j`` and
a conditioning set ``s`` avoiding both.  Answers are memoised on the key
``(min(i, j), max(i, j), bitmask(s))``.  Three backends are provided:

* :class:`CiSet` - an explicit list of statements,
* :class:`DSepOracle` - d-separation in a known DAG,
* :class:`GaussianOracle` - partial correlations of a covariance matrix,
  either thresholded (``|rho| <= tau`` means independent) or tested with
  Fisher's z at level ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from statistics import NormalDist
from typing import Iterable, Iterator

import numpy as np

from .graph import Dag, GraphError, bit, d_separated_mask, full_mask, iter_nodes, mask_of


class NumericalError(ArithmeticError):
    """Raised when a covariance submatrix is too close to singular."""


MIN_EIGENVALUE = 1e-12


def _norm_key(i: int, j: int, s: int) -> int:
    if i > j:
        i, j = j, i
    return (s << 16) | (i << 8) | j


def _split_key(key: int) -> tuple[int, int, int]:
    return (key >> 8) & 0xFF, key & 0xFF, key >> 16


@dataclass(frozen=True)
class CiStatement:
    """The statement ``i _||_ j | s`` stored with ``i < j``."""

    i: int
    j: int
    s: frozenset[int] = frozenset()

    def __post_init__(self):
        s = frozenset(self.s)
        if self.i == self.j:
            raise ValueError("a CI statement needs two distinct nodes")
        if self.i in s or self.j in s:
            raise ValueError("conditioning set must exclude the two nodes")
        if self.i > self.j:
            a, b = self.j, self.i
            object.__setattr__(self, "i", a)
            object.__setattr__(self, "j", b)
        object.__setattr__(self, "s", s)

    def sort_key(self):
        return (len(self.s), self.i, self.j, sorted(self.s))

    def __str__(self) -> str:
        rest = " ".join(str(v) for v in sorted(self.s))
        return f"{self.i} _||_ {self.j} | {rest}".rstrip()


class CiOracle:
    """Base class: validates queries and memoises answers."""

    tag = "oracle"

    def __init__(self, p: int):
        if p < 0 or p > 255:
            raise ValueError("node count must lie in 0..255")
        self.p = p
        self._cache: dict[int, bool] = {}
        self.n_queries = 0

    def independent(self, i: int, j: int, s: Iterable[int] = ()) -> bool:
        s = tuple(s)
        for v in (i, j, *s):
            if not isinstance(v, (int, np.integer)) or v < 1 or v > self.p:
                raise ValueError(f"node {v!r} outside 1..{self.p}")
        if i == j or i in s or j in s:
            raise ValueError("query needs distinct nodes outside the conditioning set")
        return self.indep_mask(int(i), int(j), mask_of(int(v) for v in s))

    def indep_mask(self, i: int, j: int, s: int) -> bool:
        """Query with the conditioning set given as a node bitmask."""
        key = _norm_key(i, j, s)
        hit = self._cache.get(key)
        if hit is None:
            self.n_queries += 1
            hit = self._query(min(i, j), max(i, j), s)
            self._cache[key] = hit
        return hit

    def _query(self, i: int, j: int, s: int) -> bool:
        raise NotImplementedError

    def clear_cache(self) -> None:
        self._cache.clear()

    def statements(self) -> Iterator[CiStatement]:
        """Enumerate every independence statement the oracle asserts."""
        for i, j in combinations(range(1, self.p + 1), 2):
            rest = full_mask(self.p) & ~bit(i) & ~bit(j)
            sub = rest
            while True:
                if self.indep_mask(i, j, sub):
                    yield CiStatement(i, j, frozenset(iter_nodes(sub)))
                if sub == 0:
                    break
                sub = (sub - 1) & rest


class CiSet(CiOracle):
    """An explicit collection of CI statements over nodes 1..p."""

    tag = "relations"

    def __init__(self, p: int, statements: Iterable = ()):
        super().__init__(p)
        stmts = set()
        for st in statements:
            if not isinstance(st, CiStatement):
                i, j, s = st
                st = CiStatement(i, j, frozenset(s))
            for v in (st.i, st.j, *st.s):
                if v < 1 or v > p:
                    raise ValueError(f"node {v} outside 1..{p}")
            stmts.add(st)
        self._stmts = frozenset(stmts)
        self._keys = frozenset(_norm_key(st.i, st.j, mask_of(st.s)) for st in stmts)

    def _query(self, i: int, j: int, s: int) -> bool:
        return _norm_key(i, j, s) in self._keys

    def statements(self) -> Iterator[CiStatement]:
        yield from sorted(self._stmts, key=CiStatement.sort_key)

    def __len__(self) -> int:
        return len(self._stmts)

    def __iter__(self):
        return self.statements()

    def __contains__(self, st) -> bool:
        if not isinstance(st, CiStatement):
            i, j, s = st
            st = CiStatement(i, j, frozenset(s))
        return st in self._stmts


class DSepOracle(CiOracle):
    """Independence as d-separation in a ground-truth DAG."""

    tag = "dsep"

    def __init__(self, dag: Dag):
        super().__init__(dag.p)
        self.dag = dag

    def _query(self, i: int, j: int, s: int) -> bool:
        return d_separated_mask(self.dag, i, j, s)


def dsep_oracle_query(g: Dag, i: int, j: int, s: Iterable[int] = ()) -> bool:
    """One-off d-separation query (no caching)."""
    s = tuple(s)
    if i == j or i in s or j in s:
        raise GraphError("query needs distinct nodes outside the conditioning set")
    return d_separated_mask(g, i, j, mask_of(s))


def all_dseparations(g: Dag) -> CiSet:
    """The explicit set of every d-separation statement of g."""
    return CiSet(g.p, DSepOracle(g).statements())


# Gaussian statistics -----------------------------------------------------------

@dataclass(frozen=True)
class GaussianSuffStats:
    """A covariance matrix and, for sample data, the sample size."""

    cov: np.ndarray
    n: int | None = None

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.allclose(cov, cov.T, atol=1e-10, rtol=1e-8):
            raise ValueError("covariance must be symmetric")
        cov = (cov + cov.T) / 2
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)
        if self.n is not None and self.n < 1:
            raise ValueError("sample size must be positive")

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "GaussianSuffStats":
        """Second-moment matrix of zero-mean data (no centring), divisor n."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError("samples must be an n x p array")
        return cls(x.T @ x / x.shape[0], n=x.shape[0])

    @classmethod
    def from_covariance(cls, cov: np.ndarray, n: int | None = None) -> "GaussianSuffStats":
        return cls(cov, n)

    @property
    def p(self) -> int:
        return self.cov.shape[0]


def _partial_corr0(cov: np.ndarray, i: int, j: int, s: list[int]) -> float:
    """Partial correlation with 0-based indices via one Cholesky factor.

    With the conditioning variables ordered first, the trailing 2x2 block of
    the Cholesky factor is the factor of the conditional covariance of (i, j).
    """
    if not s:
        a, b, c = cov[i, i], cov[j, j], cov[i, j]
        if a < MIN_EIGENVALUE or b < MIN_EIGENVALUE:
            raise NumericalError(f"degenerate variance for pair ({i + 1}, {j + 1})")
        return float(max(-1.0, min(1.0, c / math.sqrt(a * b))))
    idx = s + [i, j]
    sub = cov[np.ix_(idx, idx)]
    try:
        chol = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"covariance submatrix for ({i + 1}, {j + 1} | {[v + 1 for v in s]}) "
            "is not positive definite") from exc
    diag = np.diagonal(chol)
    if float(np.min(diag)) ** 2 < MIN_EIGENVALUE:
        raise NumericalError(
            f"covariance submatrix for ({i + 1}, {j + 1} | {[v + 1 for v in s]}) is near singular")
    b = chol[-1, -2]
    c = chol[-1, -1]
    return float(b / math.sqrt(b * b + c * c))


def partial_correlation(stats: GaussianSuffStats, i: int, j: int, s: Iterable[int] = ()) -> float:
    """rho_{i,j|s} for 1-based nodes."""
    s = sorted(set(s))
    p = stats.p
    for v in (i, j, *s):
        if v < 1 or v > p:
            raise ValueError(f"node {v} outside 1..{p}")
    if i == j or i in s or j in s:
        raise ValueError("query needs distinct nodes outside the conditioning set")
    a, b = min(i, j), max(i, j)
    return _partial_corr0(stats.cov, a - 1, b - 1, [v - 1 for v in s])


def normal_quantile(q: float) -> float:
    return NormalDist().inv_cdf(q)


def fisher_z_test(rho_hat: float, n: int, s_size: int, alpha: float) -> bool:
    """True when independence is *not* rejected at level alpha."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if n - s_size - 3 <= 0:
        raise ValueError(f"sample size {n} too small for a conditioning set of size {s_size}")
    if not abs(rho_hat) < 1:
        raise NumericalError("partial correlation of magnitude 1")
    z = 0.5 * math.log((1 + rho_hat) / (1 - rho_hat))
    return math.sqrt(n - s_size - 3) * abs(z) <= normal_quantile(1 - alpha / 2)


class GaussianOracle(CiOracle):
    """Partial-correlation tester over a covariance matrix.

    Exactly one of ``tau`` (threshold on ``|rho|``) and ``alpha`` (Fisher z
    level, needs ``stats.n``) must be given.  Every computed partial
    correlation is kept in :attr:`rho` for diagnostics.
    """

    tag = "gauss"

    def __init__(self, stats: GaussianSuffStats, tau: float | None = None,
                 alpha: float | None = None):
        super().__init__(stats.p)
        if (tau is None) == (alpha is None):
            raise ValueError("give exactly one of tau and alpha")
        if tau is not None and tau < 0:
            raise ValueError("tau must be non-negative")
        if alpha is not None:
            if stats.n is None:
                raise ValueError("Fisher z testing needs a sample size")
            self._crit = normal_quantile(1 - alpha / 2)
        self.stats = stats
        self.tau = tau
        self.alpha = alpha
        self.rho: dict[tuple[int, int, int], float] = {}

    def _query(self, i: int, j: int, s: int) -> bool:
        cond = [v - 1 for v in iter_nodes(s)]
        r = _partial_corr0(self.stats.cov, i - 1, j - 1, cond)
        self.rho[(i, j, s)] = r
        if self.tau is not None:
            return abs(r) <= self.tau
        dof = self.stats.n - len(cond) - 3
        if dof <= 0:
            raise ValueError(f"sample size {self.stats.n} too small for |S| = {len(cond)}")
        if abs(r) >= 1:
            return False
        z = 0.5 * math.log((1 + r) / (1 - r))
        return math.sqrt(dof) * abs(z) <= self._crit


# graphoid axioms ------------------------------------------------------------------

@dataclass
class GraphoidReport:
    sg1: bool
    sg2: bool
    intersection: bool
    counterexamples: dict[str, list] = field(default_factory=dict)

    @property
    def semigraphoid(self) -> bool:
        return self.sg1 and self.sg2

    @property
    def graphoid(self) -> bool:
        return self.sg1 and self.sg2 and self.intersection


def check_graphoid(c: CiOracle, p: int | None = None, limit: int = 10) -> GraphoidReport:
    """Check symmetry (SG1), the semigraphoid rule (SG2) and intersection (INT).

    SG2: i_||_j|S and i_||_k|S+j imply i_||_k|S and i_||_j|S+k.
    INT: i_||_j|S+k and i_||_k|S+j imply i_||_j|S and i_||_k|S.
    Counterexamples are ``(premises, missing conclusions)`` pairs, at most
    ``limit`` per axiom.
    """
    p = c.p if p is None else p
    stmts = list(c.statements())
    fm = full_mask(p)

    def ind(a, b, s):
        return c.indep_mask(a, b, s)

    def st(a, b, s):
        return CiStatement(a, b, frozenset(iter_nodes(s)))

    sg1_bad = []
    for x in stmts:
        s = mask_of(x.s)
        if ind(x.i, x.j, s) != ind(x.j, x.i, s):
            sg1_bad.append(x)
    sg2_bad, int_bad = [], []
    for x in stmts:
        s = mask_of(x.s)
        for a, b in ((x.i, x.j), (x.j, x.i)):
            for k in iter_nodes(fm & ~s & ~bit(a) & ~bit(b)):
                if ind(a, k, s | bit(b)):
                    missing = [st(a, k, s)] if not ind(a, k, s) else []
                    if not ind(a, b, s | bit(k)):
                        missing.append(st(a, b, s | bit(k)))
                    if missing and len(sg2_bad) < limit:
                        sg2_bad.append(((st(a, b, s), st(a, k, s | bit(b))), missing))
                if k in x.s:
                    rest = s & ~bit(k)
                    if ind(a, k, rest | bit(b)):
                        missing = [st(a, b, rest)] if not ind(a, b, rest) else []
                        if not ind(a, k, rest):
                            missing.append(st(a, k, rest))
                        if missing and len(int_bad) < limit:
                            int_bad.append(((st(a, b, s), st(a, k, rest | bit(b))), missing))
    return GraphoidReport(
        sg1=not sg1_bad, sg2=not sg2_bad, intersection=not int_bad,
        counterexamples={"sg1": sg1_bad, "sg2": sg2_bad, "int": int_bad})

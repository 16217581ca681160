"""Random linear Gaussian structural equation models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ci import GaussianSuffStats
from ..graph import Dag


@dataclass(frozen=True)
class SemModel:
    """``X = A^T X + eps`` with ``eps ~ N(0, diag(noise))``.

    ``weights[i-1, j-1]`` is the coefficient of arrow i -> j.
    """

    dag: Dag
    weights: np.ndarray
    noise: np.ndarray

    def weight(self, i: int, j: int) -> float:
        return float(self.weights[i - 1, j - 1])

    def covariance(self) -> np.ndarray:
        p = self.dag.p
        inv = np.linalg.inv(np.eye(p) - self.weights)
        return inv.T @ np.diag(self.noise) @ inv

    def precision(self) -> np.ndarray:
        p = self.dag.p
        ia = np.eye(p) - self.weights
        return ia @ np.diag(1.0 / self.noise) @ ia.T


def random_gaussian_dag(p: int, s: float, rng: np.random.Generator,
                        low: float = 0.25, high: float = 1.0) -> SemModel:
    """Erdos-Renyi DAG under the order 1..p with edge probability s / (p - 1)
    and weights uniform on [-high, -low] u [low, high]; unit noise."""
    if p < 1:
        raise ValueError("need at least one node")
    prob = 0.0 if p == 1 else s / (p - 1)
    if p > 1 and not 0 < s <= p - 1:
        raise ValueError("expected neighbourhood size must lie in (0, p - 1]")
    upper = np.triu(rng.random((p, p)) < prob, k=1)
    mags = rng.uniform(low, high, size=(p, p))
    signs = np.where(rng.random((p, p)) < 0.5, -1.0, 1.0)
    weights = np.where(upper, mags * signs, 0.0)
    arrows = [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(upper))]
    return SemModel(Dag(p, arrows), weights, np.ones(p))


def sem_covariance_and_sample(m: SemModel, n: int | None = None,
                              rng: np.random.Generator | None = None) -> GaussianSuffStats:
    """Exact covariance when ``n`` is None, otherwise the second-moment matrix
    of n forward-simulated samples."""
    if n is None:
        return GaussianSuffStats(m.covariance())
    return GaussianSuffStats.from_samples(sample(m, n, rng))


def sample(m: SemModel, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """n x p samples drawn node by node in topological order."""
    if rng is None:
        rng = np.random.default_rng()
    p = m.dag.p
    eps = rng.standard_normal((n, p)) * np.sqrt(m.noise)
    x = np.zeros((n, p))
    for v in m.dag.topological_order():
        j = v - 1
        x[:, j] = x @ m.weights[:, j] + eps[:, j]
    return x

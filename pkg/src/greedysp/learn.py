"""One entry point that runs any of the structure-learning algorithms by name."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ci import CiOracle, GaussianSuffStats
from .formats import format_perm
from .graph import Dag, Pdag, essential_graph, pdag_to_dag
from .mindeg import neighbor_min_degree
from .polytope import edge_sp
from .search import (SearchConfig, SearchTrace, random_permutation, resolve_start, dag_hash,
                     highdim_greedy_sp, sp_brute_force, triangle_sp, triangle_sp_bic)
from .simbench.pc import pc_baseline

ALGORITHMS = ("triangle-sp", "edge-sp", "highdim-sp", "sp", "pc", "bic-sp", "mindeg")


@dataclass
class LearnResult:
    cpdag: Pdag
    dag: Dag | None
    trace: SearchTrace


def learn(algo: str, oracle: CiOracle, stats: GaussianSuffStats | None = None,
          cfg: SearchConfig | None = None) -> LearnResult:
    """Run ``algo`` on a CI oracle (and Gaussian statistics for bic-sp)."""
    cfg = cfg or SearchConfig()
    p = oracle.p
    if algo == "triangle-sp":
        dag, trace = triangle_sp(oracle, cfg)
    elif algo == "highdim-sp":
        dag, trace = highdim_greedy_sp(oracle, cfg=cfg)
    elif algo == "bic-sp":
        if stats is None or stats.n is None:
            raise ValueError("bic-sp needs sample data")
        dag, trace = triangle_sp_bic(stats, cfg, start_oracle=oracle)
    elif algo == "edge-sp":
        trace = SearchTrace()
        rng = np.random.default_rng(cfg.seed)
        best = None
        for run in range(cfg.runs):
            start = resolve_start(cfg.start, p, rng, oracle) if run == 0 else random_permutation(p, rng)
            dag, walk = edge_sp(oracle, start, force=True)
            for k, (perm, count) in enumerate(walk):
                trace.add(run=run, event="start" if k == 0 else "improve",
                          perm=format_perm(perm), arrows=count, score=float(count))
            trace.add(run=run, event="end", reason="local-optimum", dag=dag_hash(dag),
                      arrows=dag.n_arrows)
            if best is None or (dag.n_arrows, dag_hash(dag)) < (best.n_arrows, dag_hash(best)):
                best = dag
        dag = best
        trace.termination = "local-optimum"
    elif algo == "sp":
        res = sp_brute_force(oracle, force=False)
        dag = min(res.dags, key=dag_hash)
        trace = SearchTrace(termination="exhaustive")
        trace.add(run=0, event="end", reason="exhaustive", dag=dag_hash(dag), arrows=dag.n_arrows,
                  n_sparsest_classes=len(res.mecs))
    elif algo == "pc":
        cpdag = pc_baseline(oracle)
        trace = SearchTrace(termination="complete")
        return LearnResult(cpdag, pdag_to_dag(cpdag), trace)
    elif algo == "mindeg":
        perm, dag = neighbor_min_degree(oracle, rng=np.random.default_rng(cfg.seed))
        trace = SearchTrace(termination="complete")
        trace.add(run=0, event="end", reason="complete", perm=format_perm(perm),
                  dag=dag_hash(dag), arrows=dag.n_arrows)
    else:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    return LearnResult(essential_graph(dag), dag, trace)

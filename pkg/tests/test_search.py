import math
from itertools import permutations

import numpy as np
import pytest

from conftest import random_dag
from greedysp.ci import CiSet, DSepOracle, GaussianOracle, GaussianSuffStats
from greedysp.errors import GuardError
from greedysp.graph import Dag, Pdag, essential_graph, markov_equivalent
from greedysp.imap import imap_arrow_count, imap_dag
from greedysp.search import (SearchConfig, SearchTrace, adjacency_faithful, bic_local_score,
                             bic_score, check_assumption, dag_hash, highdim_greedy_sp, is_faithful,
                             is_markov, orientation_faithful, sp_brute_force, triangle_sp,
                             triangle_sp_bic)
from greedysp.simbench.sem import random_gaussian_dag, sample


def walk_counts(trace):
    """Arrow counts of start and improvement events, per run."""
    out = []
    for run in trace.runs():
        out.append([ev["arrows"] for ev in run if ev["event"] in ("start", "improve")])
    return out


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SearchConfig(depth=0)
        with pytest.raises(ValueError):
            SearchConfig(runs=0)
        with pytest.raises(ValueError):
            SearchConfig(start="sideways")
        with pytest.raises(ValueError):
            SearchConfig(score="aic")
        assert SearchConfig(start=[2, 1]).start == (2, 1)


class TestTriangleSp:
    def test_collider_from_321(self):
        truth = Dag(3, [(1, 3), (2, 3)])
        g, trace = triangle_sp(DSepOracle(truth), SearchConfig(start=(3, 2, 1)))
        assert imap_arrow_count((3, 2, 1), DSepOracle(truth)) == 3
        assert g.n_arrows == 2
        assert markov_equivalent(g, truth)
        assert walk_counts(trace) == [[3, 2]]

    def test_trap_returns_five_arrows(self, trap4):
        g, trace = triangle_sp(trap4, SearchConfig(start=(1, 4, 2, 3), record_expansions=True))
        assert g.n_arrows == 5
        sparsest = sp_brute_force(trap4)
        assert essential_graph(g) not in sparsest.mecs
        expanded = [ev["covered"] for ev in trace.steps if ev["event"] == "expand"]
        assert expanded[:2] == [[[1, 4]], [[4, 1], [4, 2]]]
        assert trace.termination == "local-optimum"

    def test_single_node(self):
        g, trace = triangle_sp(CiSet(1))
        assert g.n_arrows == 0 and trace.termination == "trivial"

    def test_faithful_oracles_recover_the_class(self):
        rng = np.random.default_rng(0)
        for k in range(30):
            p = int(rng.integers(3, 8))
            truth = random_dag(p, float(rng.uniform(0.2, 0.7)), rng)
            g, trace = triangle_sp(DSepOracle(truth), SearchConfig(seed=k))
            assert markov_equivalent(g, truth)
            for counts in walk_counts(trace):
                assert counts == sorted(counts, reverse=True)
                assert len(set(counts)) == len(counts)

    def test_output_never_denser_than_start(self, six):
        for k in range(20):
            g, trace = triangle_sp(six, SearchConfig(seed=k, depth=2))
            start = tuple(int(c) for c in trace.steps[0]["perm"])
            assert g.n_arrows <= imap_arrow_count(start, six)

    def test_restarts_are_reproducible(self, six):
        cfg = SearchConfig(runs=5, depth=3, seed=42)
        a, ta = triangle_sp(six, cfg)
        b, tb = triangle_sp(six, cfg)
        assert a == b and ta.to_jsonl() == tb.to_jsonl()
        assert len(ta.runs()) == 5

    def test_restarts_return_sparsest_run(self, six):
        g, trace = triangle_sp(six, SearchConfig(runs=8, seed=1))
        ends = [ev["arrows"] for ev in trace.steps if ev["event"] == "end"]
        assert g.n_arrows == min(ends)

    def test_depth_one_can_stop_earlier(self, six):
        deep, _ = triangle_sp(six, SearchConfig(start=(1, 2, 4, 5, 6, 3)))
        shallow, _ = triangle_sp(six, SearchConfig(start=(1, 2, 4, 5, 6, 3), depth=1))
        assert shallow.n_arrows >= deep.n_arrows

    def test_order_start(self):
        truth = Dag(4, [(1, 2), (2, 3), (3, 4)])
        g, trace = triangle_sp(DSepOracle(truth), SearchConfig(start="order"))
        assert trace.steps[0]["perm"] == "1234"
        assert g == truth

    def test_timeout_is_reported(self):
        rng = np.random.default_rng(3)
        truth = random_dag(8, 0.6, rng)
        g, trace = triangle_sp(DSepOracle(truth), SearchConfig(runs=50, time_limit=1e-9))
        assert trace.termination == "timeout"
        assert g.p == 8

    def test_trace_round_trip(self, trap4):
        _, trace = triangle_sp(trap4, SearchConfig(start=(1, 4, 2, 3), record_expansions=True))
        back = SearchTrace.from_jsonl(trace.to_jsonl())
        assert back.steps == trace.steps
        assert back.visited == trace.visited == 3
        assert back.termination == trace.termination

    def test_dag_hash_is_canonical(self):
        assert dag_hash(Dag(3, [(1, 2), (2, 3)])) == dag_hash(Dag(3, [(2, 3), (1, 2)]))
        assert dag_hash(Dag(3, [(1, 2)])) != dag_hash(Dag(3, [(2, 1)]))


class TestBruteForce:
    def test_trap(self, trap4):
        res = sp_brute_force(trap4)
        assert res.min_arrows == 4
        assert res.mecs == {Pdag(4, [(1, 4), (3, 4)], [(1, 2), (2, 3)])}
        assert imap_dag((1, 2, 3, 4), trap4) in res.dags

    def test_faithful_minimum_is_truth(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            truth = random_dag(6, 0.4, rng)
            res = sp_brute_force(DSepOracle(truth))
            assert res.min_arrows == truth.n_arrows
            assert res.mecs == {essential_graph(truth)}

    def test_no_relations(self):
        res = sp_brute_force(CiSet(4))
        assert res.min_arrows == 6
        assert len(res.dags) == 24

    def test_guard(self):
        with pytest.raises(GuardError):
            sp_brute_force(CiSet(9))


class TestAssumptions:
    def test_trap_tsp_fails_esp_holds(self, trap4):
        tsp = check_assumption(trap4, which="TSP")
        assert not tsp.holds
        assert tsp.witness == (1, 4, 2, 3)
        assert len(tsp.failing_starts) == 8
        assert check_assumption(trap4, which="ESP").holds
        assert check_assumption(trap4, which="SMR").holds

    def test_edge_trap(self, edge_trap5):
        assert check_assumption(edge_trap5, which="SMR").holds
        esp = check_assumption(edge_trap5, which="ESP")
        assert not esp.holds
        assert (5, 4, 3, 2, 1) in esp.failing_starts
        assert imap_arrow_count((5, 4, 3, 2, 1), edge_trap5) == 9
        assert sp_brute_force(edge_trap5).min_arrows == 8

    def test_faithful_oracle_passes_all(self):
        rng = np.random.default_rng(12)
        for _ in range(3):
            oracle = DSepOracle(random_dag(5, 0.5, rng))
            for which in ("TSP", "ESP", "SMR"):
                assert check_assumption(oracle, which=which).holds

    def test_guard_and_names(self, trap4):
        with pytest.raises(ValueError):
            check_assumption(trap4, which="XYZ")
        with pytest.raises(GuardError):
            check_assumption(CiSet(7), which="SMR")

    def test_not_faithful_five(self, not_faithful5):
        res = sp_brute_force(not_faithful5)
        assert res.min_arrows == 7 and len(res.mecs) == 1
        g = next(iter(res.dags))
        assert not is_faithful(not_faithful5, g)
        assert check_assumption(not_faithful5, which="TSP").holds

    def test_adjacency_of_tsp_output(self):
        # outputs of a search that is consistent keep only pairs with no separating set
        rng = np.random.default_rng(21)
        for k in range(10):
            oracle = DSepOracle(random_dag(5, 0.5, rng))
            g, _ = triangle_sp(oracle, SearchConfig(seed=k))
            assert adjacency_faithful(oracle, g)
            assert orientation_faithful(oracle, g)
            assert is_markov(oracle, g)


class TestBic:
    def test_local_score_matches_least_squares(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(500, 4))
        x[:, 3] += 0.7 * x[:, 0] - 0.4 * x[:, 2]
        stats = GaussianSuffStats.from_samples(x)
        beta, *_ = np.linalg.lstsq(x[:, [0, 2]], x[:, 3], rcond=None)
        var = float(np.mean((x[:, 3] - x[:, [0, 2]] @ beta) ** 2))
        expected = -250 * (math.log(2 * math.pi * var) + 1) - 0.5 * math.log(500) * 3
        assert bic_local_score(stats.cov, 500, 4, 0b1010) == pytest.approx(expected, rel=1e-10)

    def test_equivalent_dags_tie(self):
        rng = np.random.default_rng(1)
        m = random_gaussian_dag(4, 2, rng)
        stats = GaussianSuffStats.from_samples(sample(m, 2000, rng))
        a = bic_score(Dag(4, [(1, 2), (2, 3)]), stats)
        b = bic_score(Dag(4, [(3, 2), (2, 1)]), stats)
        assert a == pytest.approx(b, rel=1e-12)

    def test_two_nodes_dependent(self):
        cov = np.array([[1.0, 0.5], [0.5, 1.25]])
        g, _ = triangle_sp_bic(GaussianSuffStats(cov, n=100_000), SearchConfig(score="bic"))
        assert essential_graph(g) == Pdag(2, [], [(1, 2)])

    def test_two_nodes_independent(self):
        rng = np.random.default_rng(2)
        stats = GaussianSuffStats.from_samples(rng.normal(size=(10_000, 2)))
        g, _ = triangle_sp_bic(stats, SearchConfig(score="bic"))
        assert g.n_arrows == 0

    def test_needs_enough_samples(self):
        with pytest.raises(ValueError):
            triangle_sp_bic(GaussianSuffStats(np.eye(5), n=8))

    def test_scores_strictly_improve(self):
        rng = np.random.default_rng(3)
        m = random_gaussian_dag(6, 2, rng)
        stats = GaussianSuffStats.from_samples(sample(m, 5000, rng))
        _, trace = triangle_sp_bic(stats, SearchConfig(score="bic", runs=3, seed=3))
        for run in trace.runs():
            scores = [ev["score"] for ev in run if ev["event"] in ("start", "improve")]
            assert all(b > a for a, b in zip(scores, scores[1:]))

    def test_large_sample_agrees_with_oracle_search(self):
        agree = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            p = int(rng.integers(3, 7))
            m = random_gaussian_dag(p, 1.5, rng)
            stats = GaussianSuffStats.from_samples(sample(m, 1_000_000, rng))
            g, _ = triangle_sp_bic(stats, SearchConfig(score="bic", seed=seed))
            h, _ = triangle_sp(DSepOracle(m.dag), SearchConfig(seed=seed))
            agree += essential_graph(g) == essential_graph(h)
        assert agree >= 95


class TestHighDim:
    def test_exact_covariance_recovers_class(self):
        for seed in range(15):
            rng = np.random.default_rng(seed)
            m = random_gaussian_dag(8, 2, rng)
            g, trace = highdim_greedy_sp(GaussianSuffStats(m.covariance()), tau=1e-9,
                                         cfg=SearchConfig(start="mindeg", seed=seed))
            assert markov_equivalent(g, m.dag)

    def test_diagonal_covariance(self):
        for start in ("random", "mindeg", "order"):
            g, _ = highdim_greedy_sp(GaussianSuffStats(np.eye(5)), tau=0.01,
                                     cfg=SearchConfig(start=start))
            assert g.n_arrows == 0

    def test_moral_graph_restricts_arrows(self):
        rng = np.random.default_rng(4)
        m = random_gaussian_dag(7, 2, rng)
        stats = GaussianSuffStats(m.covariance())
        allowed = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)]
        g, _ = highdim_greedy_sp(stats, tau=1e-9, cfg=SearchConfig(start="mindeg"),
                                 moral_graph=allowed)
        assert g.skeleton() <= set(allowed)

    def test_fisher_z_variant_runs(self):
        rng = np.random.default_rng(5)
        m = random_gaussian_dag(6, 1, rng)
        stats = GaussianSuffStats.from_samples(sample(m, 20_000, rng))
        g, _ = highdim_greedy_sp(stats, alpha=0.001, cfg=SearchConfig(start="mindeg", runs=3))
        assert markov_equivalent(g, m.dag)

    def test_rejects_bad_tau(self):
        with pytest.raises(ValueError):
            highdim_greedy_sp(GaussianSuffStats(np.eye(3)), tau=0.0)

    def test_accepts_oracle(self):
        truth = Dag(4, [(1, 2), (3, 2), (2, 4)])
        g, _ = highdim_greedy_sp(DSepOracle(truth), cfg=SearchConfig(start="mindeg"))
        assert markov_equivalent(g, truth)

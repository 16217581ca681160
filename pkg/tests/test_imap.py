from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dag
from greedysp.ci import CiSet, DSepOracle
from greedysp.graph import Dag, GraphError, bit, covered_arrows, linear_extensions
from greedysp.imap import (MinimalImap, ParentCache, adjacent_flip_permutation, check_perm,
                           constrained_flip_update, flip_permutation, imap_arrow_count, imap_dag,
                           minimal_imap)

G1423 = Dag(4, [(1, 4), (4, 2), (1, 3), (4, 3), (2, 3)])
G1234 = Dag(4, [(1, 2), (2, 3), (1, 4), (3, 4)])
G4123 = Dag(4, [(4, 1), (4, 2), (4, 3), (1, 3), (2, 3)])


def defining_arrows(perm, oracle):
    """Arrow set straight from the definition, query by query."""
    out = set()
    for b in range(len(perm)):
        for a in range(b):
            cond = set(perm[:b + 1]) - {perm[a], perm[b]}
            if not oracle.independent(perm[a], perm[b], cond):
                out.add((perm[a], perm[b]))
    return out


@st.composite
def oracle_and_perm(draw, max_p=6):
    p = draw(st.integers(2, max_p))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    g = random_dag(p, draw(st.floats(0.1, 0.9)), rng)
    perm = tuple(draw(st.permutations(list(range(1, p + 1)))))
    return DSepOracle(g), perm


class TestMinimalImap:
    def test_empty_relations_give_complete_dag(self):
        assert minimal_imap((1, 2, 3), CiSet(3)).dag == Dag.complete((1, 2, 3))

    def test_known_values(self, trap4):
        assert minimal_imap((1, 4, 2, 3), trap4).dag == G1423
        assert minimal_imap((1, 2, 3, 4), trap4).dag == G1234
        assert minimal_imap((4, 1, 2, 3), trap4).dag == G4123

    def test_sparsest_over_all_orders(self, trap4):
        assert min(imap_arrow_count(p, trap4) for p in permutations(range(1, 5))) == 4

    def test_rejects_non_permutation(self, trap4):
        with pytest.raises(ValueError):
            minimal_imap((1, 2, 2, 3), trap4)
        with pytest.raises(ValueError):
            check_perm((1, 2), 3)

    @settings(max_examples=60, deadline=None)
    @given(oracle_and_perm())
    def test_definition_and_minimality(self, case):
        oracle, perm = case
        m = minimal_imap(perm, oracle)
        assert m.dag.arrows == defining_arrows(perm, oracle)
        assert m.dag.is_linear_extension(perm)

    @settings(max_examples=40, deadline=None)
    @given(oracle_and_perm(max_p=5))
    def test_any_linear_extension_gives_same_imap(self, case):
        oracle, perm = case
        g = imap_dag(perm, oracle)
        for ext in list(linear_extensions(g))[:30]:
            assert imap_dag(ext, oracle) == g

    def test_parent_cache_agrees(self, six):
        cache = ParentCache(six)
        for perm in list(permutations(range(1, 7)))[::37]:
            assert Dag.from_parent_masks(6, cache.masks(perm)) == imap_dag(perm, six)
            assert cache.count(perm) == imap_arrow_count(perm, six)


class TestFlips:
    def test_flip_moves_j_before_i(self):
        assert flip_permutation((1, 4, 2, 3), 1, 4) == (4, 1, 2, 3)
        assert flip_permutation((1, 2, 3, 4), 2, 4) == (1, 4, 2, 3)
        with pytest.raises(ValueError):
            flip_permutation((1, 2, 3), 3, 1)

    def test_covered_flip_update_known(self, trap4):
        m = minimal_imap((1, 4, 2, 3), trap4)
        for mode in ("full", "constrained"):
            out = constrained_flip_update(m, (1, 4), trap4, mode=mode)
            assert out.dag == G4123
            assert out.perm == (4, 1, 2, 3)

    def test_non_covered_rejected(self, trap4):
        m = minimal_imap((1, 4, 2, 3), trap4)
        with pytest.raises(GraphError):
            constrained_flip_update(m, (2, 3), trap4)

    def test_trivially_covered_flip_only_turns_the_arrow(self):
        oracle = DSepOracle(Dag(2, [(1, 2)]))
        m = minimal_imap((1, 2), oracle)
        out = constrained_flip_update(m, (1, 2), oracle, mode="constrained")
        assert out.dag == Dag(2, [(2, 1)])

    def test_approximate_flag(self, trap4):
        m = minimal_imap((1, 4, 2, 3), trap4)
        assert constrained_flip_update(m, (1, 4), trap4, mode="constrained").approximate
        dsep = DSepOracle(G1234)
        m2 = minimal_imap((1, 2, 3, 4), dsep)
        a = sorted(covered_arrows(m2.dag))[0]
        assert not constrained_flip_update(m2, a, dsep, mode="constrained").approximate

    @settings(max_examples=60, deadline=None)
    @given(oracle_and_perm(max_p=7))
    def test_constrained_equals_full_under_faithful_oracle(self, case):
        oracle, perm = case
        m = minimal_imap(perm, oracle)
        for a in covered_arrows(m.dag):
            full = constrained_flip_update(m, a, oracle, mode="full")
            fast = constrained_flip_update(m, a, oracle, mode="constrained")
            assert full.dag == fast.dag

    @settings(max_examples=40, deadline=None)
    @given(oracle_and_perm(max_p=6))
    def test_adjacent_flip_realises_the_same_move(self, case):
        oracle, perm = case
        g = imap_dag(perm, oracle)
        for i, j in covered_arrows(g):
            tau = adjacent_flip_permutation(g, perm, i, j)
            k = tau.index(j)
            assert tau[k + 1] == i
            swapped = tau[:k] + (i, j) + tau[k + 2:]
            assert g.is_linear_extension(swapped)
            assert imap_dag(tau, oracle) == imap_dag(flip_permutation(perm, i, j), oracle)
            # the flip reverses i -> j and can only delete other arrows
            assert imap_dag(tau, oracle).arrows <= g.with_arrow_reversed(i, j).arrows

    def test_flipped_dag_matches_reversal_under_faithfulness(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            g = random_dag(6, 0.5, rng)
            oracle = DSepOracle(g)
            perm = g.topological_order()
            for i, j in covered_arrows(g):
                tau = flip_permutation(perm, i, j)
                assert imap_dag(tau, oracle) == g.with_arrow_reversed(i, j)

    def test_minimal_imap_record(self, trap4):
        m = minimal_imap((1, 2, 3, 4), trap4)
        assert isinstance(m, MinimalImap)
        assert m.source == "relations"
        assert m.perm == (1, 2, 3, 4)
        assert all(m.dag.pa_mask(v) & bit(v) == 0 for v in range(1, 5))

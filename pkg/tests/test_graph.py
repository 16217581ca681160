from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import path_dsep, random_dag
from greedysp.graph import (Dag, GraphError, Pdag, bit, covered_arrows, d_separated, essential_graph,
                            is_covered, linear_extensions, markov_equivalence_class,
                            markov_equivalent, meek_closure, pdag_to_dag, reverse_covered, shd,
                            sorted_covered_arrows)


@st.composite
def dags(draw, min_p=2, max_p=6):
    p = draw(st.integers(min_p, max_p))
    order = draw(st.permutations(list(range(1, p + 1))))
    pairs = list(combinations(range(p), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Dag(p, [(order[a], order[b]) for (a, b), k in zip(pairs, keep) if k])


def chain3():
    return Dag(3, [(1, 2), (2, 3)])


def collider3():
    return Dag(3, [(1, 2), (3, 2)])


class TestDagBasics:
    def test_rejects_cycles_and_loops(self):
        with pytest.raises(GraphError):
            Dag(3, [(1, 2), (2, 3), (3, 1)])
        with pytest.raises(GraphError):
            Dag(2, [(1, 1)])
        with pytest.raises(GraphError):
            Dag(2, [(1, 2), (2, 1)])
        with pytest.raises(GraphError):
            Dag(2, [(1, 3)])

    def test_parent_and_child_access(self):
        g = Dag(4, [(1, 3), (2, 3), (3, 4)])
        assert g.parents(3) == {1, 2}
        assert g.children(3) == {4}
        assert g.n_arrows == 3
        assert g.sinks() == (4,)
        assert g.immoralities() == {(1, 3, 2)}

    def test_topological_order_is_linear_extension(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            g = random_dag(6, 0.5, rng)
            assert g.is_linear_extension(g.topological_order())

    def test_linear_extensions_of_empty_graph(self):
        assert len(list(linear_extensions(Dag.empty(4)))) == 24
        assert list(linear_extensions(chain3())) == [(1, 2, 3)]

    def test_edits_are_functional(self):
        g = chain3()
        h = g.with_arrow(1, 3)
        assert g.n_arrows == 2 and h.n_arrows == 3
        assert h.without_arrow(1, 3) == g
        assert g.with_arrow_reversed(1, 2).has_arrow(2, 1)

    def test_equality_and_hash(self):
        assert Dag(3, [(1, 2), (2, 3)]) == Dag(3, [(2, 3), (1, 2)])
        assert len({chain3(), Dag(3, [(2, 3), (1, 2)])}) == 1


class TestDSeparation:
    def test_chain(self):
        assert d_separated(chain3(), 1, 3, {2})
        assert not d_separated(chain3(), 1, 3, ())

    def test_collider(self):
        assert d_separated(collider3(), 1, 3, ())
        assert not d_separated(collider3(), 1, 3, {2})

    def test_descendant_of_collider_opens(self):
        g = Dag(4, [(1, 2), (3, 2), (2, 4)])
        assert not d_separated(g, 1, 3, {4})

    def test_bad_arguments(self):
        with pytest.raises(GraphError):
            d_separated(chain3(), 1, 1, ())
        with pytest.raises(GraphError):
            d_separated(chain3(), 1, 3, {1})
        with pytest.raises(GraphError):
            d_separated(chain3(), 1, 4, ())

    @settings(max_examples=60, deadline=None)
    @given(dags(max_p=6), st.data())
    def test_matches_path_enumeration(self, g, data):
        i, j = data.draw(st.sampled_from(list(combinations(range(1, g.p + 1), 2))))
        rest = [v for v in range(1, g.p + 1) if v not in (i, j)]
        s = data.draw(st.sets(st.sampled_from(rest)) if rest else st.just(set()))
        assert d_separated(g, i, j, s) == path_dsep(g, i, j, s)
        assert d_separated(g, i, j, s) == d_separated(g, j, i, s)

    def test_exhaustive_random_p7(self):
        rng = np.random.default_rng(7)
        for _ in range(4):
            g = random_dag(7, 0.35, rng)
            for i, j in combinations(range(1, 8), 2):
                rest = [v for v in range(1, 8) if v not in (i, j)]
                for k in range(len(rest) + 1):
                    for s in combinations(rest, k):
                        assert d_separated(g, i, j, s) == path_dsep(g, i, j, s)

    @settings(max_examples=40, deadline=None)
    @given(dags(max_p=7))
    def test_local_markov_property(self, g):
        for v in range(1, g.p + 1):
            nd = set(range(1, g.p + 1)) - g.descendants(v) - g.parents(v) - {v}
            for u in nd:
                assert d_separated(g, v, u, g.parents(v))


class TestCovered:
    def test_two_node_arrow_is_trivially_covered(self):
        assert covered_arrows(Dag(2, [(1, 2)])) == {(1, 2)}

    def test_known_imaps(self):
        g1423 = Dag(4, [(1, 4), (4, 2), (1, 3), (4, 3), (2, 3)])
        assert covered_arrows(g1423) == {(1, 4)}
        g4123 = Dag(4, [(4, 1), (4, 2), (4, 3), (1, 3), (2, 3)])
        assert sorted_covered_arrows(g4123) == [(4, 1), (4, 2)]

    def test_reverse_requires_cover(self):
        with pytest.raises(GraphError):
            reverse_covered(collider3(), (1, 2))

    @settings(max_examples=60, deadline=None)
    @given(dags(max_p=6))
    def test_reversal_preserves_class(self, g):
        for a in covered_arrows(g):
            h = reverse_covered(g, a)
            assert h.has_arrow(a[1], a[0])
            assert h.skeleton() == g.skeleton()
            assert h.immoralities() == g.immoralities()
            assert markov_equivalent(g, h)

    @settings(max_examples=40, deadline=None)
    @given(dags(max_p=6))
    def test_definition(self, g):
        for i, j in g.arrows:
            expected = g.pa_mask(i) == g.pa_mask(j) & ~bit(i)
            assert is_covered(g, i, j) == expected


class TestMarkovEquivalence:
    def test_small_cases(self):
        assert markov_equivalent(chain3(), Dag(3, [(3, 2), (2, 1)]))
        assert not markov_equivalent(chain3(), collider3())

    def test_matches_covered_flip_connectivity(self):
        rng = np.random.default_rng(3)
        for _ in range(15):
            p = int(rng.integers(3, 6))
            g = random_dag(p, 0.5, rng)
            cls = markov_equivalence_class(g)
            for h_arrows in (random_dag(p, 0.5, rng) for _ in range(5)):
                h = Dag(p, h_arrows.arrows)
                assert markov_equivalent(g, h) == (h in cls)
            for h in cls:
                assert markov_equivalent(g, h)
                assert essential_graph(h) == essential_graph(g)

    def test_class_sizes(self):
        assert len(markov_equivalence_class(chain3())) == 3
        assert len(markov_equivalence_class(collider3())) == 1
        assert len(markov_equivalence_class(Dag.complete((1, 2, 3)))) == 6


class TestEssentialGraph:
    def test_chain_and_collider(self):
        assert essential_graph(chain3()) == Pdag(3, [], [(1, 2), (2, 3)])
        assert essential_graph(collider3()) == Pdag(3, [(1, 2), (3, 2)], [])

    def test_meek_rule_one(self):
        # 1 -> 2 -- 3 with 1, 3 nonadjacent forces 2 -> 3
        assert meek_closure(3, [(1, 2)], [(2, 3)]) == Pdag(3, [(1, 2), (2, 3)], [])

    def test_meek_rule_two(self):
        # 1 -> 2 -> 3 and 1 -- 3 forces 1 -> 3
        out = meek_closure(3, [(1, 2), (2, 3)], [(1, 3)])
        assert out.directed == {(1, 2), (2, 3), (1, 3)}

    def test_meek_rule_three(self):
        # 1 -- 2, 1 -- 3, 1 -- 4, 2 -> 4 <- 3, 2 and 3 nonadjacent: orient 1 -> 4
        out = meek_closure(4, [(2, 4), (3, 4)], [(1, 2), (1, 3), (1, 4)])
        assert (1, 4) in out.directed

    def test_equal_iff_equivalent_exhaustive(self):
        rng = np.random.default_rng(11)
        graphs = [random_dag(4, 0.5, rng) for _ in range(40)]
        for g, h in combinations(graphs, 2):
            assert (essential_graph(g) == essential_graph(h)) == markov_equivalent(g, h)

    @settings(max_examples=40, deadline=None)
    @given(dags(max_p=6))
    def test_pdag_to_dag_returns_member(self, g):
        e = essential_graph(g)
        h = pdag_to_dag(e)
        assert markov_equivalent(g, h)


class TestShd:
    def test_zero_and_one(self):
        a = essential_graph(chain3())
        assert shd(a, a) == 0
        b = Pdag(3, [], [(1, 2), (2, 3), (1, 3)])
        assert shd(a, b) == 1

    def test_orientation_counts_once(self):
        assert shd(Pdag(2, [(1, 2)], []), Pdag(2, [(2, 1)], [])) == 1
        assert shd(Pdag(2, [(1, 2)], []), Pdag(2, [], [(1, 2)])) == 1

    def test_size_mismatch(self):
        with pytest.raises(GraphError):
            shd(Pdag(2), Pdag(3))

    @settings(max_examples=40, deadline=None)
    @given(dags(max_p=5), dags(max_p=5))
    def test_symmetric(self, g, h):
        if g.p != h.p:
            return
        a, b = essential_graph(g), essential_graph(h)
        assert shd(a, b) == shd(b, a)

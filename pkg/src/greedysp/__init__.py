"""Permutation-based causal structure learning with greedy sparsest-permutation search."""

from .chickering import apply_edge_operation, chickering_sequence, is_independence_map
from .ci import (CiOracle, CiSet, CiStatement, DSepOracle, GaussianOracle, GaussianSuffStats,
                 NumericalError, check_graphoid, fisher_z_test, partial_correlation)
from .errors import GuardError, InvariantError
from .formats import FormatError
from .graph import Dag, GraphError, Pdag, covered_arrows, essential_graph, markov_equivalent, shd
from .imap import MinimalImap, constrained_flip_update, flip_permutation, imap_dag, minimal_imap
from .learn import ALGORITHMS, LearnResult, learn
from .mindeg import classic_min_degree, neighbor_min_degree, neighbor_min_degree_outputs
from .polytope import (QuotientPolytopeGraph, dag_associahedron_graph, edge_sp,
                       even_associahedron_graph, even_perm_coordinates, even_permutohedron_graph)
from .search import (AssumptionReport, SearchConfig, SearchTrace, check_assumption,
                     highdim_greedy_sp, sp_brute_force, triangle_sp, triangle_sp_bic)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "AssumptionReport", "CiOracle", "CiSet", "CiStatement", "DSepOracle", "Dag",
    "FormatError", "GaussianOracle", "GaussianSuffStats", "GraphError", "GuardError",
    "InvariantError", "LearnResult", "MinimalImap", "NumericalError", "Pdag",
    "QuotientPolytopeGraph", "SearchConfig", "SearchTrace", "apply_edge_operation",
    "check_assumption", "check_graphoid", "chickering_sequence", "classic_min_degree",
    "constrained_flip_update", "covered_arrows", "dag_associahedron_graph", "edge_sp",
    "essential_graph", "even_associahedron_graph", "even_perm_coordinates",
    "even_permutohedron_graph", "fisher_z_test", "flip_permutation", "highdim_greedy_sp",
    "imap_dag", "is_independence_map", "learn", "markov_equivalent", "minimal_imap",
    "neighbor_min_degree", "neighbor_min_degree_outputs", "partial_correlation", "shd",
    "sp_brute_force", "triangle_sp", "triangle_sp_bic",
]

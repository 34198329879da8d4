#!/usr/bin/env python3
"""Tests for graph construction, girth, path growth rate and edge-list I/O."""

import math
import os
import pickle
import sys

import networkx as nx

import pytest

# Add the app directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from graph_core import (
    INFINITE,
    ContagionGraph,
    EnumerationBudgetExceeded,
    Finite,
    GraphError,
    GrowthConditionError,
    check_growth_condition,
    contagion_parameter,
    count_simple_paths,
    effective_girth,
    format_edge_list,
    format_edge_set,
    girth,
    is_forest,
    max_degree,
    min_girth_required,
    neighbors,
    parse_edge_list,
    parse_edge_set,
    path_growth_rate,
    path_length_profile,
    read_edge_list,
    shortest_path_distance,
    snapped_ceil,
    to_networkx,
    write_edge_list,
)


def cycle(n, p=0.5):
    return ContagionGraph(n, [(i, (i + 1) % n, p) for i in range(n)])


def path(n, p=0.5):
    return ContagionGraph(n, [(i, i + 1, p) for i in range(n - 1)])


def complete(n, p=0.5):
    return ContagionGraph(n, [(i, j, p) for i in range(n) for j in range(i + 1, n)])


# =============================================================================
# CONSTRUCTION
# =============================================================================


class TestConstruction:
    def test_edges_are_canonical(self):
        g = ContagionGraph(4, [(2, 1, 0.3), (0, 3, 0.4)])
        assert g.edges == ((0, 3), (1, 2))
        assert g.has_edge(2, 1) and g.has_edge(1, 2)
        assert g.probability(2, 1) == 0.3

    def test_mapping_form(self):
        g = ContagionGraph(3, {(0, 1): 0.2, (1, 2): 0.7})
        assert g.m == 2
        assert g.edge_items() == ((0, 1, 0.2), (1, 2, 0.7))

    @pytest.mark.parametrize("edges", [
        [(1, 1, 0.5)],              # self-loop
        [(0, 3, 0.5)],              # endpoint out of range
        [(0, 1, 1.0)],              # p not strictly inside (0, 1)
        [(0, 1, 0.0)],
        [(0, 1, 0.5), (1, 0, 0.4)], # duplicate
    ])
    def test_invalid_edges(self, edges):
        with pytest.raises(GraphError):
            ContagionGraph(3, edges)

    @pytest.mark.parametrize("n", [-1, 2.5, True])
    def test_invalid_vertex_count(self, n):
        with pytest.raises(GraphError):
            ContagionGraph(n)

    def test_probability_of_non_edge(self):
        with pytest.raises(GraphError):
            path(3).probability(0, 2)

    def test_neighbors_sorted(self):
        g = ContagionGraph(5, [(4, 2, 0.5), (2, 0, 0.5), (2, 3, 0.5)])
        assert neighbors(g, 2) == (0, 3, 4)
        assert g.degree(2) == 3
        assert max_degree(g) == 3

    def test_neighbors_out_of_range(self):
        with pytest.raises(GraphError):
            neighbors(path(3), 3)

    def test_contagion_parameter(self):
        g = ContagionGraph(3, [(0, 1, 0.3), (1, 2, 0.8)])
        alpha, beta, delta = contagion_parameter(g)
        assert alpha == 0.3
        assert beta == 0.8
        assert delta == pytest.approx(0.2)

    def test_edgeless_parameter_undefined(self):
        assert contagion_parameter(ContagionGraph(4)) == (None, None, None)

    def test_equality_and_pickle(self):
        g = cycle(6)
        g.nx_graph  # populate the cached view
        clone = pickle.loads(pickle.dumps(g))
        assert clone == g
        assert hash(clone) == hash(g)
        assert clone != cycle(6, 0.4)

    def test_to_networkx(self):
        G = to_networkx(path(4, 0.25))
        assert sorted(G.nodes) == [0, 1, 2, 3]
        assert G.number_of_edges() == 3
        assert G[1][2]["p"] == 0.25


# =============================================================================
# DISTANCES AND GIRTH
# =============================================================================


class TestGirth:
    def test_cycles(self):
        assert girth(complete(3)) == Finite(3)
        for n in (4, 5, 9, 31):
            assert girth(cycle(n)) == Finite(n)

    def test_complete_graph(self):
        assert girth(complete(5)) == Finite(3)

    def test_forest_is_infinite(self):
        assert girth(path(6)) == INFINITE
        assert girth(ContagionGraph(3)).is_infinite

    def test_shortest_of_two_components(self):
        edges = [(i, (i + 1) % 6, 0.5) for i in range(6)]
        edges += [(6 + i, 6 + (i + 1) % 4, 0.5) for i in range(4)]
        assert girth(ContagionGraph(10, edges)) == Finite(4)

    def test_effective_girth(self):
        assert effective_girth(Finite(5)) == 4
        assert effective_girth(Finite(6)) == 6
        assert effective_girth(INFINITE) == math.inf
        assert Finite(31).satisfies(30)
        assert not Finite(31).satisfies(31)
        assert INFINITE.satisfies(10 ** 6)

    def test_finite_below_three_rejected(self):
        with pytest.raises(GraphError):
            Finite(2)

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_minimum_cycle_basis(self, seed):
        n = 8 + seed % 13
        nxg = nx.gnp_random_graph(n, 0.2, seed=seed)
        g = ContagionGraph(n, [(u, v, 0.5) for u, v in nxg.edges()])
        basis = nx.minimum_cycle_basis(nxg)
        expected = Finite(min(len(c) for c in basis)) if basis else INFINITE
        assert girth(g) == expected

    def test_is_forest(self):
        assert is_forest(path(5))
        assert is_forest(ContagionGraph(0))
        assert not is_forest(cycle(5))

    def test_shortest_path_distance(self):
        g = ContagionGraph(5, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5)])
        assert shortest_path_distance(g, 0, 3) == 3
        assert shortest_path_distance(g, 2, 2) == 0
        assert shortest_path_distance(g, 0, 4) is None

    def test_distance_out_of_range(self):
        with pytest.raises(GraphError):
            shortest_path_distance(path(3), 0, 7)


# =============================================================================
# SIMPLE PATHS AND GROWTH RATE
# =============================================================================


class TestSimplePaths:
    def test_cycle_counts(self):
        g = cycle(6)
        assert count_simple_paths(g, 0, 3, 3) == 2
        assert count_simple_paths(g, 0, 1, 1) == 1
        assert count_simple_paths(g, 0, 1, 5) == 1
        assert count_simple_paths(g, 0, 1, 3) == 0

    def test_complete_graph_counts(self):
        g = complete(4)
        assert count_simple_paths(g, 0, 1, 2) == 2
        assert count_simple_paths(g, 0, 1, 3) == 2

    def test_unreachable(self):
        assert count_simple_paths(ContagionGraph(3, [(0, 1, 0.5)]), 0, 2, 1) == 0

    def test_invalid_arguments(self):
        with pytest.raises(GraphError):
            count_simple_paths(cycle(4), 1, 1, 2)
        with pytest.raises(GraphError):
            count_simple_paths(cycle(4), 0, 1, 0)

    def test_budget(self):
        with pytest.raises(EnumerationBudgetExceeded):
            count_simple_paths(complete(5), 0, 1, 4, budget=1)
        with pytest.raises(EnumerationBudgetExceeded):
            path_growth_rate(complete(6), budget=10)

    def test_profile(self):
        profile = path_length_profile(cycle(6))
        assert profile == [0, 1, 1, 2, 1, 1]

    @pytest.mark.parametrize("seed", range(6))
    def test_symmetric_and_matches_networkx(self, seed):
        nxg = nx.gnp_random_graph(9, 0.35, seed=seed)
        g = ContagionGraph(9, [(u, v, 0.5) for u, v in nxg.edges()])
        for u, v in ((0, 8), (1, 5), (2, 7)):
            lengths = [len(p) - 1 for p in nx.all_simple_paths(nxg, u, v)]
            for d in range(1, 9):
                assert count_simple_paths(g, u, v, d) == count_simple_paths(g, v, u, d)
                assert count_simple_paths(g, u, v, d) == lengths.count(d)


class TestPathGrowthRate:
    def test_even_cycle(self):
        rate = path_growth_rate(cycle(6))
        assert rate.rho == pytest.approx(2 ** (1 / 3), abs=1e-12)
        assert (rate.witness_d, rate.witness_count) == (3, 2)

    def test_odd_cycle(self):
        rate = path_growth_rate(cycle(5))
        assert rate.rho == 1.0
        assert rate.witness_d == 1

    def test_forest(self):
        rate = path_growth_rate(path(7))
        assert (rate.rho, rate.witness_d, rate.witness_count) == (1.0, 1, 1)

    def test_edgeless(self):
        rate = path_growth_rate(ContagionGraph(3))
        assert (rate.rho, rate.witness_d, rate.witness_count) == (1.0, 0, 0)

    def test_complete_graph(self):
        rate = path_growth_rate(complete(4))
        assert rate.rho == pytest.approx(math.sqrt(2))
        assert rate.witness_d == 2

    @pytest.mark.parametrize("g", [cycle(6), cycle(7), complete(4), complete(5), path(5)],
                             ids=["c6", "c7", "k4", "k5", "path5"])
    def test_witness_reproduces_rho(self, g):
        rate = path_growth_rate(g)
        assert rate.witness_count ** (1 / rate.witness_d) == pytest.approx(rate.rho)


# =============================================================================
# GIRTH REQUIREMENT
# =============================================================================


class TestMinGirthRequired:
    @pytest.mark.parametrize("delta, rho, expected", [
        (0.5, 1.25, 16),
        (0.5, 1.5, 30),
        (0.5, 1.0, 10),
        (0.45, 1.0, 14),
        (0.5, 2 ** (2 / 31), 12),
    ])
    def test_worked_values(self, delta, rho, expected):
        assert min_girth_required(delta, rho) == expected

    def test_result_is_even(self):
        for delta in (0.1, 0.25, 0.4, 0.5):
            assert min_girth_required(delta, 1.0) % 2 == 0

    @pytest.mark.parametrize("delta, rho", [
        (0.5, 0.9),     # rho below 1
        (0.5, 2.0),     # rho(1 - delta) = 1
        (0.1, 2 ** (1 / 3)),
        (0.0, 1.0),
    ])
    def test_growth_condition_fails(self, delta, rho):
        with pytest.raises(GrowthConditionError):
            min_girth_required(delta, rho)


    def test_monotone_in_rho(self):
        rhos = [1.0, 1.05, 1.1, 1.2, 1.3, 1.5, 1.7, 1.9]
        required = [min_girth_required(0.5, rho) for rho in rhos]
        assert required == sorted(required)

    def test_monotone_in_delta(self):
        deltas = [0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6]
        required = [min_girth_required(delta, 1.2) for delta in deltas]
        assert required == sorted(required, reverse=True)

    def test_check_growth_condition_value(self):
        assert check_growth_condition(0.5, 1.5) == pytest.approx(0.75)

    def test_snapped_ceil(self):
        assert snapped_ceil(5.0000000001) == 5
        assert snapped_ceil(4.9999999999) == 5
        assert snapped_ceil(5.1) == 6
        assert snapped_ceil(4.0) == 4


# =============================================================================
# EDGE-LIST I/O
# =============================================================================


class TestEdgeList:
    def test_format_and_parse(self):
        g = ContagionGraph(4, [(0, 1, 0.1), (2, 3, 0.35)])
        text = format_edge_list(g)
        assert text == "4 2\n0 1 0.1\n2 3 0.35\n"
        assert parse_edge_list(text) == g

    def test_comments_and_blank_lines(self):
        text = "# hidden graph\n3 1\n\n0 2 0.5\n"
        g = parse_edge_list(text)
        assert g.n == 3 and g.edges == ((0, 2),)

    @pytest.mark.parametrize("text", [
        "",
        "3\n0 1 0.5\n",
        "3 2\n0 1 0.5\n",
        "3 1\n0 1\n",
        "3 1\n0 x 0.5\n",
        "3 1\n0 1 1.5\n",
    ])
    def test_malformed(self, text):
        with pytest.raises(GraphError):
            parse_edge_list(text)

    def test_edge_set(self):
        text = format_edge_set(3, [(2, 1), (0, 1)])
        assert text == "3 2\n0 1\n1 2\n"
        assert parse_edge_set(text) == (3, frozenset({(0, 1), (1, 2)}))

    def test_file_round_trip(self, tmp_path):
        g = cycle(5, 0.45)
        target = tmp_path / "c5.txt"
        write_edge_list(g, target)
        assert read_edge_list(target) == g
        assert target.read_bytes() == format_edge_list(g).encode("utf-8")


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, "-v"]))

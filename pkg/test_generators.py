#!/usr/bin/env python3
"""Tests for the graph family generators and large-girth certification."""

import os
import sys

import pytest

# Add the app directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from generators import (
    GeneratorError,
    GraphFamilySpec,
    canonical_bytes,
    certify_for_algorithm1,
    generate,
)
from graph_core import (
    ContagionGraph,
    Finite,
    girth,
    is_forest,
    max_degree,
    path_growth_rate,
    write_edge_list,
)


def make(family, **kwargs):
    return generate(GraphFamilySpec(family=family, **kwargs))


# =============================================================================
# FAMILIES
# =============================================================================


class TestFamilies:
    def test_cycle(self):
        g = make("cycle", n=5)
        assert (g.n, g.m) == (5, 5)
        assert girth(g) == Finite(5)

    def test_star_cycle_shape(self):
        g = make("star_cycle_H", n=9)
        assert (g.n, g.m) == (17, 17)
        assert max_degree(g) == 10
        assert g.degree(0) == 10

    @pytest.mark.parametrize("n", [5, 7, 9, 11])
    def test_star_cycle_odd(self, n):
        g = make("star_cycle_H", n=n)
        assert girth(g) == Finite(n)
        assert path_growth_rate(g).rho == 1.0

    @pytest.mark.parametrize("n", [6, 8, 10])
    def test_star_cycle_even(self, n):
        g = make("star_cycle_H", n=n)
        rate = path_growth_rate(g)
        assert girth(g) == Finite(n)
        assert abs(rate.rho - 2 ** (2 / n)) < 1e-12
        assert rate.witness_d == n // 2

    def test_theta(self):
        g = make("generalized_theta", lengths=(5, 7))
        assert (g.n, g.m) == (12, 12)
        assert girth(g) == Finite(12)
        rate = path_growth_rate(g)
        assert abs(rate.rho - 2 ** (1 / 6)) < 1e-12
        assert (rate.witness_d, rate.witness_count) == (6, 2)

    def test_theta_three_paths(self):
        g = make("generalized_theta", lengths=(3, 3, 4))
        assert g.degree(0) == 3 and g.degree(1) == 3
        assert girth(g) == Finite(6)

    def test_tree(self):
        g = make("tree", n=30, seed=4)
        assert (g.n, g.m) == (30, 29)
        assert is_forest(g)

    @pytest.mark.parametrize("n", [1, 2])
    def test_tiny_trees(self, n):
        g = make("tree", n=n)
        assert g.m == n - 1

    def test_regular_pairing(self):
        g = make("bounded_degree_random", n=20, max_deg=3, seed=9)
        assert g.m == 30
        assert all(g.degree(v) == 3 for v in range(20))

    def test_irregular_pairing(self):
        g = make("bounded_degree_random", n=15, max_deg=4, regular=False, seed=2)
        assert max_degree(g) <= 4

    def test_erdos_renyi(self):
        a = make("erdos_renyi", n=12, edge_prob=0.3, seed=1)
        b = make("erdos_renyi", n=12, edge_prob=0.3, seed=1)
        assert a == b
        assert make("erdos_renyi", n=6, edge_prob=1.0).m == 15

    def test_fixtures(self):
        assert make("path", n=4).edges == ((0, 1), (1, 2), (2, 3))
        assert make("star", n=4).edges == ((0, 1), (0, 2), (0, 3))
        assert make("complete", n=4).m == 6

    def test_from_file(self, tmp_path):
        original = ContagionGraph(3, [(0, 2, 0.25)])
        target = tmp_path / "g.txt"
        write_edge_list(original, target)
        assert make("from_file", path=str(target)) == original


class TestProbabilities:
    def test_constant(self):
        g = make("cycle", n=6, p_lo=0.4, p_hi=0.4)
        assert {p for _, _, p in g.edge_items()} == {0.4}

    def test_range(self):
        g = make("cycle", n=31, p_lo=0.45, p_hi=0.55, seed=3)
        probs = [p for _, _, p in g.edge_items()]
        assert all(0.45 <= p <= 0.55 for p in probs)
        assert len(set(probs)) > 1


class TestDeterminism:
    def test_same_seed_same_bytes(self):
        spec = GraphFamilySpec(family="tree", n=25, p_lo=0.3, p_hi=0.6, seed=17)
        assert canonical_bytes(generate(spec)) == canonical_bytes(generate(spec))

    def test_seed_changes_graph(self):
        spec = GraphFamilySpec(family="tree", n=25, seed=17)
        assert generate(spec) != generate(spec.with_seed(18))


class TestSpec:
    @pytest.mark.parametrize("kwargs", [
        {"family": "lattice", "n": 5},
        {"family": "cycle", "n": 2},
        {"family": "tree"},
        {"family": "generalized_theta", "lengths": (1, 4)},
        {"family": "generalized_theta"},
        {"family": "bounded_degree_random", "n": 5, "max_deg": 3},   # n * D odd
        {"family": "bounded_degree_random", "n": 4, "max_deg": 4},
        {"family": "erdos_renyi", "n": 5},
        {"family": "cycle", "n": 5, "p_lo": 0.6, "p_hi": 0.4},
        {"family": "cycle", "n": 5, "p_lo": 0.0, "p_hi": 0.4},
        {"family": "from_file"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(GeneratorError):
            generate(GraphFamilySpec(**kwargs))

    def test_from_dict(self):
        spec = GraphFamilySpec.from_dict({"family": "generalized_theta", "lengths": [5, 7], "fixed": True})
        assert spec.lengths == (5, 7)
        assert spec.describe() == "generalized_theta(5,7)"
        assert GraphFamilySpec.from_dict(spec.to_dict()) == spec

    def test_from_dict_unknown_key(self):
        with pytest.raises(GeneratorError):
            GraphFamilySpec.from_dict({"family": "cycle", "n": 5, "colour": "red"})


# =============================================================================
# CERTIFICATION
# =============================================================================


class TestCertification:
    def test_long_cycle_passes(self):
        report = certify_for_algorithm1(make("cycle", n=31))
        assert report.passed
        assert report.required_girth == 10
        assert report.effective_girth == 30

    def test_triangle_fails_girth(self):
        report = certify_for_algorithm1(make("complete", n=3))
        assert report.growth_ok
        assert not report.girth_ok
        assert not report.passed

    def test_growth_condition_failure(self):
        report = certify_for_algorithm1(make("cycle", n=6, p_lo=0.1, p_hi=0.1))
        assert not report.growth_ok
        assert report.required_girth is None
        assert not report.passed

    def test_tree_passes(self):
        report = certify_for_algorithm1(make("tree", n=12, seed=5))
        assert report.passed
        assert report.girth.is_infinite
        assert report.to_dict()["effective_girth"] == "inf"

    def test_edgeless_passes(self):
        assert certify_for_algorithm1(make("path", n=1)).passed

    def test_explicit_delta(self):
        # at delta = 0.2 the requirement grows past the 31-cycle's g' = 30
        report = certify_for_algorithm1(make("cycle", n=31), delta=0.2)
        assert report.required_girth > 30
        assert not report.passed


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, "-v"]))

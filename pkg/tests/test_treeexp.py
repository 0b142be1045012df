import math
from itertools import product

import numpy as np
import pytest

from fermigap.lattice import time_distance
from fermigap.treeexp import (
    DirectedTree,
    binomial_resummation,
    cayley_count_check,
    combinatorics_audit,
    degree_product_bound_check,
    degree_sequences,
    enumerate_directed,
    enumerate_trees,
    incidence,
    path_forest_decompose,
    prufer_decode,
    prufer_encode,
    series_bound,
    series_sum,
    tree_count_formula,
)


class TestEnumeration:
    @pytest.mark.parametrize("r,count", [(2, 1), (3, 3), (4, 16), (5, 125)])
    def test_cayley_totals(self, r, count):
        assert sum(1 for _ in enumerate_trees(r)) == count

    def test_trees_are_distinct(self):
        seen = set(frozenset(t) for t in enumerate_trees(6))
        assert len(seen) == 6**4

    @pytest.mark.parametrize("r,count", [(2, 2), (3, 12), (4, 128)])
    def test_directed_totals(self, r, count):
        assert sum(1 for _ in enumerate_directed(r)) == count
        assert count == 2 ** (r - 1) * r ** (r - 2)

    def test_emitted_directed_trees_validate(self):
        for t in enumerate_directed(4):
            t.validate()

    def test_guard(self):
        with pytest.raises(ValueError):
            next(enumerate_trees(10))

    def test_prufer_roundtrip_exhaustive(self):
        for r in range(3, 8):
            for seq in product(range(1, r + 1), repeat=r - 2):
                assert prufer_encode(prufer_decode(seq, r)) == seq


class TestIncidence:
    def test_directed_path(self):
        t = DirectedTree(r=3, edges=((1, 2), (2, 3)))
        theta, theta_bar, d = incidence(t)
        np.testing.assert_array_equal(theta, [0, 1, 1])
        np.testing.assert_array_equal(theta_bar, [1, 1, 0])
        np.testing.assert_array_equal(d, [1, 2, 1])

    def test_out_star(self):
        t = DirectedTree(r=4, edges=((1, 2), (1, 3), (1, 4)))
        theta, theta_bar, d = incidence(t)
        assert theta_bar[0] == 3 and theta[0] == 0

    def test_tree_relation_on_random_tree(self):
        rng = np.random.default_rng(3)
        seq = tuple(rng.integers(1, 8, size=5))
        edges = prufer_decode(seq, 7)
        t = DirectedTree(r=7, edges=edges)
        _, _, d = incidence(t)
        assert d.sum() == 12  # 2 (r - 1)

    def test_validate_rejects_double_orientation(self):
        with pytest.raises(ValueError):
            DirectedTree(r=3, edges=((1, 2), (2, 1))).validate()


class TestCayley:
    def test_path_degree_sequence(self):
        out = cayley_count_check(3, (1, 2, 1))
        assert out["enumerated"] == out["formula"] == 1

    def test_star_is_unique(self):
        out = cayley_count_check(4, (3, 1, 1, 1))
        assert out["enumerated"] == out["formula"] == 1

    def test_all_degree_sequences_r5(self):
        for d in degree_sequences(5):
            out = cayley_count_check(5, d)
            assert out["enumerated"] == out["formula"]
            assert out["factorial_identity_lhs"] == pytest.approx(
                out["factorial_identity_rhs"], rel=1e-14)

    def test_degree_sequences_partition_all_trees(self):
        total = sum(tree_count_formula(6, d) for d in degree_sequences(6))
        assert total == 6**4


class TestDecomposition:
    def test_single_edge(self):
        t = DirectedTree(r=2, edges=((1, 2),))
        path, hanging = path_forest_decompose(t)
        assert path == [1, 2]
        assert all(len(h) == 0 for h in hanging)

    def test_star_at_first_path_vertex(self):
        # r = 5, path endpoints are 4 and 5; star centered at 4
        t = DirectedTree(r=5, edges=((4, 1), (4, 2), (4, 3), (4, 5)))
        path, hanging = path_forest_decompose(t)
        assert path == [4, 5]
        assert hanging[0] == {1, 2, 3} and hanging[1] == set()

    def test_counting_identity_exhaustive_r6(self):
        for edges in enumerate_trees(6):
            t = DirectedTree(r=6, edges=edges)
            path, hanging = path_forest_decompose(t)
            assert sum(len(h) for h in hanging) + len(path) == 6
            assert path[0] == 5 and path[-1] == 6

    def test_time_triangle_inequality_along_path(self):
        beta = 3.0
        rng = np.random.default_rng(9)
        trees = [t for k, t in enumerate(enumerate_directed(6)) if k % 97 == 0]
        for t in trees:
            path, _ = path_forest_decompose(t)
            times = rng.uniform(0.0, beta, size=7)  # 1-based vertices
            times[6] = 0.0  # vertex r carries time 0
            tau = times[5]  # vertex r-1 carries the external time
            lhs = time_distance(tau, 0.0, beta)
            rhs = sum(time_distance(times[a], times[b], beta)
                      for a, b in zip(path[:-1], path[1:]))
            assert lhs <= rhs + 1e-12


class TestSeriesAlgebra:
    def test_binomial_resummation_exact(self):
        for m in range(13):
            total, closed = binomial_resummation(m, 2)
            assert total == closed == 3**m

    def test_degree_product_bound(self):
        for r in range(2, 9):
            best, bound = degree_product_bound_check(r)
            assert best <= bound

    def test_zero_interaction_orders(self):
        assert series_bound(1, 0.7, 0.0, 5.0, 3.0) == 0.0
        assert series_bound(0, 0.7, 0.0, 5.0, 3.0) == pytest.approx(2 * 0.7 * 15.0)

    def test_geometric_sum_matches_closed_prefactors(self):
        alpha, nv, na, nb = 0.31, 0.9, 7.0, 2.0
        x = alpha * nv
        direct = sum(2 * alpha * x**p for p in range(4000)) * na * nb
        assert series_sum(alpha, nv, na, nb) == pytest.approx(direct, rel=1e-14)
        assert series_sum(alpha, nv, na, nb) == pytest.approx(
            na * nb * 2 * alpha / (1 - x), rel=1e-14)
        assert series_sum(alpha, nv, na, nb, from_p=1) == pytest.approx(
            na * nb * 2 * alpha**2 * nv / (1 - x), rel=1e-14)

    def test_series_hypothesis_guard(self):
        with pytest.raises(ValueError):
            series_sum(1.0, 1.0, 1.0, 1.0)


def test_audit_report_is_consistent():
    report = combinatorics_audit(r_cayley=5, r_directed=4, r_products=6, m_binomial=6)
    assert all(row["total"] == row["cayley_total"] and row["per_degree_exact"]
               for row in report["cayley"])
    assert all(row["count"] == row["expected"] for row in report["directed_counts"])
    assert all(row["sum"] == row["closed"] for row in report["binomial"])
    assert all(row["max_product"] <= row["bound"] for row in report["degree_products"])

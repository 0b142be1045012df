import numpy as np
import pytest

from fermigap.fock import (
    FockBasis,
    car_ops,
    density_density_diagonal,
    monomial_matrix,
    normal_order_extract,
    parity_operator,
    second_quantize,
    second_quantize_quadratic,
    second_quantize_quadratic_sparse,
)
from fermigap.lattice import build_torus
from fermigap.normalorder import (
    NormalOrderedOperator,
    density_density,
    quadratic,
    random_operator,
)


def subset_sums(eigs):
    """Independent oracle: all 2^n sums of one-body eigenvalues."""
    sums = [0.0]
    for e in eigs:
        sums = sums + [s + e for s in sums]
    return np.sort(np.array(sums))


class TestCAR:
    def test_single_site_number_operator(self):
        basis = FockBasis(1)
        cp, cm = car_ops(basis)
        np.testing.assert_array_equal(cp[0] @ cm[0], np.diag([0.0, 1.0]))

    def test_anticommutators_exact_on_four_sites(self):
        basis = FockBasis(4)
        cp, cm = car_ops(basis)
        eye = np.eye(basis.dim)
        zero = np.zeros_like(eye)
        for x in range(4):
            for y in range(4):
                # {c+_x, c-_y} = delta_{xy}, {c+_x, c+_y} = {c-_x, c-_y} = 0, exactly
                acpm = cp[x] @ cm[y] + cm[y] @ cp[x]
                np.testing.assert_array_equal(acpm, eye if x == y else zero)
                np.testing.assert_array_equal(cp[x] @ cp[y] + cp[y] @ cp[x], zero)
                np.testing.assert_array_equal(cm[x] @ cm[y] + cm[y] @ cm[x], zero)

    def test_nilpotency(self):
        basis = FockBasis(3)
        cp, _ = car_ops(basis)
        for c in cp:
            np.testing.assert_array_equal(c @ c, np.zeros_like(c))

    def test_entries_are_integers(self):
        basis = FockBasis(5)
        cp, cm = car_ops(basis)
        for c in cp + cm:
            assert np.array_equal(c, np.round(c.real))


class TestQuadratic:
    def test_single_site_diagonal(self):
        basis = FockBasis(1)
        H = second_quantize_quadratic(np.array([[0.7]]), basis)
        np.testing.assert_array_equal(H, np.diag([0.0, 0.7]))

    def test_two_site_subset_sums(self):
        basis = FockBasis(2)
        h = np.array([[0.0, 1.0], [1.0, 0.0]])  # eigenvalues -1, +1
        H = second_quantize_quadratic(h, basis)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(H)),
                                   [-1.0, 0.0, 0.0, 1.0], atol=1e-12)

    def test_random_hermitian_subset_sums(self):
        rng = np.random.default_rng(42)
        n = 6
        raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (raw + raw.conj().T) / 2
        basis = FockBasis(n)
        H = second_quantize_quadratic(h, basis)
        many = np.sort(np.linalg.eigvalsh(H))
        np.testing.assert_allclose(many, subset_sums(np.linalg.eigvalsh(h)), atol=1e-9)

    def test_sparse_path_matches_dense(self):
        rng = np.random.default_rng(1)
        n = 5
        raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (raw + raw.conj().T) / 2
        basis = FockBasis(n)
        dense = second_quantize_quadratic(h, basis)
        np.testing.assert_allclose(second_quantize_quadratic_sparse(h, basis).toarray(),
                                   dense, atol=1e-14)

    def test_density_density_diagonal_matches_operator(self):
        n = 4
        g = build_torus(n)
        v = np.zeros((n, n))
        for x in range(n):
            v[x, (x + 1) % n] = v[(x + 1) % n, x] = 1.0
        basis = FockBasis(n)
        op = density_density(g, v, 0.4)
        full = second_quantize(op, basis)
        np.testing.assert_allclose(np.diag(full).real, density_density_diagonal(basis, v, 0.4),
                                   atol=1e-12)
        np.testing.assert_allclose(full, np.diag(np.diag(full)), atol=1e-12)


class TestSecondQuantize:
    def test_grade_11_matches_quadratic(self):
        rng = np.random.default_rng(3)
        n = 4
        h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        basis = FockBasis(n)
        op = quadratic(build_torus(n), h)
        np.testing.assert_array_equal(second_quantize(op, basis),
                                      second_quantize_quadratic(h, basis))

    def test_zero_coefficients(self):
        basis = FockBasis(3)
        op = NormalOrderedOperator(graph=None, coeffs={}, n_sites=3)
        np.testing.assert_array_equal(second_quantize(op, basis), np.zeros((8, 8)))

    def test_linearity(self):
        rng = np.random.default_rng(9)
        g = build_torus(3)
        basis = FockBasis(3)
        a = random_operator(g, [(1, 1), (2, 2)], rng)
        b = random_operator(g, [(1, 1), (0, 2)], rng)
        lhs = second_quantize(a + 0.5j * b, basis)
        rhs = second_quantize(a, basis) + 0.5j * second_quantize(b, basis)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)


class TestExtract:
    def test_identity_matrix(self):
        basis = FockBasis(3)
        op = normal_order_extract(np.eye(8), basis)
        assert op.coeffs[(0, 0)] == 1.0
        for grade, a in op.coeffs.items():
            if grade != (0, 0):
                np.testing.assert_array_equal(a, np.zeros_like(a))

    def test_roundtrip_random_even_operator(self):
        rng = np.random.default_rng(17)
        g = build_torus(4)
        basis = FockBasis(4)
        op = random_operator(g, [(0, 0), (1, 1), (2, 2), (2, 0), (0, 2)], rng)
        A = second_quantize(op, basis)
        back = normal_order_extract(A, basis, grade_cap=2)
        for grade in op.coeffs:
            if grade == (0, 0):
                assert back.coeffs[(0, 0)] == pytest.approx(op.coeffs[(0, 0)])
            else:
                np.testing.assert_allclose(back.grade(*grade), op.grade(*grade), atol=1e-12)
        np.testing.assert_allclose(second_quantize(back, basis), A, atol=1e-11)

    def test_roundtrip_odd_grades_too(self):
        rng = np.random.default_rng(23)
        g = build_torus(3)
        basis = FockBasis(3)
        op = random_operator(g, [(1, 0), (0, 1), (2, 1)], rng)
        A = second_quantize(op, basis)
        back = normal_order_extract(A, basis)
        np.testing.assert_allclose(second_quantize(back, basis), A, atol=1e-11)

    def test_density_product_grade22_weight(self):
        # n1 n2 on two sites: four signed entries of unit magnitude
        basis = FockBasis(2)
        n1n2 = monomial_matrix(basis, (0,), (0,)) @ monomial_matrix(basis, (1,), (1,))
        op = normal_order_extract(n1n2, basis)
        a = op.coeffs[(2, 2)]
        assert np.abs(a).sum() == pytest.approx(4.0)
        assert np.abs(a).max() == pytest.approx(1.0)


class TestParity:
    def test_even_iff_commutes_with_parity(self):
        rng = np.random.default_rng(31)
        g = build_torus(3)
        basis = FockBasis(3)
        P = parity_operator(basis)
        even = random_operator(g, [(1, 1), (2, 0)], rng)
        odd = random_operator(g, [(1, 0), (2, 1)], rng)
        Ae = second_quantize(even, basis)
        Ao = second_quantize(odd, basis)
        assert np.abs(Ae @ P - P @ Ae).max() < 1e-12
        assert np.abs(Ao @ P + P @ Ao).max() < 1e-12  # odd anticommutes


def test_basis_guard():
    with pytest.raises(ValueError):
        FockBasis(17)

import numpy as np
import pytest
import scipy.linalg as sla

from fermigap.covariance import (
    CovarianceKernel,
    beta_saturation,
    det_bound_sample,
    det_bound_scan,
    fermi,
    psd_unit_diagonal,
    scalar_cov,
)
from fermigap.lattice import single_site
from fermigap.models import staggered_chain
from fermigap.onebody import OneBodyOperator, spectrum


def single_site_operator(E):
    return OneBodyOperator(graph=single_site(), kernel=np.array([[E]], dtype=complex))


def single_site_alpha(delta, rho, beta):
    """Closed form for the decay constant of one gapped level (|E| = delta > rho >= 0).

    2 f(-delta) [ int_0^{b/2} e^{(rho-delta)s} ds + e^{rho b} int_{b/2}^b e^{-(rho+delta)s} ds ].
    """
    f = 1.0 / (1.0 + np.exp(-beta * delta))

    def expint(a, lo, hi):  # int_lo^hi e^{a s} ds
        return (np.exp(a * hi) - np.exp(a * lo)) / a

    first = expint(rho - delta, 0.0, beta / 2.0)
    second = np.exp(rho * beta) * expint(-(rho + delta), beta / 2.0, beta)
    return 2.0 * f * (first + second)


class TestScalarCov:
    def test_zero_time_zero_energy(self):
        assert scalar_cov(0.0, 0.0, 4.0) == pytest.approx(0.5)

    def test_negative_branch_formula(self):
        beta, tau, E = 2.0, -0.3, 1.7
        expected = fermi(E, beta) * np.exp(-tau * E)
        assert scalar_cov(tau, E, beta) == pytest.approx(expected, rel=1e-14)

    def test_positive_branch_formula(self):
        beta, tau, E = 2.0, 0.4, -0.9
        expected = -fermi(-E, beta) * np.exp(-tau * E)
        assert scalar_cov(tau, E, beta) == pytest.approx(expected, rel=1e-14)

    def test_kms_antiperiodicity_on_grid(self):
        beta = 1.7
        taus = np.linspace(1e-3, beta, 41)
        Es = np.array([-3.0, -0.4, 0.0, 0.9, 2.5])
        lhs = scalar_cov(taus[:, None] - beta, Es[None, :], beta)
        rhs = -scalar_cov(taus[:, None], Es[None, :], beta)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-300)

    def test_bounded_by_one_even_at_huge_beta_E(self):
        beta = 1.0
        Es = np.array([-700.0, -300.0, -5.0, 0.0, 5.0, 300.0, 700.0])
        taus = np.linspace(-beta + 1e-9, beta, 101)
        vals = scalar_cov(taus[:, None], Es[None, :], beta)
        assert np.all(np.isfinite(vals))
        assert np.abs(vals).max() <= 1.0 + 1e-15


class TestKernel:
    def test_single_site_equal_times(self):
        beta, delta = 3.0, 0.8
        cov = CovarianceKernel(spectrum(single_site_operator(delta)), beta)
        assert cov.kernel(0.5, 0, 0.5, 0) == pytest.approx(fermi(delta, beta))

    def test_spectral_sum_matches_matrix_function(self):
        # dual route: spectral synthesis vs dense expm of the one-body kernel
        rng = np.random.default_rng(8)
        n, beta = 5, 1.3
        raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (raw + raw.conj().T) / 2
        from fermigap.lattice import build_torus

        op = OneBodyOperator(graph=build_torus(n), kernel=h)
        cov = CovarianceKernel(spectrum(op), beta)
        eye = np.eye(n)
        for s in (-0.9, -0.2, 0.0, 0.4, 1.1):
            if s <= 0:
                direct = sla.inv(eye + sla.expm(beta * h)) @ sla.expm(-s * h)
            else:
                direct = -sla.inv(eye + sla.expm(-beta * h)) @ sla.expm(-s * h)
            np.testing.assert_allclose(cov.matrix(s), direct, atol=1e-12)

    def test_decoupled_sites_have_no_cross_kernel(self):
        from fermigap.lattice import build_torus

        op = OneBodyOperator(graph=build_torus(3), kernel=np.diag([0.3, -0.7, 1.1]).astype(complex))
        cov = CovarianceKernel(spectrum(op), 2.0)
        m = cov.matrix(0.6)
        np.testing.assert_allclose(m, np.diag(np.diag(m)), atol=1e-15)

    def test_kernel_rejects_out_of_branch_times(self):
        cov = CovarianceKernel(spectrum(single_site_operator(1.0)), 1.0)
        with pytest.raises(ValueError):
            cov.kernel(1.2, 0, 0.0, 0)


class TestAlpha:
    def test_single_site_closed_form_rho_zero(self):
        beta, delta = 30.0, 0.7
        cov = CovarianceKernel(spectrum(single_site_operator(delta)), beta)
        rep = cov.alpha_rho(0.0, rtol=1e-9)
        assert rep.converged
        assert rep.alpha == pytest.approx(single_site_alpha(delta, 0.0, beta), rel=1e-8)
        assert rep.alpha == pytest.approx(rep.alpha_plus) and rep.alpha >= rep.alpha_minus

    def test_single_site_closed_form_rho_positive(self):
        beta, delta, rho = 14.0, 1.1, 0.6
        cov = CovarianceKernel(spectrum(single_site_operator(delta)), beta)
        rep = cov.alpha_rho(rho, rtol=1e-9)
        assert rep.alpha == pytest.approx(single_site_alpha(delta, rho, beta), rel=1e-8)

    def test_monotone_in_rho(self):
        op = staggered_chain(6, t=1.0, delta=2.0)
        cov = CovarianceKernel(spectrum(op), 8.0)
        alphas = [cov.alpha_rho(r).alpha for r in (0.0, 0.5, 1.0, 1.5)]
        assert all(a < b for a, b in zip(alphas, alphas[1:]))

    def test_saturation_below_gap(self):
        op = staggered_chain(6, t=1.0, delta=2.0)
        spec = spectrum(op)
        gap = np.abs(spec.eigenvalues).min()
        beta = 20.0 / gap
        _, _, rel, saturated = beta_saturation(spec, 0.5 * gap, beta)
        assert saturated and rel < 1e-2

    def test_divergence_detector_above_gap(self):
        op = staggered_chain(6, t=1.0, delta=2.0)
        spec = spectrum(op)
        gap = np.abs(spec.eigenvalues).min()
        _, _, rel, saturated = beta_saturation(spec, 1.2 * gap, 4.0 / gap)
        assert not saturated and rel > 0.1

    def test_tau_grid_fallback_matches_stationary_value(self):
        op = staggered_chain(4, t=0.7, delta=1.5)
        cov = CovarianceKernel(spectrum(op), 5.0)
        a0 = cov.alpha_rho(0.4, rtol=1e-8)
        ag = cov.alpha_rho(0.4, rtol=1e-8, tau_grid=np.linspace(0.0, 5.0, 5, endpoint=False))
        assert ag.alpha == pytest.approx(a0.alpha, rel=1e-7)


class TestDetBound:
    def test_single_sample_balanced(self):
        beta = 4.0
        cov = CovarianceKernel(spectrum(staggered_chain(6, t=1.0, delta=1.0)), beta)
        rng = np.random.default_rng(0)
        M = psd_unit_diagonal(rng, 3)
        absdet, bound, ok = det_bound_sample(
            cov, 2, 2, M, vertex_times=[0.1, 1.7, 3.2],
            q_bar=[0, 1], q_low=[1, 2], y_bar=[0, 3], y_low=[2, 5])
        assert ok and absdet <= bound == 16.0

    def test_size_one_below_fermi_bound(self):
        cov = CovarianceKernel(spectrum(single_site_operator(0.9)), 2.0)
        absdet, bound, ok = det_bound_sample(
            cov, 1, 1, np.eye(1), vertex_times=[0.4], q_bar=[0], q_low=[0],
            y_bar=[0], y_low=[0])
        assert ok and absdet <= 1.0 and bound == 4.0

    def test_unbalanced_determinant_is_zero(self):
        cov = CovarianceKernel(spectrum(single_site_operator(0.9)), 2.0)
        absdet, bound, ok = det_bound_sample(
            cov, 2, 1, np.eye(2), vertex_times=[0.4, 1.0], q_bar=[0, 1], q_low=[0],
            y_bar=[0, 0], y_low=[0])
        assert absdet == 0.0 and ok

    def test_rejects_non_psd_or_bad_diagonal(self):
        cov = CovarianceKernel(spectrum(single_site_operator(0.9)), 2.0)
        with pytest.raises(ValueError, match="unit diagonal"):
            det_bound_sample(cov, 1, 1, 2.0 * np.eye(1), [0.1], [0], [0], [0], [0])
        M = np.array([[1.0, 2.0], [2.0, 1.0]])  # unit diagonal, not PSD
        with pytest.raises(ValueError, match="semidefinite"):
            det_bound_sample(cov, 1, 1, M, [0.1, 0.2], [0], [0], [0], [0])

    def test_randomized_scan_has_no_violations(self):
        cov = CovarianceKernel(spectrum(staggered_chain(6, t=1.0, delta=1.0)), 6.0)
        report = det_bound_scan(cov, sizes=(2, 3, 4, 5, 6), samples=500, seed=11)
        assert report["violations"] == 0
        assert report["max_ratio"] <= 1.0

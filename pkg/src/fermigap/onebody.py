"""One-particle Hamiltonians: construction, spectra, flux/gauge, and the resolvent-decay chain."""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .lattice import SiteGraph, k_zeta

__all__ = [
    "OneBodyOperator",
    "OneBodySpectrum",
    "FluxSpec",
    "build_hopping",
    "spectrum",
    "one_body_gap",
    "seam_phase",
    "apply_flux",
    "paper_nu",
    "gauge_transform",
    "phase_field",
    "twisted_operator",
    "derivative_identity_residual",
    "schur_norm",
    "kernel_power_envelope",
    "ct_alpha_bound",
    "ct_entry_bound",
    "rectangle_contour",
    "decay_envelope",
]

HERMITIAN_TOL = 1e-12


@dataclass
class OneBodyOperator:
    graph: SiteGraph
    kernel: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=complex)
        n = self.graph.n_sites
        if k.shape != (n, n):
            raise ValueError(f"kernel shape {k.shape} != ({n}, {n})")
        if self.hermitian:
            dev = np.abs(k - k.conj().T).max()
            scale = max(1.0, np.abs(k).max())
            if dev > HERMITIAN_TOL * scale:
                raise ValueError(f"kernel not Hermitian (deviation {dev:.2e})")
        self.kernel = k

    @property
    def n_sites(self):
        return self.graph.n_sites

    def opnorm(self):
        return float(np.linalg.norm(self.kernel, 2))


@dataclass
class OneBodySpectrum:
    operator: OneBodyOperator
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def validate(self):
        h = self.operator.kernel
        scale = max(np.abs(h).max(), 1e-300)
        res = np.abs(h @ self.eigenvectors - self.eigenvectors * self.eigenvalues).max()
        if res > 1e-10 * scale:
            raise AssertionError(f"eigenpair residual {res:.2e}")
        gram = self.eigenvectors.conj().T @ self.eigenvectors
        if np.abs(gram - np.eye(len(self.eigenvalues))).max() > 1e-10:
            raise AssertionError("eigenvectors not orthonormal")


def build_hopping(graph, profile=None, kernel=None, mu=0.0, disorder=None, hermitian=True):
    """One-body kernel from a distance profile or an explicit matrix, minus mu on the diagonal.

    ``profile`` maps graph distance to a (real, for Hermiticity) amplitude;
    ``disorder`` is (seed, strength) for a uniform on-site field, or an
    explicit per-site array.
    """
    n = graph.n_sites
    if (profile is None) == (kernel is None):
        raise ValueError("give exactly one of profile / kernel")
    if profile is not None:
        k = np.zeros((n, n), dtype=complex)
        for dist, amp in profile.items():
            k[graph.metric == float(dist)] = amp
    else:
        k = np.asarray(kernel, dtype=complex).copy()
    k[np.diag_indices(n)] -= mu
    if disorder is not None:
        if isinstance(disorder, tuple):
            seed, strength = disorder
            field_vals = strength * np.random.default_rng(seed).uniform(-1.0, 1.0, size=n)
        else:
            field_vals = np.asarray(disorder, dtype=float)
        k[np.diag_indices(n)] += field_vals
    return OneBodyOperator(graph=graph, kernel=k, hermitian=hermitian)


def decay_envelope(op):
    """Fitted exponential envelope |h(x,x')| <= C exp(-c d): returns (C, c).

    Least squares on log|h| vs d over the off-diagonal support; degenerate
    supports (single distance) report c = inf.
    """
    d = op.graph.metric
    absk = np.abs(op.kernel)
    mask = (d > 0) & (absk > 1e-300)
    if not mask.any():
        return float(absk.max(initial=0.0)), np.inf
    ds = d[mask]
    logs = np.log(absk[mask])
    if np.unique(ds).size == 1:
        c = np.inf if absk[mask].max() < absk[np.diag_indices(op.n_sites)].max() else 0.0
        return float(absk.max()), float(c)
    slope, intercept = np.polyfit(ds, logs, 1)
    return float(np.exp(intercept)), float(-slope)


def spectrum(op):
    """Dense Hermitian eigendecomposition, eigenvalues ascending."""
    if not op.hermitian:
        raise ValueError("spectrum() is the Hermitian path")
    w, v = np.linalg.eigh(op.kernel)
    s = OneBodySpectrum(operator=op, eigenvalues=w, eigenvectors=v)
    s.validate()
    return s


def one_body_gap(spec, tol=None):
    """Largest rho with sigma(h) disjoint from (-rho, rho): the minimal |E_k| (0 if none)."""
    absE = np.abs(spec.eigenvalues)
    scale = max(1.0, absE.max(initial=0.0))
    if tol is None:
        tol = 1e-12 * scale
    rho = float(absE.min())
    return 0.0 if rho <= tol else rho


# ---------------------------------------------------------------------------
# Flux threading and gauge transformations on the 2D torus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluxSpec:
    phi1: float
    phi2: float
    r: int

    def __post_init__(self):
        if not (0 <= self.phi1 < 2 * np.pi and 0 <= self.phi2 < 2 * np.pi):
            raise ValueError("fluxes must lie in [0, 2*pi)")
        if self.r < 1:
            raise ValueError("range parameter r must be >= 1")


def seam_phase(y, yp, L, r):
    """Orientation-signed seam crossing indicator f(y, y') on 1-based coordinates.

    +1 for hops from the first r sites to the last r sites, -1 for the reverse,
    0 otherwise; antisymmetric so the fluxed kernel stays Hermitian.
    """
    if 1 <= yp <= r and L - r + 1 <= y <= L:
        return 1.0
    if 1 <= y <= r and L - r + 1 <= yp <= L:
        return -1.0
    return 0.0


def _require_torus2d(graph):
    if graph.lengths is None or len(graph.lengths) != 2 or graph.spin_states != 1:
        raise ValueError("flux threading needs a spinless 2D torus")
    return graph.lengths


def _seam_matrix(coords, L, r):
    lo = coords <= r
    hi = coords >= L - r + 1
    return (hi[:, None] & lo[None, :]).astype(float) - (lo[:, None] & hi[None, :])


def flux_phase_matrix(graph, flux):
    """phi(x, x') = phi_1 f(x_1, x'_1) + phi_2 f(x_2, x'_2) over all site pairs."""
    L1, L2 = _require_torus2d(graph)
    if not (flux.r < L1 / 2 and flux.r < L2 / 2):
        raise ValueError("flux range must satisfy r < L/2")
    n = graph.n_sites
    # labels carry 0-based coordinates; the seam convention is 1-based
    c1 = np.array([graph.labels[i][0] for i in range(n)]) + 1
    c2 = np.array([graph.labels[i][1] for i in range(n)]) + 1
    return (flux.phi1 * _seam_matrix(c1, L1, flux.r)
            + flux.phi2 * _seam_matrix(c2, L2, flux.r))


def apply_flux(op, flux):
    """h^phi(x,x') = h(x,x') exp(i phi(x,x')); requires finite range r on the torus."""
    phi = flux_phase_matrix(op.graph, flux)
    support = np.abs(op.kernel) > 0
    too_far = support & (op.graph.metric > 2 * flux.r)
    if too_far.any():
        raise ValueError("kernel range exceeds the declared flux range r")
    kernel = op.kernel * np.exp(1j * phi)
    return OneBodyOperator(graph=op.graph, kernel=kernel, hermitian=op.hermitian)


def paper_nu(graph, flux):
    """Gauge function nu(x) = sum_i phi_i (1 - 2 x_i / L) chi(1 <= x_i <= L/2), 1-based."""
    L1, L2 = _require_torus2d(graph)
    n = graph.n_sites
    nu = np.zeros(n)
    for i in range(n):
        x1 = graph.labels[i][0] + 1
        x2 = graph.labels[i][1] + 1
        if x1 <= L1 / 2:
            nu[i] += flux.phi1 * (1.0 - 2.0 * x1 / L1)
        if x2 <= L2 / 2:
            nu[i] += flux.phi2 * (1.0 - 2.0 * x2 / L2)
    return nu


def gauge_transform(op, nu):
    """u_nu h u_nu* with u_nu = multiplication by exp(-i nu(x)); spectrum preserved."""
    phase = np.exp(-1j * np.asarray(nu, dtype=float))
    kernel = phase[:, None] * op.kernel * phase.conj()[None, :]
    return OneBodyOperator(graph=op.graph, kernel=kernel, hermitian=op.hermitian)


def phase_field(op, reference):
    """Max |arg(h(x,x') / h_ref(x,x'))| over the kernel support (the residual phase)."""
    ref = reference.kernel
    mask = np.abs(ref) > 0
    ratio = np.ones_like(ref)
    ratio[mask] = op.kernel[mask] / ref[mask]
    return float(np.abs(np.angle(ratio[mask])).max(initial=0.0))


# ---------------------------------------------------------------------------
# Twisted operators and the resolvent-decay chain
# ---------------------------------------------------------------------------

def twisted_operator(op, x0, kappa):
    """h^{x0,kappa}(u,v) = h(u,v) exp(i kappa (d(u,x0) - d(v,x0))); unitarily equivalent."""
    d = op.graph.metric[:, x0]
    phase = np.exp(1j * kappa * d)
    kernel = phase[:, None] * op.kernel * phase.conj()[None, :]
    return OneBodyOperator(graph=op.graph, kernel=kernel, hermitian=op.hermitian)


def _resolvent_entry(op, x, y, z, x0=None, kappa=0.0):
    h = op.kernel if kappa == 0.0 else twisted_operator(op, x0, kappa).kernel
    n = op.n_sites
    rhs = np.zeros(n, dtype=complex)
    rhs[y] = 1.0
    return np.linalg.solve(z * np.eye(n) - h, rhs)[x]


_CENTRAL_FIRST = ((-0.5, -1), (0.5, 1))
_CENTRAL_SECOND = ((1.0, -1), (-2.0, 0), (1.0, 1))


def _kappa_derivative(op, x, y, z, n, dk):
    """(i d/dkappa)^n of (x, (z - h^{x,kappa})^{-1} y) at kappa = 0, Richardson-extrapolated."""
    stencil = _CENTRAL_FIRST if n == 1 else _CENTRAL_SECOND
    if n not in (1, 2):
        raise ValueError("derivative order limited to n in {1, 2}")

    def fd(step):
        acc = 0.0 + 0.0j
        for w, j in stencil:
            acc += w * _resolvent_entry(op, x, y, z, x0=x, kappa=j * step)
        return acc / step**n

    coarse, fine = fd(dk), fd(dk / 2)
    value = (4.0 * fine - coarse) / 3.0  # second-order stencils: h^2 -> h^2/4
    return (1j) ** n * value


def derivative_identity_residual(op, x, y, z, n, dk=1e-3):
    """Residual of the resolvent-entry/twist-derivative identity; vanishes to stencil accuracy.

    Checks (x, (z-h)^{-1} y) against d(x,y)^{-n} times the n-th kappa-derivative
    of the twisted resolvent entry at kappa = 0 (x != y, z off the spectrum).
    """
    if x == y:
        raise ValueError("identity requires x != y")
    if op.hermitian:
        dist = np.abs(np.linalg.eigvalsh(op.kernel) - z).min()
    else:
        dist = np.abs(np.linalg.eigvals(op.kernel) - z).min()
    if dist <= 1e-9:
        raise ValueError("z is inside the spectrum tolerance band")
    lhs = _resolvent_entry(op, x, y, z)
    d = op.graph.metric[x, y]
    rhs = d ** (-n) * _kappa_derivative(op, x, y, z, n, dk)
    return float(abs(lhs - rhs))


def schur_norm(op):
    """Schur test sqrt((sup_x sum_x' |h|) (sup_x' sum_x |h|)) >= operator norm."""
    absk = np.abs(getattr(op, "kernel", op))
    return float(np.sqrt(absk.sum(axis=1).max() * absk.sum(axis=0).max()))


def kernel_power_envelope(op, nu):
    """Smallest K with |h(x,x')| <= K (1 + d(x,x'))^(-nu)."""
    return float((np.abs(op.kernel) * (1.0 + op.graph.metric) ** nu).max())


def ct_alpha_bound(op, rho, eps, nu, K_nu, n, C_fit):
    """Combes-Thomas bound on the covariance decay constant:
    C_fit * sqrt(k(2n)) * k(nu - n)^n * eps^(-n-1).

    Preconditions: spectrum disjoint from [-rho-eps, rho+eps], 0 < eps, rho < ||h||,
    |h| <= K_nu (1+d)^(-nu), and 1 <= n < nu.
    """
    if not (1 <= n < nu):
        raise ValueError("need integer 1 <= n < nu")
    if eps <= 0 or rho <= 0:
        raise ValueError("need positive rho and eps")
    opn = op.opnorm()
    if not (eps < opn and rho < opn):
        raise ValueError("need eps, rho < ||h||")
    eigs = np.linalg.eigvalsh(op.kernel)
    if np.any((eigs >= -rho - eps) & (eigs <= rho + eps)):
        raise ValueError("spectrum intersects [-rho-eps, rho+eps]")
    if kernel_power_envelope(op, nu) > K_nu * (1 + 1e-12):
        raise ValueError("kernel violates the declared power-law envelope")
    g = op.graph
    return float(C_fit * np.sqrt(k_zeta(g, 2 * n)) * k_zeta(g, nu - n) ** n * eps ** (-n - 1))


def rectangle_contour(op, rho, eps, nodes_per_side=64):
    """Nodes and weights on the rectangle with right side Re z = -(rho + eps/2).

    The left side sits at Re z = -(||h|| + eps), the horizontal sides at
    Im z = +-sqrt(eps); encircles the negative spectrum counterclockwise.
    Composite Gauss-Legendre panels per side.
    """
    opn = op.opnorm()
    half_h = np.sqrt(eps)
    x_r, x_l = -(rho + eps / 2.0), -(opn + eps)
    corners = [x_r - 1j * half_h, x_r + 1j * half_h, x_l + 1j * half_h, x_l - 1j * half_h]
    xs, ws = np.polynomial.legendre.leggauss(nodes_per_side)
    zs, zws = [], []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        mid, half = (a + b) / 2.0, (b - a) / 2.0
        zs.append(mid + half * xs)
        zws.append(half * ws)
    return np.concatenate(zs), np.concatenate(zws)


def ct_entry_bound(op, z, n):
    """Pointwise chain bound on |(x, (z-h)^{-1} y)| for x != y at order n in {1, 2}.

    Combines d(x,y)^(-n) with the resolvent-derivative norm chain: the n-th
    derivative of the twisted resolvent is bounded through repeated resolvent
    identities by ||R||^(n+1) times Schur bounds on the kernels d^p |h|.
    """
    eigs = np.linalg.eigvalsh(op.kernel)
    dist = np.abs(eigs - z).min()
    if dist <= 0:
        raise ValueError("z on the spectrum")
    Rn = 1.0 / dist
    d = op.graph.metric
    s1 = schur_norm(d * np.abs(op.kernel))
    if n == 1:
        deriv = Rn**2 * s1
    elif n == 2:
        s2 = schur_norm(d**2 * np.abs(op.kernel))
        deriv = 2.0 * Rn**3 * s1**2 + Rn**2 * s2
    else:
        raise ValueError("n in {1, 2}")
    with np.errstate(divide="ignore"):
        dpow = np.where(d > 0, d, np.inf) ** (-n)
    return dpow * deriv

"""Many-body eigenstructure: cluster projectors, gap/simplicity, continuation certification."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.csgraph as csgraph
import scipy.sparse as sps

__all__ = [
    "EigenSystem",
    "GapReport",
    "eigensystem",
    "gap_and_simplicity",
    "resolvent_norm_circle",
    "certify_by_continuation",
    "gap_scan",
    "deficit_slope",
]

DENSE_DIM_GUARD = 4096


@dataclass
class EigenSystem:
    """Eigenvalues grouped into clusters with spectral projectors.

    Exact degeneracies (subset-sum spectra) split at floating precision, so
    eigenvalues within an absolute tolerance are merged into one cluster; the
    projector of a cluster is built without assuming diagonalizability.
    """

    eigenvalues: np.ndarray          # all eigenvalues, sorted by (Re, Im)
    cluster_values: np.ndarray       # one representative per cluster, sorted by Re
    cluster_members: list            # index arrays into eigenvalues
    projectors: list                 # one per cluster, same order
    hermitian: bool
    matrix: np.ndarray
    shift: complex = 0.0

    def validate(self, tol=1e-8):
        dim = self.matrix.shape[0]
        scale = max(1.0, float(np.abs(self.eigenvalues).max(initial=0.0)))
        total = sum(self.projectors)
        if np.abs(total - np.eye(dim)).max() > tol:
            raise AssertionError("projectors do not resolve the identity")
        H = self.matrix - self.shift * np.eye(dim)
        for P in self.projectors:
            if np.abs(P @ P - P).max() > tol:
                raise AssertionError("projector not idempotent")
            if np.abs(H @ P - P @ H).max() > tol * scale:
                raise AssertionError("projector does not commute with H")
        if self.hermitian and np.abs(self.eigenvalues.imag).max(initial=0.0) > tol * scale:
            raise AssertionError("hermitian path produced complex eigenvalues")


@dataclass
class GapReport:
    E0: complex
    simple: bool
    gap: float
    g: complex = 0.0
    certified: bool = False
    degenerate_whole_space: bool = False
    diagnostics: dict = field(default_factory=dict)


def _cluster_indices(values, tol):
    m = len(values)
    close = np.abs(values[:, None] - values[None, :]) <= tol
    n_comp, labels = csgraph.connected_components(sps.csr_matrix(close), directed=False)
    return [np.flatnonzero(labels == k) for k in range(n_comp)]


def _schur_cluster_projector(H, members_values, other_values):
    """Riesz projector onto the invariant subspace of the selected eigenvalues.

    Reorders a complex Schur form so the cluster sits in the leading block,
    then couples the blocks through a Sylvester solve; valid for defective
    matrices as well.
    """
    members_values = np.asarray(members_values)
    if len(other_values) == 0:
        return np.eye(H.shape[0], dtype=complex)
    margin = 0.5 * min(
        abs(mv - ov) for mv in members_values for ov in other_values
    )

    def select(z):
        return bool(np.abs(members_values - z).min() < margin)

    T, Z, sdim = sla.schur(H, output="complex", sort=select)
    if sdim != len(members_values):
        raise RuntimeError("Schur reordering selected an unexpected block size")
    T11, T12, T22 = T[:sdim, :sdim], T[:sdim, sdim:], T[sdim:, sdim:]
    Y = sla.solve_sylvester(T11, -T22, T12)
    block = np.zeros_like(T)
    block[:sdim, :sdim] = np.eye(sdim)
    block[:sdim, sdim:] = Y
    return Z @ block @ Z.conj().T


def eigensystem(H, hermitian=None, cluster_tol=None, shift_ground=False):
    """Cluster the spectrum of a dense matrix and build spectral projectors."""
    H = np.asarray(H)
    dim = H.shape[0]
    if dim > DENSE_DIM_GUARD:
        raise ValueError(f"dense eigensystem guarded at dimension {DENSE_DIM_GUARD}")
    if hermitian is None:
        hermitian = bool(np.abs(H - H.conj().T).max() <= 1e-12 * max(1.0, np.abs(H).max()))
    if hermitian:
        w, V = np.linalg.eigh(H)
        values = w.astype(complex)
    else:
        values = sla.eigvals(H)
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    scale = max(1.0, float(np.abs(values).max()))
    tol = 1e-7 * scale if cluster_tol is None else cluster_tol

    members = _cluster_indices(values, tol)
    reps = np.array([values[idx].mean() for idx in members])
    rep_order = np.argsort(reps.real)
    members = [members[k] for k in rep_order]
    reps = reps[rep_order]

    projectors = []
    if hermitian:
        V = V[:, order]
        for idx in members:
            Vc = V[:, idx]
            projectors.append(Vc @ Vc.conj().T)
    else:
        for k, idx in enumerate(members):
            others = np.concatenate([reps[:k], reps[k + 1:]])
            projectors.append(_schur_cluster_projector(H, values[idx], others))

    shift = complex(reps[0]) if shift_ground else 0.0
    eig = EigenSystem(
        eigenvalues=values - shift,
        cluster_values=reps - shift,
        cluster_members=members,
        projectors=projectors,
        hermitian=hermitian,
        matrix=H,
        shift=shift,
    )
    eig.validate()
    return eig


def gap_and_simplicity(eig, g=0.0):
    """E0 = eigenvalue cluster of minimal real part; gap to the next distinct cluster."""
    reps = eig.cluster_values
    E0 = complex(reps[0])
    tr = float(np.real(np.trace(eig.projectors[0])))
    simple = abs(tr - 1.0) <= 1e-6 and len(eig.cluster_members[0]) == 1
    if len(reps) == 1:
        return GapReport(E0=E0, simple=simple, gap=np.nan, g=g,
                         degenerate_whole_space=True,
                         diagnostics={"trace_P0": tr})
    gap = float(reps[1].real - E0.real)
    return GapReport(E0=E0, simple=simple, gap=gap, g=g,
                     diagnostics={"trace_P0": tr})


def resolvent_norm_circle(H, center, radius, min_points=32, rtol=1e-2, max_points=1024):
    """sup over |z - center| = radius of ||(z - H)^{-1}||, by direct smallest singular value.

    The circle discretization doubles until the maximum changes by less than
    rtol; returns (max_norm, points_used).
    """
    H = np.asarray(H)
    eye = np.eye(H.shape[0])

    def max_on(npts):
        zs = center + radius * np.exp(2j * np.pi * np.arange(npts) / npts)
        return max(1.0 / sla.svdvals(z * eye - H)[-1] for z in zs)

    npts = min_points
    prev = max_on(npts)
    while npts < max_points:
        npts *= 2
        cur = max_on(npts)
        if abs(cur - prev) <= rtol * prev:
            return max(cur, prev), npts
        prev = cur
    return prev, npts


def certify_by_continuation(H0, W, g_target, rho, hermitian=None, safety=0.5,
                            min_step=1e-8, max_steps=10_000):
    """Walk the coupling from 0 to g_target, certifying ground-state simplicity per step.

    At coupling g the direct circle-resolvent bound sup_{|z-E0|=rho/2} ||(z-H_g)^{-1}||
    limits the admissible step to |dg| < 1 / (sup * ||W||); each accepted step is
    re-verified by exact diagonalization.  Certification requires reaching the
    target with a simple E0 and a measured real-part gap >= rho - 1e-8.
    """
    H0 = np.asarray(H0, dtype=complex)
    W = np.asarray(W, dtype=complex)
    w_norm = float(sla.svdvals(W)[0])
    if hermitian is None:
        herm = (abs(np.imag(g_target)) == 0.0
                and np.abs(H0 - H0.conj().T).max() <= 1e-12 * max(1.0, np.abs(H0).max())
                and np.abs(W - W.conj().T).max() <= 1e-12 * max(1.0, np.abs(W).max()))
    else:
        herm = hermitian

    eig = eigensystem(H0, hermitian=True)
    rep = gap_and_simplicity(eig, g=0.0)
    if not rep.simple or not rep.gap >= rho - 1e-8:
        rep.diagnostics["reason"] = "free model not gapped at the requested rho"
        return rep

    if g_target == 0 or w_norm == 0.0:
        rep.certified = True
        return rep

    direction = g_target / abs(g_target)
    target_len = abs(g_target)
    s = 0.0
    H = H0
    steps = []
    for _ in range(max_steps):
        sup_res, npts = resolvent_norm_circle(H, rep.E0, rho / 2.0)
        dg_max = safety / (sup_res * w_norm)
        dg = min(dg_max, target_len - s)
        if dg < min_step:
            rep.certified = False
            rep.diagnostics.update(reason="step underflow", at_g=s * direction,
                                   resolvent_sup=sup_res, required_step=dg)
            return rep
        s += dg
        g = s * direction
        H = H0 + g * W
        eig = eigensystem(H, hermitian=herm)
        rep = gap_and_simplicity(eig, g=g)
        steps.append({"g": g, "resolvent_sup": sup_res, "gap": rep.gap})
        if not rep.simple:
            rep.diagnostics.update(reason="ground cluster lost simplicity", steps=steps)
            return rep
        if s >= target_len:
            break
    else:
        rep.diagnostics.update(reason="step cap exceeded", steps=steps)
        return rep

    rep.certified = bool(rep.simple and rep.gap >= rho - 1e-8)
    rep.diagnostics.update(steps=steps, rho=rho, w_norm=w_norm)
    return rep


def gap_scan(H0, W, g_values, hermitian=None):
    """Plain per-coupling gap reports (no certification walk)."""
    H0 = np.asarray(H0, dtype=complex)
    W = np.asarray(W, dtype=complex)
    reports = []
    for g in g_values:
        eig = eigensystem(H0 + g * W, hermitian=hermitian)
        reports.append(gap_and_simplicity(eig, g=g))
    return reports


def deficit_slope(g_values, gaps, gap0=None, floor=1e-12):
    """Least-squares slope of log(gap deficit) against log|g|."""
    g_values = np.asarray(g_values, dtype=complex)
    gaps = np.asarray(gaps, dtype=float)
    if gap0 is None:
        gap0 = gaps[np.argmin(np.abs(g_values))]
    mask = (np.abs(g_values) > 0) & (gap0 - gaps > floor)
    if mask.sum() < 2:
        raise ValueError("not enough usable points for a deficit fit")
    x = np.log(np.abs(g_values[mask]))
    y = np.log(gap0 - gaps[mask])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)

"""Finite site sets with metrics: regular tori, the time circle, summability constants."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

__all__ = [
    "SiteGraph",
    "build_torus",
    "from_metric",
    "single_site",
    "time_distance",
    "k_zeta",
    "k_zeta_by_site",
]


@dataclass(frozen=True)
class SiteGraph:
    """A finite set of sites with a full pairwise-distance table.

    ``metric[x, y]`` is the distance between sites x and y.  ``labels`` carries
    per-site tags: for tori built here, tuples ``(x_1, ..., x_d, sigma)`` of
    0-based coordinates plus a spin index (omitted when spinless).  ``lengths``
    is the per-dimension extent for torus graphs (None for generic graphs).
    """

    n_sites: int
    metric: np.ndarray
    labels: tuple = None
    lengths: tuple = None
    spin_states: int = 1

    def __post_init__(self):
        m = np.asarray(self.metric, dtype=float)
        if m.shape != (self.n_sites, self.n_sites):
            raise ValueError(f"metric shape {m.shape} != ({self.n_sites}, {self.n_sites})")
        object.__setattr__(self, "metric", m)
        m.setflags(write=False)

    def distance(self, x, y):
        return self.metric[x, y]

    def coords(self, x):
        """Spatial coordinates of site x (torus graphs only)."""
        if self.labels is None:
            raise ValueError("graph carries no coordinate labels")
        lab = self.labels[x]
        return lab[:-1] if self.spin_states > 1 else lab

    def check_metric_axioms(self, atol=0.0):
        """Raise unless the stored table is a genuine finite metric."""
        m = self.metric
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite distances")
        if np.any(np.abs(np.diag(m)) > atol):
            raise ValueError("nonzero diagonal")
        if np.any(np.abs(m - m.T) > atol):
            raise ValueError("asymmetric metric")
        if np.any(m < -atol):
            raise ValueError("negative distance")
        # triangle inequality on all triples, vectorized over the middle point
        viol = (m[:, None, :] + m[None, :, :]).min(axis=2) - m  # min over z of d(x,z)+d(z,y)
        if np.any(viol < -atol - 1e-12):
            raise ValueError("triangle inequality violated")


def build_torus(lengths, spin_states=0):
    """Nearest-neighbor torus graph, optionally with (2S+1) spin copies per site.

    ``lengths`` is an int or a per-dimension sequence, every entry >= 2 (a
    single-site direction has no wraparound to speak of).  ``spin_states`` is
    2S as an integer >= 0; spin copies of one spatial site sit at distance 0
    from each other and at the spatial distance from everything else.
    """
    if np.isscalar(lengths):
        lengths = (int(lengths),)
    lengths = tuple(int(L) for L in lengths)
    if any(L < 2 for L in lengths):
        raise ValueError(f"torus needs L >= 2 in each dimension, got {lengths}")
    if spin_states < 0 or int(spin_states) != spin_states:
        raise ValueError("spin_states is 2S, a non-negative integer")
    n_spin = int(spin_states) + 1

    cells = list(product(*[range(L) for L in lengths]))
    labels = []
    for cell in cells:
        for sigma in range(n_spin):
            labels.append(cell + (sigma,))
    n = len(labels)

    coords = np.array([lab[:-1] for lab in labels], dtype=int)  # (n, d)
    diff = np.abs(coords[:, None, :] - coords[None, :, :])
    wrap = np.minimum(diff, np.array(lengths)[None, None, :] - diff)
    metric = wrap.sum(axis=2).astype(float)

    return SiteGraph(n_sites=n, metric=metric, labels=tuple(labels),
                     lengths=lengths, spin_states=n_spin)


def from_metric(metric, labels=None):
    metric = np.asarray(metric, dtype=float)
    g = SiteGraph(n_sites=metric.shape[0], metric=metric, labels=labels)
    g.check_metric_axioms(atol=1e-12)
    return g


def single_site():
    return SiteGraph(n_sites=1, metric=np.zeros((1, 1)))


def time_distance(tau, taup, beta):
    """Distance on the time circle R/(beta Z): |tau - tau'| reduced modulo beta."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    r = np.mod(np.abs(np.asarray(tau) - np.asarray(taup)), beta)
    return np.minimum(r, beta - r)


def k_zeta_by_site(graph, zeta):
    """Per-site sums sum_y (1 + d(x,y))^(-zeta)."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    return ((1.0 + graph.metric) ** (-zeta)).sum(axis=1)


def k_zeta(graph, zeta):
    """Summability constant sup_x sum_y (1 + d(x,y))^(-zeta); always >= 1."""
    return float(k_zeta_by_site(graph, zeta).max())

"""Named model builders: hopping profiles and interaction kernels used by the CLI and tests."""

import numpy as np

from .lattice import build_torus
from .onebody import OneBodyOperator, build_hopping

__all__ = [
    "ring_hopping",
    "staggered_chain",
    "dimerized_chain",
    "staggered_torus2d",
    "nn_kernel",
    "exp_kernel",
]


def ring_hopping(L, t=1.0, mu=0.0, disorder=None):
    """Nearest-neighbor ring: h(x, x+-1) = t, diagonal -mu (+ optional disorder)."""
    g = build_torus(L)
    return build_hopping(g, profile={1: t}, mu=mu, disorder=disorder)


def staggered_chain(L, t=1.0, delta=0.0, mu=0.0, disorder=None):
    """NN ring with alternating on-site energies +-delta; needs even L.

    Spectrum +-sqrt(delta^2 + |eps_k|^2); the one-body gap is 2*min|E|.
    """
    if L % 2:
        raise ValueError("staggered chain needs even L")
    g = build_torus(L)
    kernel = np.zeros((L, L), dtype=complex)
    for x in range(L):
        kernel[x, (x + 1) % L] = kernel[(x + 1) % L, x] = t
        kernel[x, x] = delta * (-1) ** x
    return build_hopping(g, kernel=kernel, mu=mu, disorder=disorder)


def dimerized_chain(L, t1, t2, mu=0.0):
    """Alternating-bond ring (t1 on even bonds, t2 on odd); needs even L."""
    if L % 2:
        raise ValueError("dimerized chain needs even L")
    g = build_torus(L)
    kernel = np.zeros((L, L), dtype=complex)
    for x in range(L):
        t = t1 if x % 2 == 0 else t2
        kernel[x, (x + 1) % L] = kernel[(x + 1) % L, x] = t
    return build_hopping(g, kernel=kernel, mu=mu)


def staggered_torus2d(L1, L2, t=1.0, delta=0.0, mu=0.0):
    """2D NN torus with checkerboard on-site energies +-delta; needs even L1, L2."""
    if L1 % 2 or L2 % 2:
        raise ValueError("checkerboard staggering needs even lengths")
    g = build_torus((L1, L2))
    n = g.n_sites
    kernel = np.zeros((n, n), dtype=complex)
    kernel[g.metric == 1.0] = t
    for i in range(n):
        x1, x2 = g.labels[i][:2]
        kernel[i, i] = delta * (-1) ** (x1 + x2)
    return build_hopping(g, kernel=kernel, mu=mu)


def nn_kernel(graph, amplitude=1.0):
    """Symmetric nearest-neighbor interaction kernel with zero diagonal."""
    v = np.zeros((graph.n_sites, graph.n_sites))
    v[graph.metric == 1.0] = amplitude
    return v


def exp_kernel(graph, rate, amplitude=1.0):
    """Exponentially decaying symmetric kernel, zero diagonal."""
    v = amplitude * np.exp(-rate * graph.metric)
    np.fill_diagonal(v, 0.0)
    return v

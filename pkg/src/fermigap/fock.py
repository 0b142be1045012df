"""Fock-space realization: CAR operators, second quantization, normal-order extraction.

Basis states are occupation bitstrings 0..2^n-1; c+_x flips bit x with sign
(-1)^(number of occupied bits below x) in the fixed site order.  With this
convention the ascending product c+_{x1}...c+_{xm}|vac> equals the basis
vector of the corresponding bitstring with sign +1, and all CAR relations
hold exactly in integer arithmetic.
"""

import math
from itertools import combinations

import numpy as np
import scipy.sparse as sps

from .normalorder import NormalOrderedOperator, scatter_antisymmetric

__all__ = [
    "FockBasis",
    "car_ops",
    "monomial_action",
    "monomial_matrix",
    "second_quantize_quadratic",
    "second_quantize",
    "second_quantize_quadratic_sparse",
    "density_density_diagonal",
    "normal_order_extract",
    "parity_operator",
    "is_selfadjoint_fock",
]

DENSE_GUARD = 12
SPARSE_GUARD = 16


class FockBasis:
    """Occupation-bitstring basis of the 2^n-dimensional Fock space."""

    def __init__(self, n_sites):
        if n_sites < 1 or n_sites > SPARSE_GUARD:
            raise ValueError(f"n_sites {n_sites} outside the 1..{SPARSE_GUARD} guard")
        self.n_sites = int(n_sites)
        self.dim = 1 << self.n_sites
        states = np.arange(self.dim, dtype=np.uint32)
        self.states = states
        # sign_below[s, x] = (-1)^(# occupied bits of s strictly below x)
        masks = (np.uint32(1) << np.arange(self.n_sites, dtype=np.uint32)) - np.uint32(1)
        counts = np.bitwise_count(states[:, None] & masks[None, :])
        self.sign_below = np.where(counts % 2 == 0, 1, -1).astype(np.int8)
        self.occ = ((states[:, None] >> np.arange(self.n_sites)) & 1).astype(np.int8)

    def state_index(self, sites):
        """Basis index of the bitstring with the given sites occupied."""
        mask = 0
        for x in sites:
            mask |= 1 << x
        return mask


def monomial_action(basis, bars, lows):
    """Action of the normal monomial  prod c+_bars  prod c-_lows  on every basis state.

    Factors act right-to-left (lows[-1] first, bars[0] last).  Returns
    (alive, target, sign): mask of source states not annihilated, image state
    indices, and accumulated fermionic signs.
    """
    state = basis.states.copy()
    sign = np.ones(basis.dim, dtype=np.int8)
    alive = np.ones(basis.dim, dtype=bool)
    for x in reversed(lows):
        bit = np.uint32(1) << np.uint32(x)
        occupied = (state & bit) != 0
        alive &= occupied
        sign = sign * basis.sign_below[state, x]
        state = np.where(occupied, state ^ bit, state)
    for x in reversed(bars):
        bit = np.uint32(1) << np.uint32(x)
        empty = (state & bit) == 0
        alive &= empty
        sign = sign * basis.sign_below[state, x]
        state = np.where(empty, state | bit, state)
    return alive, state, sign


def monomial_matrix(basis, bars, lows, coeff=1.0):
    alive, target, sign = monomial_action(basis, bars, lows)
    src = basis.states[alive].astype(np.int64)
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    out[target[alive].astype(np.int64), src] = coeff * sign[alive]
    return out


def car_ops(basis):
    """Families {c+_x}, {c-_x} as dense matrices with exact 0/+-1 entries."""
    if basis.n_sites > DENSE_GUARD:
        raise ValueError(f"dense car_ops guarded at n_sites <= {DENSE_GUARD}")
    cplus = [monomial_matrix(basis, (x,), ()) for x in range(basis.n_sites)]
    cminus = [monomial_matrix(basis, (), (x,)) for x in range(basis.n_sites)]
    return cplus, cminus


def parity_operator(basis):
    return np.diag(np.where(basis.occ.sum(axis=1) % 2 == 0, 1.0, -1.0).astype(complex))


def second_quantize_quadratic(h, basis):
    """H0 = sum_{x,x'} h(x,x') c+_x c-_{x'} as a dense Fock matrix."""
    kernel = np.asarray(getattr(h, "kernel", h), dtype=complex)
    n = basis.n_sites
    if kernel.shape != (n, n):
        raise ValueError(f"kernel shape {kernel.shape} does not match {n} sites")
    if basis.dim > (1 << DENSE_GUARD):
        raise ValueError("dense path guarded at n_sites <= 12; use the sparse path")
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for x in range(n):
        for xp in range(n):
            if kernel[x, xp] == 0:
                continue
            alive, target, sign = monomial_action(basis, (x,), (xp,))
            src = basis.states[alive].astype(np.int64)
            out[target[alive].astype(np.int64), src] += kernel[x, xp] * sign[alive]
    return out


def second_quantize_quadratic_sparse(h, basis):
    """CSR version of the quadratic second quantization (matvec / Lanczos path)."""
    kernel = np.asarray(getattr(h, "kernel", h), dtype=complex)
    n = basis.n_sites
    rows, cols, vals = [], [], []
    for x in range(n):
        for xp in range(n):
            if kernel[x, xp] == 0:
                continue
            alive, target, sign = monomial_action(basis, (x,), (xp,))
            cols.append(basis.states[alive].astype(np.int64))
            rows.append(target[alive].astype(np.int64))
            vals.append(kernel[x, xp] * sign[alive].astype(np.complex128))
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    vals = np.concatenate(vals) if vals else np.zeros(0, dtype=complex)
    return sps.csr_matrix(sps.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim)))


def density_density_diagonal(basis, v, g):
    """Diagonal of g * sum_{x,x'} v(x,x') n_x n_{x'} over all bitstrings."""
    v = np.asarray(v, dtype=float)
    occ = basis.occ.astype(float)
    return g * np.einsum("si,ij,sj->s", occ, v, occ)


def second_quantize(op, basis):
    """Fock matrix of a normal-ordered family: N(A) in the fixed ordering convention.

    Antisymmetry collapses the permutation sums, so only ascending injective
    tuples are visited and the 1/(mbar! m!) weights cancel exactly.
    """
    n = basis.n_sites
    if op.n_sites != n:
        raise ValueError("operator site count does not match basis")
    if basis.dim > (1 << DENSE_GUARD):
        raise ValueError("dense path guarded at n_sites <= 12")
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for (mbar, m), a in op.coeffs.items():
        if mbar > n or m > n:
            continue  # nilpotency: no injective tuple exists
        if mbar == 0 and m == 0:
            out += complex(a) * np.eye(basis.dim)
            continue
        arr = np.asarray(a)
        for bars in combinations(range(n), mbar):
            sub = arr[bars] if mbar else arr
            for lows in combinations(range(n), m):
                coeff = sub[lows] if m else sub
                if coeff == 0:
                    continue
                alive, target, sign = monomial_action(basis, bars, lows)
                src = basis.states[alive].astype(np.int64)
                out[target[alive].astype(np.int64), src] += coeff * sign[alive]
    return out


def normal_order_extract(A, basis, grade_cap=None):
    """Invert second_quantize: the unique antisymmetric family with N(coeffs) = A.

    Vacuum-sandwich recursion in increasing total degree: with ascending
    mbar-particle bra and m-particle ket states, the pure grade-(mbar, m)
    matrix element is a(bars; lows) * (-1)^(m(m-1)/2), and all lower-degree
    grades have already been subtracted from the residual.
    """
    n = basis.n_sites
    cap = n if grade_cap is None else min(grade_cap, n)
    A = np.asarray(A, dtype=complex)
    residual = A.copy()
    coeffs = {(0, 0): complex(A[0, 0])}
    residual = residual - coeffs[(0, 0)] * np.eye(basis.dim)

    for degree in range(1, 2 * cap + 1):
        updates = {}
        for mbar in range(max(0, degree - cap), min(degree, cap) + 1):
            m = degree - mbar
            if m > cap:
                continue
            sgn = (-1) ** (m * (m - 1) // 2)
            a = np.zeros((n,) * (mbar + m), dtype=complex)
            hit = False
            for bars in combinations(range(n), mbar):
                bra = basis.state_index(bars)
                for lows in combinations(range(n), m):
                    val = sgn * residual[bra, basis.state_index(lows)]
                    if val != 0:
                        scatter_antisymmetric(a, bars, lows, val)
                        hit = True
            if hit:
                updates[(mbar, m)] = a
        for grade, a in updates.items():
            coeffs[grade] = a
            probe = NormalOrderedOperator(graph=None, coeffs={grade: a}, n_sites=n)
            residual -= second_quantize(probe, basis)
    return NormalOrderedOperator(graph=None, coeffs=coeffs, n_sites=n)


def is_selfadjoint_fock(op, basis, tol=1e-12):
    """Self-adjointness certified at the Fock level (no coefficient-level formula)."""
    A = second_quantize(op, basis)
    scale = max(1.0, np.abs(A).max())
    return float(np.abs(A - A.conj().T).max()) <= tol * scale

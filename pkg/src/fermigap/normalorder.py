"""Normal-ordered operator families: antisymmetric coefficient tensors and their norms."""

import math
from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np

__all__ = [
    "NormalOrderedOperator",
    "antisymmetrize",
    "scatter_antisymmetric",
    "norm_local",
    "norm_total",
    "coefficient_seminorms",
    "density_density",
    "quadratic",
    "number_op",
    "creation",
    "annihilation",
    "to_set_form",
    "from_set_form",
    "is_even",
    "random_operator",
]


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, cycle = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            cycle += 1
        if cycle % 2 == 0:
            sign = -sign
    return sign


def antisymmetrize(raw, mbar, m):
    """Project onto the antisymmetric part over barred and unbarred slots separately.

    The signed average is computed once per ascending index pair and scattered
    to all permutation images, so the output is exactly antisymmetric (entries
    with repeated indices are exactly zero).
    """
    raw = np.asarray(raw)
    if raw.ndim != mbar + m:
        raise ValueError(f"tensor rank {raw.ndim} != {mbar}+{m}")
    n = raw.shape[0] if raw.ndim else 0
    out = np.zeros_like(raw, dtype=complex if np.iscomplexobj(raw) else float)
    weight = math.factorial(mbar) * math.factorial(m)
    for bars in combinations(range(n), mbar):
        for lows in combinations(range(n), m):
            val = 0.0
            for pbar in permutations(range(mbar)):
                ib = tuple(bars[i] for i in pbar)
                sbar = _perm_sign(pbar)
                for p in permutations(range(m)):
                    val += sbar * _perm_sign(p) * raw[ib + tuple(lows[i] for i in p)]
            if val != 0.0:
                scatter_antisymmetric(out, bars, lows, val / weight)
    return out


def scatter_antisymmetric(a, bars, lows, value):
    """Write the antisymmetric extension of a single entry (ascending index sets)."""
    mbar, m = len(bars), len(lows)
    for pbar in permutations(range(mbar)):
        sbar = _perm_sign(pbar)
        ib = tuple(bars[i] for i in pbar)
        for p in permutations(range(m)):
            s = _perm_sign(p)
            a[ib + tuple(lows[i] for i in p)] = sbar * s * value


@dataclass
class NormalOrderedOperator:
    """Graded family of antisymmetric coefficient tensors a_{mbar,m} on Lambda^mbar x Lambda^m."""

    graph: object
    coeffs: dict
    n_sites: int = None

    def __post_init__(self):
        if self.n_sites is None:
            if self.graph is None:
                raise ValueError("need a graph or an explicit n_sites")
            self.n_sites = self.graph.n_sites
        clean = {}
        for (mbar, m), a in self.coeffs.items():
            if mbar == 0 and m == 0:
                clean[(0, 0)] = complex(a)
                continue
            a = np.asarray(a, dtype=complex)
            if a.shape != (self.n_sites,) * (mbar + m):
                raise ValueError(f"grade {(mbar, m)} tensor has shape {a.shape}")
            clean[(mbar, m)] = a
        self.coeffs = clean

    @property
    def max_grade(self):
        return max((mbar + m for mbar, m in self.coeffs), default=0)

    def grade(self, mbar, m):
        if (mbar, m) in self.coeffs:
            return self.coeffs[(mbar, m)]
        if mbar == 0 and m == 0:
            return 0j
        return np.zeros((self.n_sites,) * (mbar + m), dtype=complex)

    def check_antisymmetry(self, rng=None, samples=20):
        """Random-permutation spot checks; exact equality required."""
        rng = rng or np.random.default_rng(0)
        for (mbar, m), a in self.coeffs.items():
            if mbar + m == 0:
                continue
            for _ in range(samples):
                pbar = tuple(rng.permutation(mbar))
                p = tuple(rng.permutation(m))
                axes = list(pbar) + [mbar + i for i in p]
                sign = _perm_sign(pbar) * _perm_sign(p)
                if not np.array_equal(np.transpose(a, axes), sign * a):
                    raise AssertionError(f"grade {(mbar, m)} not antisymmetric")

    def __add__(self, other):
        if self.n_sites != other.n_sites:
            raise ValueError("site count mismatch")
        grades = set(self.coeffs) | set(other.coeffs)
        return NormalOrderedOperator(
            graph=self.graph if self.graph is not None else other.graph,
            coeffs={g: self.grade(*g) + other.grade(*g) for g in grades},
            n_sites=self.n_sites,
        )

    def __rmul__(self, c):
        return NormalOrderedOperator(
            graph=self.graph,
            coeffs={g: c * a for g, a in self.coeffs.items()},
            n_sites=self.n_sites,
        )

    __mul__ = __rmul__


def coefficient_seminorms(a, mbar, m):
    """The two one-pinned sums, their max, and the full l1 sum of one tensor."""
    if mbar == 0 and m == 0:
        v = abs(complex(a))
        return v, v, v, v
    ab = np.abs(np.asarray(a))
    full = float(ab.sum())
    pins = []
    p1 = p2 = None
    if mbar >= 1:
        p1 = float(ab.reshape(ab.shape[0], -1).sum(axis=1).max())
        pins.append(p1)
    if m >= 1:
        p2 = float(np.moveaxis(ab, mbar, 0).reshape(ab.shape[0], -1).sum(axis=1).max())
        pins.append(p2)
    one_inf = max(pins)
    return p1, p2, one_inf, full


def _norm(op, h, which):
    if h <= 0:
        raise ValueError("h must be positive")
    total = 0.0
    for (mbar, m), a in op.coeffs.items():
        _, _, one_inf, full = coefficient_seminorms(a, mbar, m)
        size = one_inf if which == "local" else full
        total += size * h ** (mbar + m) / (math.factorial(mbar) * math.factorial(m))
    return total


def norm_local(op, h):
    """||A||_h: factorial-weighted pinned-sup sums (the |Lambda|-uniform norm)."""
    return _norm(op, h, "local")


def norm_total(op, h):
    """|||A|||_h: same with full l1 sums; grows linearly in |Lambda| for extensive operators."""
    return _norm(op, h, "total")


def density_density(graph, v, g):
    """Normal-ordered coefficients of g * sum_{x,x'} v(x,x') n_x n_{x'}.

    Requires v symmetric with zero diagonal (so the would-be grade-(1,1)
    contraction term vanishes identically).  The grade-(2,2) tensor is
    a(u1,u2; w1,w2) = 2 g v(u1,u2) [d_{u1,w2} d_{u2,w1} - d_{u1,w1} d_{u2,w2}],
    fixed by N(result) = g sum v n n exactly on Fock space.
    """
    v = np.asarray(v, dtype=float)
    n = graph.n_sites
    if v.shape != (n, n):
        raise ValueError("kernel shape mismatch")
    if not np.array_equal(v, v.T):
        raise ValueError("density-density kernel must be symmetric")
    if np.any(np.diag(v) != 0):
        raise ValueError("density-density kernel must have zero diagonal")
    eye = np.eye(n)
    a = 2.0 * g * (
        v[:, :, None, None] * (eye[:, None, None, :] * eye[None, :, :, None]
                               - eye[:, None, :, None] * eye[None, :, None, :])
    )
    return NormalOrderedOperator(graph=graph, coeffs={(2, 2): a})


def quadratic(graph, kernel):
    """Grade-(1,1) operator sum h(x,x') c+_x c-_{x'}."""
    kernel = np.asarray(kernel, dtype=complex)
    return NormalOrderedOperator(graph=graph, coeffs={(1, 1): kernel})


def number_op(graph, x):
    n = graph.n_sites
    k = np.zeros((n, n), dtype=complex)
    k[x, x] = 1.0
    return quadratic(graph, k)


def creation(graph, x):
    n = graph.n_sites
    a = np.zeros(n, dtype=complex)
    a[x] = 1.0
    return NormalOrderedOperator(graph=graph, coeffs={(1, 0): a})


def annihilation(graph, x):
    n = graph.n_sites
    a = np.zeros(n, dtype=complex)
    a[x] = 1.0
    return NormalOrderedOperator(graph=graph, coeffs={(0, 1): a})


def to_set_form(op):
    """Set-pair weights w_{M,N} = a at ascending tuples (any fixed site order)."""
    weights = {}
    for (mbar, m), a in op.coeffs.items():
        if mbar == 0 and m == 0:
            if a != 0:
                weights[((), ())] = complex(a)
            continue
        for bars in combinations(range(op.n_sites), mbar):
            sub = a[bars] if mbar else a
            for lows in combinations(range(op.n_sites), m):
                w = complex(sub[lows]) if m else complex(sub)
                if w != 0:
                    weights[(bars, lows)] = w
    return weights


def from_set_form(graph, weights, n_sites=None):
    n = graph.n_sites if graph is not None else n_sites
    coeffs = {}
    for (bars, lows), w in weights.items():
        mbar, m = len(bars), len(lows)
        if tuple(sorted(bars)) != tuple(bars) or tuple(sorted(lows)) != tuple(lows):
            raise ValueError("set-form keys must be ascending tuples")
        if len(set(bars)) != mbar or len(set(lows)) != m:
            raise ValueError("set-form keys must not repeat sites")
        if mbar == 0 and m == 0:
            coeffs[(0, 0)] = coeffs.get((0, 0), 0j) + w
            continue
        a = coeffs.setdefault((mbar, m), np.zeros((n,) * (mbar + m), dtype=complex))
        scatter_antisymmetric(a, bars, lows, w)
    return NormalOrderedOperator(graph=graph, coeffs=coeffs, n_sites=n)


def is_even(op):
    """True iff every grade with a nonzero tensor has even mbar + m."""
    for (mbar, m), a in op.coeffs.items():
        if (mbar + m) % 2 == 1:
            if (mbar + m > 0 and np.any(a != 0)) or (mbar + m == 0 and a != 0):
                return False
    return True


def random_operator(graph, grades, rng, scale=1.0, n_sites=None):
    """Random antisymmetric coefficient family (complex Gaussian entries)."""
    n = graph.n_sites if graph is not None else n_sites
    coeffs = {}
    for mbar, m in grades:
        if mbar == 0 and m == 0:
            coeffs[(0, 0)] = scale * complex(rng.standard_normal(), rng.standard_normal())
            continue
        raw = rng.standard_normal((n,) * (mbar + m)) + 1j * rng.standard_normal((n,) * (mbar + m))
        coeffs[(mbar, m)] = antisymmetrize(scale * raw, mbar, m)
    return NormalOrderedOperator(graph=graph, coeffs=coeffs, n_sites=n)

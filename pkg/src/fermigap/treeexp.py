"""Tree combinatorics for the expansion order bounds: enumeration, incidence, series sums."""

import heapq
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

__all__ = [
    "DirectedTree",
    "prufer_decode",
    "prufer_encode",
    "enumerate_trees",
    "enumerate_directed",
    "incidence",
    "degree_sequences",
    "tree_count_formula",
    "cayley_count_check",
    "path_forest_decompose",
    "binomial_resummation",
    "degree_product_bound_check",
    "series_bound",
    "series_sum",
    "combinatorics_audit",
]

TREE_GUARD = 9  # r^(r-2) trees; r = 9 is ~4.8M


@dataclass(frozen=True)
class DirectedTree:
    """Directed tree on vertices {1..r}: ordered pairs whose undirected image spans."""

    r: int
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))

    def undirected(self):
        return tuple(tuple(sorted(e)) for e in self.edges)

    def validate(self):
        if len(self.edges) != self.r - 1:
            raise ValueError("a spanning tree on r vertices has r-1 edges")
        und = set()
        for a, b in self.edges:
            if a == b or not (1 <= a <= self.r and 1 <= b <= self.r):
                raise ValueError(f"bad edge ({a}, {b})")
            key = (min(a, b), max(a, b))
            if key in und:
                raise ValueError("both orientations (or repeats) of one pair present")
            und.add(key)
        # connectivity via union-find
        parent = list(range(self.r + 1))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        for a, b in und:
            ra, rb = find(a), find(b)
            if ra == rb:
                raise ValueError("cycle detected")
            parent[ra] = rb
        if len({find(v) for v in range(1, self.r + 1)}) != 1:
            raise ValueError("not connected")
        theta, theta_bar, deg = incidence(self)
        if not np.array_equal(theta + theta_bar, deg):
            raise ValueError("graded incidence numbers do not sum to degrees")


def prufer_decode(seq, r):
    """Labeled tree on {1..r} from its Prufer sequence (length r-2)."""
    seq = [int(v) for v in seq]
    if len(seq) != r - 2:
        raise ValueError("sequence length must be r - 2")
    degree = [1] * (r + 1)
    for v in seq:
        degree[v] += 1
    leaves = [v for v in range(1, r + 1) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    a = heapq.heappop(leaves)
    b = heapq.heappop(leaves)
    edges.append((min(a, b), max(a, b)))
    return tuple(edges)


def prufer_encode(edges):
    """Prufer sequence of a labeled tree given as undirected edges."""
    r = len(edges) + 1
    adj = {v: set() for v in range(1, r + 1)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    leaves = [v for v in adj if len(adj[v]) == 1]
    heapq.heapify(leaves)
    seq = []
    for _ in range(r - 2):
        leaf = heapq.heappop(leaves)
        (nb,) = adj[leaf]
        seq.append(nb)
        adj[nb].discard(leaf)
        adj[leaf].clear()
        if len(adj[nb]) == 1:
            heapq.heappush(leaves, nb)
    return tuple(seq)


def enumerate_trees(r):
    """Stream of all r^(r-2) labeled spanning trees of K_r via the Prufer bijection."""
    if r < 2:
        raise ValueError("need r >= 2")
    if r > TREE_GUARD:
        raise ValueError(f"enumeration guarded at r <= {TREE_GUARD}")
    if r == 2:
        yield ((1, 2),)
        return
    for seq in product(range(1, r + 1), repeat=r - 2):
        yield prufer_decode(seq, r)


def enumerate_directed(r):
    """Stream of directed trees: every undirected tree in each of its 2^(r-1) orientations."""
    for edges in enumerate_trees(r):
        m = len(edges)
        for mask in range(1 << m):
            oriented = tuple(
                (a, b) if (mask >> i) & 1 == 0 else (b, a)
                for i, (a, b) in enumerate(edges)
            )
            yield DirectedTree(r=r, edges=oriented)


def incidence(tree):
    """Per-vertex (ingoing, outgoing, total) line counts of a directed tree."""
    theta = np.zeros(tree.r, dtype=int)
    theta_bar = np.zeros(tree.r, dtype=int)
    for a, b in tree.edges:
        theta_bar[a - 1] += 1  # outgoing at the first component
        theta[b - 1] += 1      # ingoing at the second
    return theta, theta_bar, theta + theta_bar


def degree_sequences(r):
    """All degree sequences (d_1..d_r), d_q >= 1, summing to 2(r-1)."""

    def rec(remaining, slots):
        if slots == 1:
            if remaining >= 1:
                yield (remaining,)
            return
        for d in range(1, remaining - slots + 2):
            for rest in rec(remaining - d, slots - 1):
                yield (d,) + rest

    yield from rec(2 * (r - 1), r)


def tree_count_formula(r, degrees):
    """Number of labeled trees with the given degree sequence: (r-2)! / prod (d_q - 1)!."""
    if sum(degrees) != 2 * (r - 1) or any(d < 1 for d in degrees):
        raise ValueError("degrees must be >= 1 and sum to 2(r-1)")
    out = math.factorial(r - 2)
    for d in degrees:
        out //= math.factorial(d - 1)
    return out


def cayley_count_check(r, degrees, enumerated=None):
    """Formula count vs exhaustive enumeration, plus the factorial identity
    (1/p!) prod d_q! = prod d_q / #{trees with these degrees}, p = r - 2."""
    degrees = tuple(degrees)
    if enumerated is None:
        enumerated = 0
        for edges in enumerate_trees(r):
            deg = [0] * (r + 1)
            for a, b in edges:
                deg[a] += 1
                deg[b] += 1
            if tuple(deg[1:]) == degrees:
                enumerated += 1
    formula = tree_count_formula(r, degrees)
    p = r - 2
    lhs = math.prod(math.factorial(d) for d in degrees) / math.factorial(p)
    rhs = math.prod(degrees) / formula if formula else math.inf
    return {
        "enumerated": enumerated,
        "formula": formula,
        "factorial_identity_lhs": lhs,
        "factorial_identity_rhs": rhs,
    }


def path_forest_decompose(tree):
    """Unique path from vertex r-1 to vertex r, plus the rooted forests hanging off it.

    Returns (path_vertices, hanging) where hanging[s] is the set of non-root
    vertices of the subtree rooted at path vertex s (empty set if none).
    """
    r = tree.r
    if r < 2:
        raise ValueError("need r >= 2")
    src, dst = r - 1, r
    adj = {v: set() for v in range(1, r + 1)}
    for a, b in tree.undirected():
        adj[a].add(b)
        adj[b].add(a)
    # BFS path
    prev = {src: None}
    frontier = [src]
    while frontier and dst not in prev:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in prev:
                    prev[v] = u
                    nxt.append(v)
        frontier = nxt
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    path.reverse()  # src .. dst
    on_path = set(path)
    path_edges = {tuple(sorted(e)) for e in zip(path[:-1], path[1:])}
    hanging = []
    for root in path:
        seen = {root}
        stack = [root]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if tuple(sorted((u, v))) in path_edges or v in seen or v in on_path:
                    continue
                seen.add(v)
                stack.append(v)
        hanging.append(seen - {root})
    return path, hanging


def binomial_resummation(m, delta):
    """sum_theta C(m, theta) delta^(m - theta) and its closed form (1 + delta)^m."""
    total = sum(math.comb(m, th) * delta ** (m - th) for th in range(m + 1))
    return total, (1 + delta) ** m


def degree_product_bound_check(r):
    """max prod d_q over degree sequences with sum 2(r-1), against 2^(r-1)."""
    best = 0
    for d in degree_sequences(r):
        best = max(best, math.prod(d))
    return best, 2 ** (r - 1)


def series_bound(p, alpha, norm_v, norm_a_total, norm_b_local):
    """Per-order bound on the weighted order-p term: (2 alpha)^{p+1} ||V||^p |||A||| ||B||."""
    if p < 0:
        raise ValueError("order p must be >= 0")
    return (2.0 * alpha) ** (p + 1) * norm_v**p * norm_a_total * norm_b_local


def series_sum(alpha, norm_v, norm_a_total, norm_b_local, from_p=0):
    """Geometric sum with ratio alpha ||V|| matching the stated decay-bound prefactors.

    from_p = 0 gives 2 alpha / (1 - alpha ||V||), from_p = 1 the subtracted form
    2 alpha^2 ||V|| / (1 - alpha ||V||), times |||A||| ||B||.
    """
    x = alpha * norm_v
    if x >= 1.0:
        raise ValueError("series hypothesis alpha * ||V|| < 1 violated")
    return 2.0 * alpha * x**from_p / (1.0 - x) * norm_a_total * norm_b_local


def combinatorics_audit(r_cayley=7, r_directed=6, r_products=8, m_binomial=12, delta=2):
    """Machine-checkable audit of the counting identities; returns a JSON-able report."""
    report = {"cayley": [], "directed_counts": [], "binomial": [], "degree_products": []}
    for r in range(2, r_cayley + 1):
        by_deg = {}
        for edges in enumerate_trees(r):
            deg = [0] * (r + 1)
            for a, b in edges:
                deg[a] += 1
                deg[b] += 1
            key = tuple(deg[1:])
            by_deg[key] = by_deg.get(key, 0) + 1
        exact = all(
            by_deg.get(tuple(d), 0) == tree_count_formula(r, d)
            for d in degree_sequences(r)
        )
        report["cayley"].append({"r": r, "total": sum(by_deg.values()),
                                 "cayley_total": r ** (r - 2), "per_degree_exact": exact})
    for r in range(2, r_directed + 1):
        count = sum(1 for _ in enumerate_directed(r))
        report["directed_counts"].append(
            {"r": r, "count": count, "expected": 2 ** (r - 1) * r ** (r - 2)})
    for m in range(0, m_binomial + 1):
        total, closed = binomial_resummation(m, delta)
        report["binomial"].append({"m": m, "sum": total, "closed": closed})
    for r in range(2, r_products + 1):
        best, bound = degree_product_bound_check(r)
        report["degree_products"].append({"r": r, "max_product": best, "bound": bound})
    return report

"""Exact l-matching counts: polynomial recursion, sparse enumeration, complete-graph closed forms."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

from . import CapExceeded
from .graph import Graph

DEFAULT_POLY_CAP = 28
SPARSE_MAX_L = 4


def double_factorial(m: int) -> int:
    """m(m-2)(m-4)...; (-1)!! = 0!! = 1."""
    if m < -1:
        raise ValueError(f"double factorial undefined for m={m}")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def matchings_complete(n: int, ell: int) -> int:
    """Number of ell-matchings in K_n."""
    if ell < 0 or 2 * ell > n:
        raise ValueError(f"no {ell}-matchings fit in K_{n}")
    return comb(n, 2 * ell) * double_factorial(2 * ell - 1)


def delta_r(n: int, ell: int, r: int) -> int:
    """Number of ell-matchings of K_n containing a fixed r-matching."""
    if not 0 <= r <= ell or 2 * ell > n:
        raise ValueError(f"delta_r needs 0 <= r <= ell and 2*ell <= n (got n={n}, ell={ell}, r={r})")
    return comb(n - 2 * r, 2 * ell - 2 * r) * double_factorial(2 * ell - 2 * r - 1)


@dataclass(frozen=True)
class CountVector:
    n: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != self.n // 2 + 1:
            raise ValueError("CountVector must have floor(n/2)+1 entries")

    def __getitem__(self, k: int) -> int:
        if 0 <= k < len(self.counts):
            return self.counts[k]
        if k > self.n // 2:
            return 0
        raise IndexError(k)

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def as_list(self) -> list[int]:
        return list(self.counts)


@dataclass
class MemoCache:
    """Per-graph memo from surviving-vertex bitmask to matching polynomial coefficients."""

    table: dict[int, tuple[int, ...]] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    def __len__(self):
        return len(self.table)


def _poly_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for k, c in enumerate(b):
        out[k] += c
    return out


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _components(mask: int, adj) -> list[int]:
    comps = []
    rest = mask
    while rest:
        low = rest & -rest
        comp = low
        frontier = low
        while frontier:
            nbrs = 0
            f = frontier
            while f:
                b = f & -f
                nbrs |= adj[b.bit_length() - 1]
                f ^= b
            frontier = nbrs & rest & ~comp
            comp |= frontier
        comps.append(comp)
        rest &= ~comp
    return comps


def frontier_order(adj) -> list[int]:
    """Greedy vertex order keeping the set of placed-but-open neighbours small."""
    n = len(adj)
    placed = 0
    reach = 0
    order = []
    for _ in range(n):
        best_key, best_v = None, -1
        for v in range(n):
            if placed >> v & 1:
                continue
            front = (reach | adj[v]) & ~(placed | 1 << v)
            key = (front.bit_count(), -(adj[v] & placed).bit_count())
            if best_key is None or key < best_key:
                best_key, best_v = key, v
        order.append(best_v)
        placed |= 1 << best_v
        reach |= adj[best_v]
    return order


class _Kernel:
    """Vertex recursion M(S) = M(S-v) + x * sum_{u~v} M(S-u-v), memoised on the surviving mask.

    Vertices are relabelled by `frontier_order`, and v is always the lowest surviving
    label; this keeps the number of distinct surviving masks small.
    """

    def __init__(self, adj, cache: MemoCache):
        order = frontier_order(adj)
        pos = {v: i for i, v in enumerate(order)}
        radj = [0] * len(adj)
        for v, nb in enumerate(adj):
            r = 0
            while nb:
                b = nb & -nb
                r |= 1 << pos[b.bit_length() - 1]
                nb ^= b
            radj[pos[v]] = r
        self.adj = radj
        self.cache = cache

    def poly(self, mask: int) -> tuple[int, ...]:
        table = self.cache.table
        hit = table.get(mask)
        if hit is not None:
            self.cache.hits += 1
            return hit
        self.cache.misses += 1
        comps = _components(mask, self.adj)
        if len(comps) > 1:
            out = [1]
            for comp in comps:
                out = _poly_mul(out, self.poly(comp))
        else:
            out = self._connected(mask)
        res = tuple(out)
        table[mask] = res
        return res

    def _connected(self, mask: int):
        size = mask.bit_count()
        if size <= 1:
            return [1]
        if size == 2:
            return [1, 1]
        low = mask & -mask
        rest = mask ^ low
        out = list(self.poly(rest))
        nbrs = self.adj[low.bit_length() - 1] & rest
        acc = [0]
        while nbrs:
            b = nbrs & -nbrs
            acc = _poly_add(acc, self.poly(rest ^ b))
            nbrs ^= b
        return _poly_add(out, [0] + acc)


def count_matchings(G: Graph, cap: int = DEFAULT_POLY_CAP, cache: MemoCache | None = None) -> CountVector:
    """Exact m_k for k = 0..floor(n/2) via the vertex recursion with component factorization."""
    if G.n > cap:
        raise CapExceeded(f"count_matchings: n={G.n} exceeds cap {cap}")
    if cache is None:
        cache = MemoCache()
    kernel = _Kernel(G.adjacency, cache)
    coeffs = list(kernel.poly((1 << G.n) - 1)) if G.n else [1]
    size = G.n // 2 + 1
    coeffs = (coeffs + [0] * size)[:size]
    return CountVector(G.n, tuple(coeffs))


def count_l_matchings_sparse(G: Graph, ell: int) -> int:
    """Exact number of ell-matchings for small ell (<= 4) at any n.

    Edge tuples are enumerated in increasing edge-index order with vertex-disjointness
    pruning; the last edge is counted rather than enumerated, by inclusion-exclusion
    over the at most 2(ell-1) covered vertices.
    """
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if ell > SPARSE_MAX_L:
        raise ValueError(f"sparse kernel supports ell <= {SPARSE_MAX_L}, got {ell}")
    if ell == 0:
        return 1
    edges = G.edges()
    E = len(edges)
    if ell == 1 or E == 0:
        return E if ell == 1 else 0
    # position of each edge in the sorted list, and per-vertex incident positions
    incident: list[list[int]] = [[] for _ in range(G.n)]
    for pos, (u, v) in enumerate(edges):
        incident[u].append(pos)
        incident[v].append(pos)
    position = {e: pos for pos, e in enumerate(edges)}

    def later(vertex: int, pos: int) -> int:
        lst = incident[vertex]
        return len(lst) - bisect_right(lst, pos)

    def count_last(covered: list[int], pos: int) -> int:
        # edges with position > pos avoiding every covered vertex
        total = E - 1 - pos
        for x in covered:
            total -= later(x, pos)
        for x, y in combinations(covered, 2):
            q = position.get((x, y) if x < y else (y, x))
            if q is not None and q > pos:
                total += 1
        return total

    def extend(start: int, covered: list[int], depth: int) -> int:
        if depth == 1:
            return count_last(covered, start - 1)
        total = 0
        cov = set(covered)
        for pos in range(start, E):
            u, v = edges[pos]
            if u in cov or v in cov:
                continue
            total += extend(pos + 1, covered + [u, v], depth - 1)
        return total

    return extend(0, [], ell)


def brute_force_counts(G: Graph) -> list[int]:
    """m_k by checking every edge subset; exponential, for cross-checks on tiny graphs."""
    edges = G.edges()
    out = [0] * (G.n // 2 + 1)
    for k in range(len(out)):
        for sub in combinations(edges, k):
            verts = [x for e in sub for x in e]
            if len(set(verts)) == len(verts):
                out[k] += 1
    return out

"""Exhaustive censuses of pairs and k-tuples of ell-matchings of K_n."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, permutations, product
from typing import Sequence

import numpy as np

from . import CapExceeded
from .counting import delta_r, double_factorial, matchings_complete
from .graph import Matching

DEFAULT_MATCHING_CAP = 10**5
DEFAULT_PAIR_CAP = 4 * 10**6
DEFAULT_TUPLE_CAP = 10**7


# -- matchings of K_n --------------------------------------------------------


def _gen_matchings(n: int, ell: int):
    all_edges = [(u, v) for u in range(n) for v in range(u + 1, n)]

    def rec(start, used, chosen):
        if len(chosen) == ell:
            yield tuple(chosen)
            return
        for idx in range(start, len(all_edges)):
            u, v = all_edges[idx]
            if used >> u & 1 or used >> v & 1:
                continue
            chosen.append((u, v))
            yield from rec(idx + 1, used | 1 << u | 1 << v, chosen)
            chosen.pop()

    yield from rec(0, 0, [])


def enumerate_matchings(n: int, ell: int, cap: int = DEFAULT_MATCHING_CAP) -> list[Matching]:
    """All ell-matchings of K_n in lexicographic order of their sorted edge lists."""
    s = matchings_complete(n, ell)
    if s > cap:
        raise CapExceeded(f"{s} matchings of size {ell} in K_{n} exceed cap {cap}")
    return [Matching(edges) for edges in _gen_matchings(n, ell)]


@dataclass(frozen=True)
class MatchingIndex:
    """Matchings of K_n with edge and vertex bitmasks, shared by the census routines."""

    n: int
    ell: int
    matchings: tuple[Matching, ...]
    edge_masks: tuple[int, ...]
    vertex_masks: tuple[int, ...]

    @property
    def s(self) -> int:
        return len(self.matchings)

    def intersections(self) -> np.ndarray:
        return _intersection_matrix(self)


@lru_cache(maxsize=32)
def matching_index(n: int, ell: int, cap: int = DEFAULT_MATCHING_CAP) -> MatchingIndex:
    ms = enumerate_matchings(n, ell, cap)
    return MatchingIndex(
        n,
        ell,
        tuple(ms),
        tuple(m.edge_mask(n) for m in ms),
        tuple(m.vertex_mask() for m in ms),
    )


@lru_cache(maxsize=32)
def _intersection_matrix(idx: MatchingIndex) -> np.ndarray:
    em = idx.edge_masks
    s = len(em)
    out = np.zeros((s, s), dtype=np.int16)
    for a in range(s):
        ea = em[a]
        row = out[a]
        for b in range(s):
            row[b] = (ea & em[b]).bit_count()
    return out


# -- pair census -------------------------------------------------------------


@dataclass
class PairCensusTable:
    n: int
    ell: int
    table: dict[tuple[int, int], int]

    def f(self, i: int, n2: int) -> int:
        return self.table.get((i, n2), 0)

    @property
    def marginals(self) -> list[int]:
        out = [0] * (self.ell + 1)
        for (i, _), c in self.table.items():
            out[i] += c
        return out

    @property
    def total(self) -> int:
        return sum(self.table.values())

    def rows(self) -> list[tuple[int, int, int]]:
        return [(i, n2, self.f(i, n2)) for i in range(self.ell + 1) for n2 in range(2 * self.ell + 1)]


def pair_census(n: int, ell: int, cap: int = DEFAULT_PAIR_CAP, method: str = "auto") -> PairCensusTable:
    """Exact f(i, n2) over ordered pairs of ell-matchings of K_n.

    method="pairs" runs the full double loop. method="orbit" fixes the first matching and
    multiplies by s, which is exact because relabelling vertices acts transitively on the
    matchings while preserving (i, n2). "auto" uses the double loop when s^2 <= cap.
    """
    s = matchings_complete(n, ell)
    if method == "auto":
        method = "pairs" if s * s <= cap else "orbit"
    if method == "pairs" and s * s > cap:
        raise CapExceeded(f"{s * s} ordered pairs exceed cap {cap}")
    if s > cap:
        raise CapExceeded(f"{s} matchings exceed cap {cap}")
    if method not in ("pairs", "orbit"):
        raise ValueError(f"unknown census method {method!r}")
    idx = matching_index(n, ell)
    em, vm = idx.edge_masks, idx.vertex_masks
    counts: Counter = Counter()
    firsts = range(s) if method == "pairs" else range(1)
    for a in firsts:
        ea, va = em[a], vm[a]
        for b in range(s):
            counts[(ea & em[b]).bit_count(), (va & vm[b]).bit_count()] += 1
    if method == "orbit":
        counts = Counter({key: c * s for key, c in counts.items()})
    return PairCensusTable(n, ell, dict(counts))


def pairs_in_class(n: int, ell: int, i: int, n2: int | None = None):
    """Ordered pairs (M, M') of ell-matchings with |M & M'| = i (and n2 shared vertices if given)."""
    idx = matching_index(n, ell)
    em, vm, ms = idx.edge_masks, idx.vertex_masks, idx.matchings
    for a in range(idx.s):
        for b in range(idx.s):
            if (em[a] & em[b]).bit_count() != i:
                continue
            if n2 is not None and (vm[a] & vm[b]).bit_count() != n2:
                continue
            yield ms[a], ms[b]


@dataclass
class DegreeReport:
    n: int
    ell: int
    D: int
    d: int
    upper: int
    lower: int  # lower bound on D + 1 (neighbours including the matching itself)
    lower_d: int  # second Bonferroni bound on d
    regular: bool


def degree_report(n: int, ell: int) -> DegreeReport:
    """Degree D in the intersection graph and number d of kissing partners, with their bounds."""
    idx = matching_index(n, ell)
    inter = idx.intersections()
    shares = (inter > 0).sum(axis=1) - 1
    kisses = (inter == 1).sum(axis=1)
    upper = ell * delta_r(n, ell, 1)
    pairs = (ell * (ell - 1) // 2) * (delta_r(n, ell, 2) if ell >= 2 else 0)
    regular = bool((shares == shares[0]).all() and (kisses == kisses[0]).all())
    return DegreeReport(
        n, ell, int(shares.max()), int(kisses.max()), upper, upper - pairs, upper - 2 * pairs, regular
    )


# -- tuple classification ----------------------------------------------------


@dataclass(frozen=True)
class Component:
    members: tuple[int, ...]
    n_tilde: int
    m_tilde: int
    tag: str


@dataclass(frozen=True)
class TupleClass:
    k: int
    components: tuple[Component, ...]
    xvec: tuple[int, ...]
    in_K: bool
    in_K_prime: bool
    odd_part: str | None = None  # "K'0" (flower) or "K'1" (chained triple) for odd k in K'


def _component_positions(masks: Sequence[int]) -> list[list[int]]:
    k = len(masks)
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(k):
        for b in range(a + 1, k):
            if masks[a] & masks[b]:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for a in range(k):
        groups.setdefault(find(a), []).append(a)
    return sorted(groups.values())


def _structure_tag(ms: Sequence[int]) -> str:
    t = len(ms)
    if t == 2:
        return "kissing-pair" if (ms[0] & ms[1]).bit_count() == 1 else "other"
    if t >= 3:
        common = ms[0] & ms[1]
        if common.bit_count() == 1 and all(ms[a] & ms[b] == common for a, b in combinations(range(t), 2)):
            return f"flower({t})"
    if t == 3:
        for a, b, c in permutations(ms):
            if (a & b).bit_count() == 1 and (b & c).bit_count() == 1 and a & c == 0:
                return "chained-triple"
    return "other"


def _xvec(masks: Sequence[int]) -> tuple[int, ...]:
    k = len(masks)
    mult: Counter = Counter()
    for m in masks:
        while m:
            b = m & -m
            mult[b] += 1
            m ^= b
    x = [0] * k
    for c in mult.values():
        x[c - 1] += 1
    return tuple(x)


def classify_masks(masks: Sequence[int]) -> TupleClass:
    k = len(masks)
    comps = []
    for members in _component_positions(masks):
        ms = [masks[j] for j in members]
        union = 0
        for m in ms:
            union |= m
        comps.append(Component(tuple(members), len(members), union.bit_count(), _structure_tag(ms)))
    in_K = all(c.n_tilde >= 2 for c in comps)
    in_Kp = False
    odd_part = None
    if in_K and len(comps) == k // 2 and all(c.n_tilde in (2, 3) for c in comps):
        in_Kp = True
        for c in comps:
            if c.n_tilde == 2 and c.tag != "kissing-pair":
                in_Kp = False
            if c.n_tilde == 3:
                if c.tag == "chained-triple":
                    odd_part = "K'1"
                elif c.tag == "flower(3)":
                    odd_part = "K'0"
                else:
                    in_Kp = False
        if not in_Kp:
            odd_part = None
    return TupleClass(k, tuple(comps), _xvec(masks), in_K, in_Kp, odd_part)


def _masks_of(tup: Sequence[Matching]) -> list[int]:
    sizes = {m.size for m in tup}
    if len(sizes) > 1:
        raise ValueError("all matchings in a tuple must have the same size")
    n = max((max(m.vertices) for m in tup if m.size), default=0) + 2
    return [m.edge_mask(n) for m in tup]


def classify_tuple(tup: Sequence[Matching]) -> TupleClass:
    """Components of the intersection structure of a k-tuple, with tags, x-vector and K/K' flags."""
    return classify_masks(_masks_of(tup))


# -- expectations of centred products ----------------------------------------


def _union_sizes(masks: Sequence[int]) -> list[int]:
    k = len(masks)
    unions = [0] * (1 << k)
    for S in range(1, 1 << k):
        low = S & -S
        unions[S] = unions[S ^ low] | masks[low.bit_length() - 1]
    return [u.bit_count() for u in unions]


def y_terms(masks: Sequence[int], ell: int) -> Counter:
    """E prod (X_j - p^ell) as {exponent: integer coefficient}, by inclusion-exclusion over subsets."""
    k = len(masks)
    sizes = _union_sizes(masks)
    out: Counter = Counter()
    for S in range(1 << k):
        missing = k - S.bit_count()
        out[ell * missing + sizes[S]] += -1 if missing % 2 else 1
    return out


def eval_poly(poly: dict[int, int], p) -> Fraction:
    p = Fraction(p)
    return sum((c * p**e for e, c in poly.items() if c), Fraction(0))


def y_product_expectation(tup: Sequence[Matching], p) -> Fraction:
    if len(tup) > 6:
        raise ValueError("y_product_expectation supports k <= 6")
    ell = tup[0].size
    return eval_poly(y_terms(_masks_of(tup), ell), p)


@dataclass
class CheckP:
    per_component: list[Fraction]
    expectations: list[Fraction]
    value: Fraction
    bound_holds: list[bool]


def _check_p_component(n_tilde: int, m_tilde: int, ell: int, p: Fraction) -> Fraction:
    if n_tilde <= 2:
        return p**m_tilde - p ** (n_tilde * ell)
    return p**m_tilde


def check_p(tup: Sequence[Matching], p) -> CheckP:
    """Per-component check-p values, their product, and the bound |E Y_C| <= 2^n_C * check-p_C."""
    p = Fraction(p)
    masks = _masks_of(tup)
    ell = tup[0].size
    cls = classify_masks(masks)
    per, exps, ok = [], [], []
    value = Fraction(1)
    for c in cls.components:
        pc = _check_p_component(c.n_tilde, c.m_tilde, ell, p)
        ey = eval_poly(y_terms([masks[j] for j in c.members], ell), p)
        per.append(pc)
        exps.append(ey)
        ok.append(abs(ey) <= 2**c.n_tilde * pc)
        value *= pc
    return CheckP(per, exps, value, ok)


def check_p_poly(masks: Sequence[int], cls: TupleClass, ell: int) -> Counter:
    """Check-p of a whole tuple as {exponent: coefficient}."""
    poly: Counter = Counter({0: 1})
    for c in cls.components:
        if c.n_tilde <= 2:
            factor = {c.m_tilde: 1}
            factor[c.n_tilde * ell] = factor.get(c.n_tilde * ell, 0) - 1
        else:
            factor = {c.m_tilde: 1}
        nxt: Counter = Counter()
        for e1, c1 in poly.items():
            for e2, c2 in factor.items():
                if c2:
                    nxt[e1 + e2] += c1 * c2
        poly = nxt
    return poly


# -- k-tuple sums -------------------------------------------------------------


@dataclass
class TupleSums:
    n: int
    ell: int
    k: int
    count_K: int = 0
    count_K_prime: int = 0
    count_K_prime_0: int = 0
    count_K_prime_1: int = 0
    moment_poly: Counter = field(default_factory=Counter)
    check_p_K: Counter = field(default_factory=Counter)
    check_p_K_prime: Counter = field(default_factory=Counter)

    def moment(self, p) -> Fraction:
        return eval_poly(self.moment_poly, p)


def iter_K_tuples(n: int, ell: int, k: int, cap: int = DEFAULT_TUPLE_CAP):
    """Index tuples in [s]^k in which every member shares an edge with another member."""
    idx = matching_index(n, ell)
    s = idx.s
    if s**k > cap:
        raise CapExceeded(f"s^k = {s}^{k} tuples exceed cap {cap}")
    if k == 1:
        return
    A = idx.intersections() > 0
    for prefix in product(range(s), repeat=k - 1):
        rows = [A[a] for a in prefix]
        cand = np.logical_or.reduce(rows) if k > 2 else rows[0].copy()
        for j, a in enumerate(prefix):
            if not any(A[a, b] for t, b in enumerate(prefix) if t != j):
                cand &= A[a]
        for last in np.flatnonzero(cand).tolist():
            yield prefix + (last,)


def tuple_sums(n: int, ell: int, k: int, cap: int = DEFAULT_TUPLE_CAP) -> TupleSums:
    idx = matching_index(n, ell)
    em = idx.edge_masks
    out = TupleSums(n, ell, k)
    sig_counts: Counter = Counter()
    for tup in iter_K_tuples(n, ell, k, cap):
        masks = [em[a] for a in tup]
        cls = classify_masks(masks)
        out.count_K += 1
        sig_counts[tuple(_union_sizes(masks))] += 1
        cp = check_p_poly(masks, cls, ell)
        for e, c in cp.items():
            out.check_p_K[e] += c
        if cls.in_K_prime:
            out.count_K_prime += 1
            if cls.odd_part == "K'0":
                out.count_K_prime_0 += 1
            elif cls.odd_part == "K'1":
                out.count_K_prime_1 += 1
            for e, c in cp.items():
                out.check_p_K_prime[e] += c
    for sizes, mult in sig_counts.items():
        for S, size in enumerate(sizes):
            missing = k - S.bit_count()
            out.moment_poly[ell * missing + size] += mult * (-1 if missing % 2 else 1)
    return out


def central_moment_tuple_sum(n: int, ell: int, p, k: int, cap: int = DEFAULT_TUPLE_CAP) -> Fraction:
    """Exact k-th central moment of X_{n,ell} in G(n, p), summed over tuples in K."""
    return tuple_sums(n, ell, k, cap).moment(p)


def count_K_prime(n: int, ell: int, k: int, cap: int = DEFAULT_TUPLE_CAP) -> int:
    return tuple_sums(n, ell, k, cap).count_K_prime


def count_T(n: int, ell: int, k: int, cap: int = DEFAULT_TUPLE_CAP) -> int:
    """Sequences of k/2 ordered kissing pairs, each pair edge-disjoint from all earlier members."""
    if k % 2:
        raise ValueError("count_T is defined for even k")
    idx = matching_index(n, ell)
    if idx.s**k > cap:
        raise CapExceeded(f"s^k = {idx.s}^{k} tuples exceed cap {cap}")
    inter = idx.intersections()
    kiss = [(int(a), int(b)) for a, b in zip(*np.nonzero(inter == 1))]

    def rec(depth, earlier):
        if depth == k // 2:
            return 1
        total = 0
        for a, b in kiss:
            if all(inter[a, t] == 0 and inter[b, t] == 0 for t in earlier):
                total += rec(depth + 1, earlier + [a, b])
        return total

    return rec(0, [])


# -- component bound over all connected multisets ------------------------------


@dataclass
class BoundCheck:
    checked: int
    violations: list


def component_bound_check(n: int, ell: int, k_max: int, ps: Sequence) -> BoundCheck:
    """|E Y_C| <= 2^n_C check-p_C for every connected multiset of at most k_max matchings.

    Every component of every k-tuple is such a multiset; the bound does not depend on order.
    """
    idx = matching_index(n, ell)
    em = idx.edge_masks
    ps = [Fraction(p) for p in ps]
    cache: dict = {}
    checked = 0
    violations = []
    for size in range(1, k_max + 1):
        for combo in combinations_with_replacement(range(idx.s), size):
            masks = [em[a] for a in combo]
            if len(_component_positions(masks)) != 1:
                continue
            checked += 1
            union = 0
            for m in masks:
                union |= m
            key = (size, tuple(_union_sizes(masks)))
            if key not in cache:
                terms = y_terms(masks, ell)
                bad = []
                for p in ps:
                    ey = eval_poly(terms, p)
                    bound = 2**size * _check_p_component(size, union.bit_count(), ell, p)
                    if abs(ey) > bound:
                        bad.append((p, ey, bound))
                cache[key] = bad
            if cache[key]:
                violations.append((combo, cache[key]))
    return BoundCheck(checked, violations)


# -- constructed structures -----------------------------------------------------


def kissing_pair(ell: int) -> tuple[Matching, Matching]:
    """Two ell-matchings sharing exactly the edge (0, 1)."""
    a = [(0, 1)] + [(2 + 2 * j, 3 + 2 * j) for j in range(ell - 1)]
    off = 2 * ell
    b = [(0, 1)] + [(off + 2 * j, off + 1 + 2 * j) for j in range(ell - 1)]
    return Matching.of(a), Matching.of(b)


def chained_triple(ell: int) -> tuple[Matching, Matching, Matching]:
    """(A, B, C) with |A&B| = |B&C| = 1 and A, C edge-disjoint."""
    nxt = iter(range(2, 10**6))

    def fresh():
        u = next(nxt)
        return (u, next(nxt))

    e1, e2 = (0, 1), fresh()
    A = [e1] + [fresh() for _ in range(ell - 1)]
    B = [e1, e2] + [fresh() for _ in range(ell - 2)]
    C = [e2] + [fresh() for _ in range(ell - 1)]
    return Matching.of(A), Matching.of(B), Matching.of(C)


def flower(ell: int, petals: int) -> tuple[Matching, ...]:
    nxt = iter(range(2, 10**6))
    out = []
    for _ in range(petals):
        edges = [(0, 1)]
        for _ in range(ell - 1):
            u = next(nxt)
            edges.append((u, next(nxt)))
        out.append(Matching.of(edges))
    return tuple(out)


def disjoint_kissing_pairs(ell: int, count: int) -> list[Matching]:
    """`count` kissing pairs on disjoint vertex blocks, flattened pair by pair."""
    out = []
    for c in range(count):
        a, b = kissing_pair(ell)
        shift = c * (4 * ell)
        out.append(Matching.of([(u + shift, v + shift) for u, v in a]))
        out.append(Matching.of([(u + shift, v + shift) for u, v in b]))
    return out


def shift_matchings(ms: Sequence[Matching], shift: int) -> list[Matching]:
    return [Matching.of([(u + shift, v + shift) for u, v in m]) for m in ms]


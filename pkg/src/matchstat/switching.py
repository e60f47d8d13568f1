"""Switching moves on pairs and tuples of matchings, exact move counts, and the L/U bounds."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import CapExceeded
from .census import DEFAULT_PAIR_CAP, classify_tuple, matching_index
from .counting import matchings_complete
from .formulas import LogReal
from .graph import Matching

SHARED_FWD = "shared-edge-fwd"
SHARED_INV = "shared-edge-inv"
N2_FWD = "n2-fwd"
N2_INV = "n2-inv"
SUBCRITICAL_FWD = "subcritical-even-fwd"


@dataclass(frozen=True)
class SwitchMove:
    """A labelled switching. Payload layouts:

    shared-edge-fwd / -inv: vertices (1, 2, 3, 4, 5, 6) as labelled in the move.
    n2-fwd: (v, a, u): M loses av and gains au.
    n2-inv: (u, v, a): M loses au and gains av.
    """

    kind: str
    payload: tuple


def _edge(u, v):
    return (u, v) if u < v else (v, u)


def _replace(M: Matching, drop, add) -> Matching:
    edges = set(M.edges)
    for u, v in drop:
        edges.remove(_edge(u, v))
    for u, v in add:
        e = _edge(u, v)
        if e in edges:
            raise ValueError(f"edge {e} already present")
        edges.add(e)
    return Matching(tuple(sorted(edges)))


def _check_pair(M, M2):
    if not isinstance(M, Matching) or not isinstance(M2, Matching):
        raise TypeError("expected a pair of Matching values")
    if M.size != M2.size:
        raise ValueError("matchings must have the same size")


# -- shared-edge switching ---------------------------------------------------


def _shared_fwd_payloads(M: Matching, M2: Matching):
    shared = sorted(M.edge_set & M2.edge_set)
    only_m = sorted(M.edge_set - M2.edge_set)
    only_m2 = sorted(M2.edge_set - M.edge_set)
    for x in shared:
        for v1, v2 in (x, x[::-1]):
            for y in only_m:
                for v3, v4 in (y, y[::-1]):
                    for z in only_m2:
                        if set(z) & set(y):
                            continue
                        for v5, v6 in (z, z[::-1]):
                            yield (v1, v2, v3, v4, v5, v6)


def _shared_inv_payloads(Q: Matching, Q2: Matching):
    pq, pq2 = Q.partner(), Q2.partner()
    cands = sorted(v for v in pq if v in pq2 and pq[v] != pq2[v])
    for v1 in cands:
        v3, v5 = pq[v1], pq2[v1]
        for v2 in cands:
            v4, v6 = pq[v2], pq2[v2]
            if len({v1, v2, v3, v4, v5, v6}) < 6:
                continue
            if pq2.get(v3) == v4 or pq.get(v5) == v6:
                continue
            yield (v1, v2, v3, v4, v5, v6)


def shared_edge_fwd_moves(M: Matching, M2: Matching) -> list[SwitchMove]:
    _check_pair(M, M2)
    return [SwitchMove(SHARED_FWD, pl) for pl in _shared_fwd_payloads(M, M2)]


def shared_edge_inv_moves(Q: Matching, Q2: Matching) -> list[SwitchMove]:
    _check_pair(Q, Q2)
    return [SwitchMove(SHARED_INV, pl) for pl in _shared_inv_payloads(Q, Q2)]


# -- n2 switching --------------------------------------------------------------


def _n2_fwd_payloads(M: Matching, M2: Matching, n: int):
    pm, pm2 = M.partner(), M2.partner()
    uncovered = [u for u in range(n) if u not in pm and u not in pm2]
    for v in sorted(pm):
        if v in pm2 and pm[v] != pm2[v]:
            for u in uncovered:
                yield (v, pm[v], u)


def _n2_inv_payloads(M: Matching, M2: Matching):
    pm, pm2 = M.partner(), M2.partner()
    only_m = sorted(u for u in pm if u not in pm2)
    only_m2 = sorted(v for v in pm2 if v not in pm)
    for u in only_m:
        a = pm[u]
        for v in only_m2:
            if a != pm2[v]:
                yield (u, v, a)


def n2_fwd_moves(M: Matching, M2: Matching, n: int) -> list[SwitchMove]:
    _check_pair(M, M2)
    return [SwitchMove(N2_FWD, pl) for pl in _n2_fwd_payloads(M, M2, n)]


def n2_inv_moves(M: Matching, M2: Matching) -> list[SwitchMove]:
    _check_pair(M, M2)
    return [SwitchMove(N2_INV, pl) for pl in _n2_inv_payloads(M, M2)]


def apply_move(move: SwitchMove, M: Matching, M2: Matching) -> tuple[Matching, Matching]:
    pl = move.payload
    if move.kind == SHARED_FWD:
        v1, v2, v3, v4, v5, v6 = pl
        return (
            _replace(M, [(v1, v2), (v3, v4)], [(v1, v3), (v2, v4)]),
            _replace(M2, [(v1, v2), (v5, v6)], [(v1, v5), (v2, v6)]),
        )
    if move.kind == SHARED_INV:
        v1, v2, v3, v4, v5, v6 = pl
        return (
            _replace(M, [(v1, v3), (v2, v4)], [(v3, v4), (v1, v2)]),
            _replace(M2, [(v1, v5), (v2, v6)], [(v1, v2), (v5, v6)]),
        )
    if move.kind == N2_FWD:
        v, a, u = pl
        return _replace(M, [(a, v)], [(a, u)]), M2
    if move.kind == N2_INV:
        u, v, a = pl
        return _replace(M, [(a, u)], [(a, v)]), M2
    raise ValueError(f"cannot apply a {move.kind} move to a pair")


# -- double counting -----------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    """F(i) -> F(i-1) when n2 is None, else F(i, n2) -> F(i, n2-1)."""

    i: int
    n2: int | None = None

    @classmethod
    def parse(cls, text: str) -> Transition:
        # "i:1-0" or "n2:1:4-3"
        parts = text.split(":")
        try:
            if parts[0] == "i" and len(parts) == 2:
                a, b = (int(x) for x in parts[1].split("-"))
                if b != a - 1:
                    raise ValueError
                return cls(a)
            if parts[0] == "n2" and len(parts) == 3:
                i = int(parts[1])
                a, b = (int(x) for x in parts[2].split("-"))
                if b != a - 1:
                    raise ValueError
                return cls(i, a)
        except ValueError:
            pass
        raise ValueError(f"bad transition {text!r}; expected 'i:A-(A-1)' or 'n2:I:A-(A-1)'")

    def label(self) -> str:
        if self.n2 is None:
            return f"i:{self.i}-{self.i - 1}"
        return f"n2:{self.i}:{self.n2}-{self.n2 - 1}"


@dataclass
class SwitchingCensus:
    n: int
    ell: int
    lhs: Counter
    rhs: Counter
    class_sizes: Counter  # keyed by Transition of the source class
    fwd_hist: dict  # Transition -> Counter(move count -> number of source pairs)
    inv_hist: dict


@lru_cache(maxsize=16)
def switching_census(n: int, ell: int, cap: int = DEFAULT_PAIR_CAP) -> SwitchingCensus:
    """One pass over all ordered pairs, accumulating forward and inverse move counts per transition."""
    s = matchings_complete(n, ell)
    if s * s > cap:
        raise CapExceeded(f"{s * s} ordered pairs exceed cap {cap}")
    idx = matching_index(n, ell)
    ms, em, vm = idx.matchings, idx.edge_masks, idx.vertex_masks
    lhs: Counter = Counter()
    rhs: Counter = Counter()
    sizes: Counter = Counter()
    fwd_hist: dict = {}
    inv_hist: dict = {}

    def note(hist, t, c):
        hist.setdefault(t, Counter())[c] += 1

    for a in range(s):
        for b in range(s):
            M, M2 = ms[a], ms[b]
            i = (em[a] & em[b]).bit_count()
            n2 = (vm[a] & vm[b]).bit_count()
            if i >= 1:
                t = Transition(i)
                c = sum(1 for _ in _shared_fwd_payloads(M, M2))
                lhs[t] += c
                sizes[t] += 1
                note(fwd_hist, t, c)
            if i + 1 <= ell:
                t = Transition(i + 1)
                c = sum(1 for _ in _shared_inv_payloads(M, M2))
                rhs[t] += c
                note(inv_hist, t, c)
            if n2 >= 1:
                t = Transition(i, n2)
                c = sum(1 for _ in _n2_fwd_payloads(M, M2, n))
                lhs[t] += c
                sizes[t] += 1
                note(fwd_hist, t, c)
            t = Transition(i, n2 + 1)
            c = sum(1 for _ in _n2_inv_payloads(M, M2))
            rhs[t] += c
            note(inv_hist, t, c)
    return SwitchingCensus(n, ell, lhs, rhs, sizes, fwd_hist, inv_hist)


def double_count_check(n: int, ell: int, transition: Transition, cap: int = DEFAULT_PAIR_CAP) -> tuple[int, int]:
    """(sum of forward moves over the source class, sum of inverse moves over the target class)."""
    census = switching_census(n, ell, cap)
    return census.lhs.get(transition, 0), census.rhs.get(transition, 0)


def all_transitions(n: int, ell: int) -> list[Transition]:
    out = [Transition(i) for i in range(1, ell + 1)]
    out += [Transition(i, n2) for i in range(ell + 1) for n2 in range(max(1, 2 * i + 1), min(2 * ell, n) + 1)]
    return out


# -- subcritical forward switching (even k) -------------------------------------


@dataclass(frozen=True)
class SubcriticalChoices:
    a_edges: tuple[tuple[tuple[int, int], ...], ...]  # per tuple position j, |I_j| - 1 edges in order
    pairing: tuple[tuple[int, int], ...]  # perfect matching P on positions 0..k-1
    f_edges: tuple[tuple[int, int], ...]  # one new shared edge per pair of P, in order


class SwitchingError(ValueError):
    pass


def _shared_parts(tup: Sequence[Matching]):
    k = len(tup)
    shared = []
    for j in range(k):
        others = set().union(*(tup[t].edge_set for t in range(k) if t != j))
        shared.append(tup[j].edge_set & others)
    return shared


def _validate_source(tup: Sequence[Matching]):
    k = len(tup)
    if k % 2 or k == 0:
        raise SwitchingError("subcritical forward switching needs even k >= 2")
    cls = classify_tuple(tup)
    if not cls.in_K or cls.in_K_prime:
        raise SwitchingError("source tuple must lie in K but not in K'")
    return cls


def subcritical_fwd_switch(tup: Sequence[Matching], choices: SubcriticalChoices, n: int) -> tuple[Matching, ...]:
    """Apply the five-step switching K(x) -> K' for even k; every step's constraint is checked."""
    _validate_source(tup)
    k = len(tup)
    ell = tup[0].size
    shared = _shared_parts(tup)
    # Step 1: delete the shared edges
    base = [set(tup[j].edge_set - shared[j]) for j in range(k)]
    all_base = set().union(*base)

    # Step 2: pad each to an (ell-1)-matching with fresh edges
    if len(choices.a_edges) != k:
        raise SwitchingError("Step 2: need one list of a-edges per tuple position")
    used = set(all_base)
    padded = []
    for j in range(k):
        want = len(shared[j]) - 1
        if len(choices.a_edges[j]) != want:
            raise SwitchingError(f"Step 2: position {j} needs {want} a-edges, got {len(choices.a_edges[j])}")
        cur = set(base[j])
        covered = {x for e in cur for x in e}
        for e in choices.a_edges[j]:
            e = _edge(*e)
            if not (0 <= e[0] < e[1] < n):
                raise SwitchingError(f"Step 2: edge {e} outside K_{n}")
            if e in used:
                raise SwitchingError(f"Step 2: edge {e} already used by a partial matching or an earlier a-edge")
            if e[0] in covered or e[1] in covered:
                raise SwitchingError(f"Step 2: edge {e} is not vertex-disjoint from position {j}")
            cur.add(e)
            used.add(e)
            covered.update(e)
        padded.append(cur)

    # Step 3: perfect matching P on positions
    flat = [x for pr in choices.pairing for x in pr]
    if sorted(flat) != list(range(k)) or any(a == b for a, b in choices.pairing):
        raise SwitchingError("Step 3: pairing must be a perfect matching on the tuple positions")

    # Step 4: one fresh shared edge per pair
    if len(choices.f_edges) != k // 2:
        raise SwitchingError(f"Step 4: need {k // 2} f-edges")
    all_padded = set().union(*padded)
    taken = set()
    for (j1, j2), f in zip(choices.pairing, choices.f_edges):
        f = _edge(*f)
        if not (0 <= f[0] < f[1] < n):
            raise SwitchingError(f"Step 4: edge {f} outside K_{n}")
        if f in all_padded or f in taken:
            raise SwitchingError(f"Step 4: edge {f} is already in some matching or an earlier f-edge")
        for j in (j1, j2):
            if any(x in f for e in padded[j] for x in e):
                raise SwitchingError(f"Step 4: edge {f} clashes with a vertex of position {j}")
        taken.add(f)
        padded[j1] = padded[j1] | {f}
        padded[j2] = padded[j2] | {f}

    # Step 5: new tuple
    out = tuple(Matching(tuple(sorted(m))) for m in padded)
    assert all(m.size == ell for m in out)
    return out


def random_subcritical_choices(tup: Sequence[Matching], n: int, rng: np.random.Generator) -> SubcriticalChoices:
    """Uniformly pick each step's selection among the currently valid options."""
    _validate_source(tup)
    k = len(tup)
    shared = _shared_parts(tup)
    base = [set(tup[j].edge_set - shared[j]) for j in range(k)]
    used = set().union(*base)
    all_edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    padded = []
    a_edges = []
    for j in range(k):
        cur = set(base[j])
        picks = []
        for _ in range(len(shared[j]) - 1):
            covered = {x for e in cur for x in e}
            opts = [e for e in all_edges if e not in used and e[0] not in covered and e[1] not in covered]
            if not opts:
                raise SwitchingError(f"Step 2: no valid a-edge left for position {j} at n={n}")
            e = opts[rng.integers(len(opts))]
            picks.append(e)
            cur.add(e)
            used.add(e)
        a_edges.append(tuple(picks))
        padded.append(cur)
    perm = rng.permutation(k).tolist()
    pairing = tuple(tuple(sorted((perm[2 * r], perm[2 * r + 1]))) for r in range(k // 2))
    all_padded = set().union(*padded)
    f_edges = []
    for j1, j2 in pairing:
        covered = {x for e in padded[j1] | padded[j2] for x in e}
        opts = [e for e in all_edges if e not in all_padded and e not in f_edges
                and e[0] not in covered and e[1] not in covered]
        if not opts:
            raise SwitchingError(f"Step 4: no valid f-edge for pair ({j1}, {j2}) at n={n}")
        f = opts[rng.integers(len(opts))]
        f_edges.append(f)
        padded[j1] = padded[j1] | {f}
        padded[j2] = padded[j2] | {f}
    return SubcriticalChoices(tuple(a_edges), pairing, tuple(f_edges))


# -- L / U bounds ----------------------------------------------------------------


@dataclass(frozen=True)
class XVector:
    xs: tuple[int, ...]

    def __post_init__(self):
        if not self.xs or any(x < 0 for x in self.xs):
            raise ValueError("x-vector entries must be nonnegative and nonempty")

    @property
    def k(self) -> int:
        return len(self.xs)

    @property
    def x1(self) -> int:
        return self.xs[0]

    def weight(self) -> int:
        return sum(j * x for j, x in enumerate(self.xs, start=1))

    def in_X(self, ell: int) -> bool:
        return self.weight() == self.k * ell and sum(j * x for j, x in enumerate(self.xs, start=1) if j >= 2) >= self.k


def _require_X(x: XVector, ell: int, k: int):
    if x.k != k:
        raise ValueError(f"x-vector has length {x.k}, expected k={k}")
    if not x.in_X(ell):
        raise ValueError(f"x-vector {x.xs} not admissible for ell={ell}, k={k}")


def beta_k(x: XVector, ell: int) -> float:
    """((kl - x1)! / (floor((kl - x1)/k)!)^k)^(1/(kl - x1))."""
    t = x.k * ell - x.x1
    if t <= 0:
        return 1.0
    logv = math.lgamma(t + 1) - x.k * math.lgamma(t // x.k + 1)
    return math.exp(logv / t)


def L_bound(x: XVector, n: int, ell: int, k: int) -> LogReal:
    """(N/2)^(kl - x1 - k/2) for even k; exponent kl - x1 - (k+1)/2 for odd k."""
    _require_X(x, ell, k)
    N = n * (n - 1) // 2
    e = k * ell - x.x1 - (k / 2 if k % 2 == 0 else (k + 1) / 2)
    return LogReal.exp(e * math.log(N / 2))


def U_bound(x: XVector, n: int, ell: int, k: int) -> LogReal:
    _require_X(x, ell, k)
    N = n * (n - 1) // 2
    t = k * ell - x.x1
    ell_exp = t - k if k % 2 == 0 else t - k - 1
    logv = (k - 1) * math.log(t) + ell_exp * math.log(ell) + sum(x.xs[1:]) * math.log(N) + t * math.log(beta_k(x, ell))
    return LogReal.exp(logv)


def p_ratio(x: XVector, ell: int, p: float, k: int) -> LogReal:
    """p^(sum x_r) / (p^(kl - k/2) (1-p)^(k/2))."""
    _require_X(x, ell, k)
    logv = sum(x.xs) * math.log(p) - (k * ell - k / 2) * math.log(p) - (k / 2) * math.log1p(-p)
    return LogReal.exp(logv)


def switching_bound(x: XVector, n: int, ell: int, p: float, k: int) -> LogReal:
    """U * p_ratio / L, the bound on sum over K(x) relative to sum over K'."""
    return U_bound(x, n, ell, k) * p_ratio(x, ell, p, k) / L_bound(x, n, ell, k)


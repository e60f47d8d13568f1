"""Graphs as edge bitsets, canonical matchings, and seeded random-graph samplers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np


def edge_index(u: int, v: int, n: int) -> int:
    """Canonical index of the edge {u, v} in K_n, in 0..C(n,2)-1."""
    if u == v:
        raise ValueError(f"loop at vertex {u}")
    if u > v:
        u, v = v, u
    if u < 0 or v >= n:
        raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
    return u * n - u * (u + 1) // 2 + (v - u - 1)


@lru_cache(maxsize=64)
def _decode_table(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((u, v) for u in range(n) for v in range(u + 1, n))


@lru_cache(maxsize=16)
def _decode_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, iv = np.triu_indices(n, k=1)
    return iu.astype(np.int64), iv.astype(np.int64)


def edge_from_index(e: int, n: int) -> tuple[int, int]:
    N = n * (n - 1) // 2
    if not 0 <= e < N:
        raise ValueError(f"edge index {e} out of range for n={n}")
    if n <= 512:
        return _decode_table(n)[e]
    iu, iv = _decode_arrays(n)
    return int(iu[e]), int(iv[e])


@dataclass(frozen=True)
class Graph:
    """Simple graph on vertices 0..n-1; bit e of `bits` is edge index e."""

    n: int
    bits: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.bits < 0 or self.bits >> (self.n * (self.n - 1) // 2):
            raise ValueError("edge bits outside the C(n,2) edge slots")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> Graph:
        bits = 0
        for u, v in edges:
            e = edge_index(u, v, n)
            if bits >> e & 1:
                raise ValueError(f"duplicate edge ({u}, {v})")
            bits |= 1 << e
        return cls(n, bits)

    @classmethod
    def from_edge_indices(cls, n: int, indices) -> Graph:
        idx = np.asarray(indices, dtype=np.int64)
        N = n * (n - 1) // 2
        if idx.size == 0:
            return cls(n, 0)
        if idx.min() < 0 or idx.max() >= N:
            raise ValueError("edge index out of range")
        flags = np.zeros(N, dtype=np.uint8)
        flags[idx] = 1
        if int(flags.sum()) != idx.size:
            raise ValueError("duplicate edge index")
        raw = np.packbits(flags, bitorder="little").tobytes()
        return cls(n, int.from_bytes(raw, "little"))

    @property
    def num_slots(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def num_edges(self) -> int:
        return self.bits.bit_count()

    @cached_property
    def edge_indices(self) -> np.ndarray:
        """Sorted edge indices as an int64 array."""
        N = self.num_slots
        if N == 0 or self.bits == 0:
            return np.zeros(0, dtype=np.int64)
        raw = self.bits.to_bytes((N + 7) // 8, "little")
        flags = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return np.flatnonzero(flags[:N]).astype(np.int64)

    def edges(self) -> list[tuple[int, int]]:
        """Edges as (u, v) with u < v, in ascending edge index."""
        if self.n <= 512:
            table = _decode_table(self.n)
            return [table[e] for e in self.edge_indices.tolist()]
        iu, iv = _decode_arrays(self.n)
        idx = self.edge_indices
        return list(zip(iu[idx].tolist(), iv[idx].tolist()))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.bits >> edge_index(u, v, self.n) & 1)

    @cached_property
    def adjacency(self) -> tuple[int, ...]:
        """Neighbourhood of each vertex as a vertex bitmask."""
        adj = [0] * self.n
        for u, v in self.edges():
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return tuple(adj)

    def remove_edge(self, u: int, v: int) -> Graph:
        e = edge_index(u, v, self.n)
        return Graph(self.n, self.bits & ~(1 << e))

    def remove_vertices(self, *vertices: int) -> Graph:
        """Same vertex set, with every edge at the given vertices deleted."""
        drop = set(vertices)
        return Graph.from_edges(self.n, [(u, v) for u, v in self.edges() if u not in drop and v not in drop])

    def disjoint_union(self, other: Graph) -> Graph:
        shift = self.n
        edges = self.edges() + [(u + shift, v + shift) for u, v in other.edges()]
        return Graph.from_edges(self.n + other.n, edges)


def complete_graph(n: int) -> Graph:
    return Graph(n, (1 << comb(n, 2)) - 1)


def empty_graph(n: int) -> Graph:
    return Graph(n, 0)


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


# -- matchings -------------------------------------------------------------


@dataclass(frozen=True)
class Matching:
    """Canonical matching: pairs stored (min, max), sorted lexicographically."""

    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u >= v:
                raise ValueError(f"edge ({u}, {v}) not stored as (min, max)")
            if u in seen or v in seen:
                raise ValueError(f"edges of a matching must be vertex-disjoint: ({u}, {v})")
            seen.update((u, v))
        if list(self.edges) != sorted(self.edges):
            raise ValueError("matching edges must be sorted")

    @classmethod
    def of(cls, pairs: Iterable) -> Matching:
        """Build from any iterable of 2-element pairs, e.g. [(0, 1), (2, 3)] or ["01", "23"]."""
        edges = []
        for pair in pairs:
            u, v = (int(c) for c in pair)
            edges.append((min(u, v), max(u, v)))
        return cls(tuple(sorted(edges)))

    @property
    def size(self) -> int:
        return len(self.edges)

    @cached_property
    def vertices(self) -> frozenset[int]:
        return frozenset(x for e in self.edges for x in e)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def vertex_mask(self) -> int:
        mask = 0
        for x in self.vertices:
            mask |= 1 << x
        return mask

    def edge_mask(self, n: int) -> int:
        mask = 0
        for u, v in self.edges:
            mask |= 1 << edge_index(u, v, n)
        return mask

    def partner(self) -> dict[int, int]:
        out = {}
        for u, v in self.edges:
            out[u] = v
            out[v] = u
        return out

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)


class PairProfile(NamedTuple):
    shared_edges: int
    shared_vertices: int
    n1: int
    n0: int
    union_edge_count: int

    @property
    def i(self) -> int:
        return self.shared_edges

    @property
    def n2(self) -> int:
        return self.shared_vertices


def pair_profile(M: Matching, M2: Matching, n: int) -> PairProfile:
    """Shared edges and the vertex split (n2 in both, n1 in exactly one, n0 in neither)."""
    if not isinstance(M, Matching) or not isinstance(M2, Matching):
        raise TypeError("pair_profile expects two Matching values")
    if M.size != M2.size:
        raise ValueError("matchings must have the same size")
    for x in M.vertices | M2.vertices:
        if not 0 <= x < n:
            raise ValueError(f"vertex {x} out of range for n={n}")
    ell = M.size
    i = len(M.edge_set & M2.edge_set)
    n2 = len(M.vertices & M2.vertices)
    n1 = 4 * ell - 2 * n2
    n0 = n - 4 * ell + n2
    return PairProfile(i, n2, n1, n0, 2 * ell - i)


# -- seeded sampling -------------------------------------------------------


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream < 0:
            raise ValueError("stream must be nonnegative")

    def generator(self) -> np.random.Generator:
        # SeedSequence hashes (seed, stream) so each stream is an independent, order-free generator.
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


def gnp_sample(n: int, p: float, seed: SeedSpec) -> Graph:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    N = n * (n - 1) // 2
    if p == 0.0 or N == 0:
        return Graph(n, 0)
    if p == 1.0:
        return complete_graph(n)
    draws = seed.generator().random(N)
    return Graph.from_edge_indices(n, np.flatnonzero(draws < p))


def gnm_sample(n: int, m: int, seed: SeedSpec) -> Graph:
    N = n * (n - 1) // 2
    if not 0 <= m <= N:
        raise ValueError(f"m={m} outside [0, {N}]")
    rng = seed.generator()
    # Partial Fisher-Yates: slot k swaps with a uniform slot in [k, N).
    slots = np.arange(N, dtype=np.int64)
    picks = rng.integers(np.arange(m), N) if m else np.zeros(0, dtype=np.int64)
    for k, j in enumerate(picks.tolist()):
        slots[k], slots[j] = slots[j], slots[k]
    return Graph.from_edge_indices(n, slots[:m])


# -- file format -------------------------------------------------------------


def format_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.num_edges}"]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError("graph file must start with a line 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise ValueError(f"header declares {m} edges but file lists {len(body)}")
    edges = []
    for row in body:
        if len(row) != 2:
            raise ValueError(f"bad edge line: {' '.join(row)}")
        edges.append((int(row[0]), int(row[1])))
    return Graph.from_edges(n, edges)


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text())


def write_graph(g: Graph, path) -> None:
    Path(path).write_text(format_graph(g))

"""Geometry of the hypercube Q_d and its bond percolation.

Vertices of Q_d are the integers in [0, 2^d); two vertices are adjacent
when they differ in exactly one bit.  Hamming-weight parity splits the
graph into the Even and Odd classes, each of size 2^(d-1).

Rank encoding.  Dropping the lowest bit maps either parity class
bijectively and order-preservingly onto [0, 2^(d-1)): the low bit of a
vertex is determined by the parity of its remaining bits.  Sets of
vertices of one parity are stored as bitmasks over these ranks.  In rank
coordinates the bipartite adjacency is simple: the even vertex of rank r
and the odd vertex of rank s are adjacent iff r == s (they differ in
coordinate 0) or r ^ s is a power of two (coordinate 1 + bit position).
Consequently two same-parity vertices are 2-neighbors (Hamming distance
two, i.e. they share a common neighbor) iff their ranks differ in one or
two bit positions.

Edges.  Every edge has exactly one even endpoint.  The edge flipping
coordinate i at the even vertex of rank r has index r*d + i, giving
d * 2^(d-1) edges in total.  A percolation instance stores one byte (0 or
1) per edge; regenerating with the same (d, p, seed) is bit-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from . import rng as prng

MIN_DIM = 2
MAX_DIM = 30


class DimensionError(ValueError):
    """Dimension outside the supported (or per-operation feasible) range."""


class Parity(Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def opposite(self) -> "Parity":
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN


def check_dim(d: int, upper: int = MAX_DIM, what: str = "d") -> None:
    if not MIN_DIM <= d <= upper:
        raise DimensionError(f"{what}={d} outside supported range [{MIN_DIM}, {upper}]")


def parity_of(v: int) -> Parity:
    return Parity.EVEN if (v.bit_count() & 1) == 0 else Parity.ODD


def rank_of(v: int) -> int:
    """Rank of a vertex within its parity class (increasing numeric order)."""
    return v >> 1


def vertex_of(parity: Parity, rank: int) -> int:
    """Inverse of rank_of for the given parity class."""
    low = rank.bit_count() & 1
    if parity is Parity.ODD:
        low ^= 1
    return (rank << 1) | low


def neighbor_rank(rank: int, i: int) -> int:
    """Rank (opposite parity) of the neighbor along coordinate i."""
    return rank if i == 0 else rank ^ (1 << (i - 1))


def incident_edge_index(d: int, parity: Parity, rank: int, i: int) -> int:
    """Index of the coordinate-i edge at the given vertex.

    Edges are indexed by their even endpoint, so for an odd vertex the
    lookup goes through its even neighbor along the same coordinate.
    """
    if parity is Parity.EVEN:
        return rank * d + i
    return neighbor_rank(rank, i) * d + i


def neighborhood_mask(d: int, rank: int) -> int:
    """Bitmask of opposite-parity ranks adjacent in the full Q_d."""
    mask = 1 << rank
    for j in range(d - 1):
        mask |= 1 << (rank ^ (1 << j))
    return mask


def two_neighbor_flips(d: int) -> list[int]:
    """Rank-space XOR masks reaching all C(d,2) 2-neighbors of a vertex."""
    flips = [1 << j for j in range(d - 1)]
    flips += [(1 << j) | (1 << k) for j in range(d - 1) for k in range(j + 1, d - 1)]
    return flips


def good_size_bound(d: int) -> int:
    """Largest admissible size of a well-separated (Good) set: floor(2^d / d^2)."""
    return (1 << d) // (d * d)


@dataclass(frozen=True)
class ParitySet:
    """A subset of one parity class, as a bitmask over parity ranks."""

    parity: Parity
    members: int

    @classmethod
    def from_ranks(cls, parity: Parity, ranks) -> "ParitySet":
        mask = 0
        for r in ranks:
            mask |= 1 << r
        return cls(parity, mask)

    @classmethod
    def from_vertices(cls, parity: Parity, vertices) -> "ParitySet":
        mask = 0
        for v in vertices:
            if parity_of(v) is not parity:
                raise ValueError(f"vertex {v} is not {parity.value}")
            mask |= 1 << rank_of(v)
        return cls(parity, mask)

    @property
    def size(self) -> int:
        return self.members.bit_count()

    def ranks(self) -> Iterator[int]:
        m = self.members
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def vertices(self) -> Iterator[int]:
        for r in self.ranks():
            yield vertex_of(self.parity, r)

    def contains_rank(self, r: int) -> bool:
        return bool((self.members >> r) & 1)


@dataclass
class PercolationInstance:
    """A seeded realization of open/closed edges of Q_d at density p.

    edges[r*d + i] is 1 iff the edge flipping coordinate i at the even
    vertex of rank r is open.  Immutable after construction; the cached
    degree arrays are derived data.
    """

    d: int
    p: float
    seed: int
    edges: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_side(self) -> int:
        """Vertices per parity class."""
        return 1 << (self.d - 1)

    @property
    def n_edges(self) -> int:
        return self.d * self.n_side

    def edge_bit(self, even_rank: int, i: int) -> int:
        return int(self.edges[even_rank * self.d + i])

    def _edge_matrix(self) -> np.ndarray:
        """Edges reshaped to (n_side, d): row = even rank, column = coordinate."""
        if "matrix" not in self._cache:
            self._cache["matrix"] = self.edges.reshape(self.n_side, self.d)
        return self._cache["matrix"]

    def degrees(self, parity: Parity) -> np.ndarray:
        """Open degree of every vertex of the class, indexed by rank."""
        key = ("deg", parity)
        if key not in self._cache:
            bits = self._edge_matrix()
            if parity is Parity.EVEN:
                deg = bits.sum(axis=1, dtype=np.int64)
            else:
                # The odd endpoint of edge (r, i) has rank r for i = 0 and
                # rank r ^ (1 << (i-1)) otherwise; the XOR is a block swap,
                # so a reversed reshape view avoids a scatter.
                deg = bits[:, 0].astype(np.int64)
                for i in range(1, self.d):
                    col = bits[:, i]
                    half = 1 << (i - 1)
                    deg += col.reshape(-1, 2, half)[:, ::-1, :].reshape(-1)
            deg.setflags(write=False)
            self._cache[key] = deg
        return self._cache[key]

    def degree_histogram(self, parity: Parity) -> np.ndarray:
        """Count of vertices of the class with each open degree 0..d."""
        key = ("hist", parity)
        if key not in self._cache:
            hist = np.bincount(self.degrees(parity), minlength=self.d + 1)
            hist.setflags(write=False)
            self._cache[key] = hist
        return self._cache[key]


def build_percolation(d: int, p: float, seed: int) -> PercolationInstance:
    """Sample every edge of Q_d open independently with probability p.

    Deterministic in (d, p, seed): edge bits come from one Philox stream
    keyed with the seed, thresholded as documented in rng.bernoulli_bits.
    """
    check_dim(d)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    gen = prng.generator(seed)
    edges = prng.bernoulli_bits(gen, d * (1 << (d - 1)), p)
    edges.setflags(write=False)
    return PercolationInstance(d=d, p=float(p), seed=seed, edges=edges)


def open_degree(inst: PercolationInstance, v: int) -> int:
    """Number of open edges incident to vertex v."""
    if not 0 <= v < (1 << inst.d):
        raise ValueError(f"vertex {v} outside [0, 2^{inst.d})")
    return int(inst.degrees(parity_of(v))[rank_of(v)])


def open_neighborhood_mask(inst: PercolationInstance, s: ParitySet) -> int:
    """Bitmask of opposite-parity ranks reachable from s via open edges."""
    d = inst.d
    edges = inst.edges
    mask = 0
    for r in s.ranks():
        for i in range(d):
            if edges[incident_edge_index(d, s.parity, r, i)]:
                mask |= 1 << neighbor_rank(r, i)
    return mask


def open_neighborhood_size(inst: PercolationInstance, s: ParitySet) -> int:
    """|N_p(s)|: vertices adjacent to s through at least one open edge."""
    return open_neighborhood_mask(inst, s).bit_count()


def full_neighborhood(d: int, s: ParitySet) -> ParitySet:
    """Neighborhood of s in the full (unpercolated) Q_d."""
    mask = 0
    for r in s.ranks():
        mask |= neighborhood_mask(d, r)
    return ParitySet(s.parity.opposite, mask)


def two_linked_components(d: int, s: ParitySet) -> list[ParitySet]:
    """Partition s into maximal 2-linked components.

    Vertices are 2-neighbors iff they share a common Q_d neighbor, i.e.
    sit at Hamming distance two (a vertex is not its own 2-neighbor).
    """
    flips = two_neighbor_flips(d)
    remaining = s.members
    components = []
    while remaining:
        low = remaining & -remaining
        frontier = [low.bit_length() - 1]
        comp = low
        remaining ^= low
        while frontier:
            r = frontier.pop()
            for m in flips:
                q = r ^ m
                bit = 1 << q
                if remaining & bit:
                    remaining ^= bit
                    comp |= bit
                    frontier.append(q)
        components.append(ParitySet(s.parity, comp))
    return components


def closure(d: int, s: ParitySet) -> ParitySet:
    """Largest same-parity set with the same full-cube neighborhood as s.

    Equals {v : N(v) is a subset of N(s)}; contains s, preserves the
    neighborhood, and is idempotent.
    """
    if s.members == 0:
        return s
    ns = full_neighborhood(d, s)
    # Any qualifying vertex has all its neighbors inside N(s), so it is a
    # neighbor of a neighbor of s; that keeps the candidate set small.
    candidates = 0
    for u in ns.ranks():
        candidates |= neighborhood_mask(d, u)
    out = 0
    cand = ParitySet(s.parity, candidates)
    for v in cand.ranks():
        if neighborhood_mask(d, v) & ~ns.members == 0:
            out |= 1 << v
    return ParitySet(s.parity, out)


def is_good(d: int, s: ParitySet) -> bool:
    """Well-separated and small: no 2-neighbor pair, size <= floor(2^d/d^2)."""
    if s.size > good_size_bound(d):
        return False
    flips = two_neighbor_flips(d)
    for r in s.ranks():
        for m in flips:
            if s.contains_rank(r ^ m):
                return False
    return True


@dataclass(frozen=True)
class IndependentSet:
    """Even- and odd-side vertex sets with no open edge between them."""

    even: ParitySet
    odd: ParitySet

    def __post_init__(self):
        if self.even.parity is not Parity.EVEN or self.odd.parity is not Parity.ODD:
            raise ValueError("sides have wrong parities")

    @property
    def defect_size(self) -> int:
        return min(self.even.size, self.odd.size)


def is_independent(inst: PercolationInstance, iset: IndependentSet) -> bool:
    """Check the no-open-edge invariant in O(|even side| * d)."""
    d = inst.d
    edges = inst.edges
    odd = iset.odd.members
    for r in iset.even.ranks():
        base = r * d
        if edges[base] and (odd >> r) & 1:
            return False
        for i in range(1, d):
            if edges[base + i] and (odd >> (r ^ (1 << (i - 1)))) & 1:
                return False
    return True


# ---------------------------------------------------------------------------
# Instance serialization: JSON header + hex dump of the packed edge bits.
# p is stored both as decimal (readability) and as raw IEEE-754 bits
# (lossless round trip).

FORMAT_NAME = "percube-instance"
FORMAT_VERSION = 1


def instance_to_json(inst: PercolationInstance) -> str:
    packed = np.packbits(inst.edges)
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "d": inst.d,
        "p": inst.p,
        "p_bits": struct.pack("<d", inst.p).hex(),
        "seed": inst.seed,
        "n_edges": inst.n_edges,
        "edges_hex": packed.tobytes().hex(),
    }
    return json.dumps(doc, sort_keys=True)


def instance_from_json(text: str) -> PercolationInstance:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME or doc.get("version") != FORMAT_VERSION:
        raise ValueError("not a recognized instance document")
    d = doc["d"]
    n_edges = doc["n_edges"]
    p = struct.unpack("<d", bytes.fromhex(doc["p_bits"]))[0]
    packed = np.frombuffer(bytes.fromhex(doc["edges_hex"]), dtype=np.uint8)
    edges = np.unpackbits(packed)[:n_edges].astype(np.uint8)
    edges.setflags(write=False)
    return PercolationInstance(d=d, p=p, seed=doc["seed"], edges=edges)


def save_instance(inst: PercolationInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(instance_to_json(inst))


def load_instance(path) -> PercolationInstance:
    with open(path) as fh:
        return instance_from_json(fh.read())

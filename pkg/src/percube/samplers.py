"""Two-stage independent-set samplers and their exact small-d laws.

The approximate sampler picks a side H, includes each vertex v of H
independently with probability phi_v / (1 + phi_v), and then fills the
unblocked part of the other side with independent lam/(1+lam) coins
(fair coins at lam=1).  The symmetric variant picks H with a fair coin;
the tilted variant with probability proportional to exp(Phi_H), computed
stably as 1 / (1 + exp(Phi_other - Phi_H)).  Outputs are independent sets
by construction: a side spans no edges (the cube is bipartite) and stage
three explicitly avoids the open neighborhood of stage one.

The exact uniform sampler (small d) draws the even side S1 with
probability proportional to 2^(2^(d-1) - N_p(S1)) -- the number of its
completions -- and then a uniform subset of the unblocked odd vertices,
which is exactly the uniform law on independent sets.

At lam != 1 the stage probabilities above reproduce the hard-core
conditional law given the side split; outputs are flagged with the
fugacity in the CLI metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import rng as prng
from .exact import exact_partition, open_edge_vertex_pairs, subset_table
from .hypercube import (
    DimensionError,
    IndependentSet,
    Parity,
    ParitySet,
    PercolationInstance,
    incident_edge_index,
    is_independent,
    neighbor_rank,
    parity_of,
    rank_of,
)
from .weights import PhiPair, degree_weights, phi_sums

APPROX_MAX_DIM = 28
UNIFORM_MAX_DIM = 5
EXACT_LAW_MAX_DIM = 4


class Variant:
    SYMMETRIC = "symmetric"
    TILTED = "tilted"


@dataclass(frozen=True)
class SampleRecord:
    set: IndependentSet
    chosen_side: Parity
    s1_size: int
    s2_size: int
    defect_size: int


@dataclass
class BatchSamples:
    """Size statistics of a batch of approximate-sampler draws."""

    sides: np.ndarray
    s1_sizes: np.ndarray
    s2_sizes: np.ndarray
    defect_sizes: np.ndarray
    n_invalid: int


def _bool_to_mask(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def even_side_probability(
    inst: PercolationInstance, lam: float, variant: str, phis: Optional[PhiPair] = None
) -> float:
    if variant == Variant.SYMMETRIC:
        return 0.5
    if variant != Variant.TILTED:
        raise ValueError(f"unknown sampler variant {variant!r}")
    if phis is None:
        phis = phi_sums(inst, lam)
    return 1.0 / (1.0 + math.exp(phis.phi_odd - phis.phi_even))


def _open_cover_bool(
    inst: PercolationInstance, side: Parity, s1_ranks: np.ndarray
) -> np.ndarray:
    """Boolean mask (over the opposite side's ranks) of open neighbors of S1."""
    d = inst.d
    edges = inst.edges
    covered = np.zeros(inst.n_side, dtype=bool)
    for r in s1_ranks:
        r = int(r)
        for i in range(d):
            if edges[incident_edge_index(d, side, r, i)]:
                covered[neighbor_rank(r, i)] = True
    return covered


def _check_no_open_edge(
    inst: PercolationInstance, side: Parity, s1_ranks: np.ndarray, s2_bool: np.ndarray
) -> bool:
    """Independence check across the bipartition, O(|S1| * d)."""
    d = inst.d
    edges = inst.edges
    for r in s1_ranks:
        r = int(r)
        for i in range(d):
            if edges[incident_edge_index(d, side, r, i)] and s2_bool[neighbor_rank(r, i)]:
                return False
    return True


def _draw_parts(
    inst: PercolationInstance,
    lam: float,
    side: Parity,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """(S1 ranks on side, S2 boolean array on the opposite side)."""
    q1 = degree_weights(inst.d, lam)
    q1 = q1 / (1.0 + q1)
    include = rng.random(inst.n_side) < q1[inst.degrees(side)]
    s1_ranks = np.flatnonzero(include)
    covered = _open_cover_bool(inst, side, s1_ranks)
    q2 = lam / (1.0 + lam)
    s2_bool = ~covered & (rng.random(inst.n_side) < q2)
    return s1_ranks, s2_bool


def approx_sample(
    inst: PercolationInstance,
    lam: float,
    variant: str,
    rng: np.random.Generator,
    phis: Optional[PhiPair] = None,
) -> SampleRecord:
    """One draw of the two-stage sampler, materialized as an IndependentSet."""
    if inst.d > APPROX_MAX_DIM:
        raise DimensionError(f"approximate sampler limited to d <= {APPROX_MAX_DIM}")
    p_even = even_side_probability(inst, lam, variant, phis)
    side = Parity.EVEN if rng.random() < p_even else Parity.ODD
    s1_ranks, s2_bool = _draw_parts(inst, lam, side, rng)
    s1_mask = 0
    for r in s1_ranks:
        s1_mask |= 1 << int(r)
    s2_mask = _bool_to_mask(s2_bool)
    if side is Parity.EVEN:
        iset = IndependentSet(
            even=ParitySet(Parity.EVEN, s1_mask), odd=ParitySet(Parity.ODD, s2_mask)
        )
    else:
        iset = IndependentSet(
            even=ParitySet(Parity.EVEN, s2_mask), odd=ParitySet(Parity.ODD, s1_mask)
        )
    s1 = len(s1_ranks)
    s2 = int(s2_bool.sum())
    return SampleRecord(
        set=iset,
        chosen_side=side,
        s1_size=s1,
        s2_size=s2,
        defect_size=min(s1, s2),
    )


def approx_sample_batch(
    inst: PercolationInstance,
    lam: float,
    variant: str,
    rng: np.random.Generator,
    trials: int,
    validate: bool = True,
) -> BatchSamples:
    """Size statistics of many draws, validating independence on the fly.

    Works on boolean arrays throughout and never materializes bitmask
    objects, which keeps 1e5-draw runs at moderate d cheap.
    """
    phis = phi_sums(inst, lam)
    p_even = even_side_probability(inst, lam, variant, phis)
    sides = (rng.random(trials) >= p_even).astype(np.uint8)  # 0=even, 1=odd
    s1_sizes = np.empty(trials, dtype=np.int64)
    s2_sizes = np.empty(trials, dtype=np.int64)
    n_invalid = 0
    for t in range(trials):
        side = Parity.EVEN if sides[t] == 0 else Parity.ODD
        s1_ranks, s2_bool = _draw_parts(inst, lam, side, rng)
        s1_sizes[t] = len(s1_ranks)
        s2_sizes[t] = int(s2_bool.sum())
        if validate and not _check_no_open_edge(inst, side, s1_ranks, s2_bool):
            n_invalid += 1
    return BatchSamples(
        sides=sides,
        s1_sizes=s1_sizes,
        s2_sizes=s2_sizes,
        defect_sizes=np.minimum(s1_sizes, s2_sizes),
        n_invalid=n_invalid,
    )


# ---------------------------------------------------------------------------
# Exact uniform sampler (small d)


class UniformSampler:
    """Precomputed tables for exact uniform draws at d <= 5.

    The cumulative weights are exact 64-bit integers (each even side S1
    has 2^(2^(d-1) - N_p(S1)) completions, and their total fits in 2^(2^d)
    <= 2^32 at d = 5), so draws carry no floating-point bias.
    """

    def __init__(self, inst: PercolationInstance):
        if inst.d > UNIFORM_MAX_DIM:
            raise DimensionError(f"exact uniform sampler requires d <= {UNIFORM_MAX_DIM}")
        self.inst = inst
        self.n = inst.n_side
        cover, _pop = subset_table(inst)
        self.cover = cover
        blocked = np.bitwise_count(cover).astype(np.int64)
        weights = np.uint64(1) << (self.n - blocked).astype(np.uint64)
        self.cum = np.cumsum(weights, dtype=np.uint64)
        self.z = int(self.cum[-1])

    def draw_masks(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """(even mask, odd mask) arrays of uniform independent sets."""
        u = rng.integers(0, self.z, size=size, dtype=np.uint64)
        s1 = np.searchsorted(self.cum, u, side="right").astype(np.uint64)
        free = np.uint64((1 << self.n) - 1) & ~self.cover[s1]
        s2 = prng.random_words(rng, size) & free
        return s1, s2

    def sample(self, rng: np.random.Generator) -> SampleRecord:
        s1, s2 = self.draw_masks(rng, 1)
        even_mask, odd_mask = int(s1[0]), int(s2[0])
        iset = IndependentSet(
            even=ParitySet(Parity.EVEN, even_mask), odd=ParitySet(Parity.ODD, odd_mask)
        )
        a, b = iset.even.size, iset.odd.size
        return SampleRecord(
            set=iset,
            chosen_side=Parity.EVEN,
            s1_size=a,
            s2_size=b,
            defect_size=min(a, b),
        )


def uniform_sample_exact(inst: PercolationInstance, rng: np.random.Generator) -> SampleRecord:
    """One exactly uniform independent set (convenience wrapper)."""
    return UniformSampler(inst).sample(rng)


# ---------------------------------------------------------------------------
# Exact sampler laws and their total-variation distance (tiny d)


def enumerate_independent_sets(inst: PercolationInstance) -> list[tuple[int, int]]:
    """All independent sets as (even mask, odd mask) rank-bitmask pairs."""
    if inst.d > EXACT_LAW_MAX_DIM:
        raise DimensionError(f"set enumeration requires d <= {EXACT_LAW_MAX_DIM}")
    n_vertices = 1 << inst.d
    masks = np.arange(1 << n_vertices, dtype=np.uint32)
    ok = np.ones(masks.shape, dtype=bool)
    for a, b in open_edge_vertex_pairs(inst):
        ok &= ((masks >> np.uint32(a)) & (masks >> np.uint32(b)) & np.uint32(1)) == 0
    out = []
    for m in np.flatnonzero(ok):
        m = int(m)
        even_mask = 0
        odd_mask = 0
        v = 0
        while m:
            if m & 1:
                if parity_of(v) is Parity.EVEN:
                    even_mask |= 1 << rank_of(v)
                else:
                    odd_mask |= 1 << rank_of(v)
            m >>= 1
            v += 1
        out.append((even_mask, odd_mask))
    return out


def _branch_probability(
    inst: PercolationInstance,
    lam: float,
    side: Parity,
    s1_mask: int,
    s2_mask: int,
) -> float:
    """Probability that the side-H branch outputs exactly (S1, S2)."""
    d = inst.d
    n = inst.n_side
    phi = degree_weights(d, lam)[inst.degrees(side)]
    q1 = phi / (1.0 + phi)
    covered = 0
    for r in ParitySet(side, s1_mask).ranks():
        for i in range(d):
            if inst.edges[incident_edge_index(d, side, r, i)]:
                covered |= 1 << neighbor_rank(r, i)
    if s2_mask & covered:
        return 0.0
    prob = 1.0
    for r in range(n):
        prob *= q1[r] if (s1_mask >> r) & 1 else 1.0 - q1[r]
    free = n - covered.bit_count()
    k2 = s2_mask.bit_count()
    q2 = lam / (1.0 + lam)
    return prob * q2 ** k2 * (1.0 - q2) ** (free - k2)


def approx_distribution_exact(
    inst: PercolationInstance, lam: float = 1.0, variant: str = Variant.TILTED
) -> dict[tuple[int, int], float]:
    """Exact output law of the approximate sampler over all independent sets."""
    p_even = even_side_probability(inst, lam, variant)
    pmf: dict[tuple[int, int], float] = {}
    for even_mask, odd_mask in enumerate_independent_sets(inst):
        p = p_even * _branch_probability(inst, lam, Parity.EVEN, even_mask, odd_mask)
        p += (1.0 - p_even) * _branch_probability(
            inst, lam, Parity.ODD, odd_mask, even_mask
        )
        pmf[(even_mask, odd_mask)] = p
    return pmf


def uniform_distribution_exact(inst: PercolationInstance) -> dict[tuple[int, int], float]:
    """Uniform pmf on the enumerated independent sets."""
    sets = enumerate_independent_sets(inst)
    z = exact_partition(inst).z_integer
    if z != len(sets):
        raise AssertionError("enumeration disagrees with the exact count")
    return {key: 1.0 / z for key in sets}


def tv_samplers_exact(
    inst: PercolationInstance, lam: float = 1.0, variant: str = Variant.TILTED
) -> float:
    """Exact TV distance between the approximate and uniform sampler laws."""
    approx = approx_distribution_exact(inst, lam, variant)
    uniform = uniform_distribution_exact(inst)
    keys = set(approx) | set(uniform)
    return 0.5 * sum(abs(approx.get(k, 0.0) - uniform.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Histograms


@dataclass(frozen=True)
class SizeHistograms:
    defect: np.ndarray
    s1: np.ndarray


def defect_histogram(samples: Iterable[SampleRecord]) -> SizeHistograms:
    """Empirical pmfs of defect size and stage-one size; needs >= 1000 draws."""
    defects = []
    s1s = []
    for rec in samples:
        defects.append(rec.defect_size)
        s1s.append(rec.s1_size)
    if len(defects) < 1000:
        raise ValueError("need at least 1000 samples")
    return SizeHistograms(
        defect=np.bincount(defects) / len(defects),
        s1=np.bincount(s1s) / len(s1s),
    )


def size_histograms_from_batch(batch: BatchSamples) -> SizeHistograms:
    return SizeHistograms(
        defect=np.bincount(batch.defect_sizes) / len(batch.defect_sizes),
        s1=np.bincount(batch.s1_sizes) / len(batch.s1_sizes),
    )


def validate_samples(
    inst: PercolationInstance, samples: Iterable[SampleRecord]
) -> int:
    """Number of records violating the independent-set invariant."""
    return sum(0 if is_independent(inst, rec.set) else 1 for rec in samples)

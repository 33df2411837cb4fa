"""The non-uniform birthday problem on one parity class.

Draws are i.i.d. from the random measure pi(v) proportional to the defect
weight phi_v.  A pair of draws collides when the two vertices are equal
("repeat") or 2-neighbors ("neighbor"); the pair counts over C(n,2) pairs
drive a Poisson approximation whose parameter is

    theta = C(n,2) * sum(phi^2) / (sum(phi))^2.

At the critical edge density theta concentrates at lam^2/4 (1/4 in the
uniform model) when n tracks the mean defect size; supercritically it
vanishes, so collisions die out.

Sampling uses an alias table over weight classes: phi_v takes at most d+1
distinct values (one per open degree), so a draw picks a class in O(1) and
then a uniform member of that class.  Pair counting is vectorized: repeats
come from run lengths of sorted (trial, vertex) keys, and neighbor pairs
from shared-neighbor counts, using the fact that equal draws share all d
neighbors while distinct 2-neighbors share exactly two:

    sum over opposite-side w of C(#draws adjacent to w, 2)
        = d * n_repeat + 2 * n_neighbor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as prng
from .hypercube import DimensionError, Parity, PercolationInstance, two_neighbor_flips
from .weights import degree_weights

MEASURE_MAX_DIM = 28
DIAGNOSTIC_MAX_DIM = 20
_BLOCK_KEYS = 8_000_000


@dataclass(frozen=True)
class BirthdayOutcome:
    """Pair counts from one n-sample draw; n_collide = n_repeat + n_neighbor
    (a pair cannot be both: a vertex is not its own 2-neighbor)."""

    n: int
    n_repeat: int
    n_neighbor: int

    @property
    def n_collide(self) -> int:
        return self.n_repeat + self.n_neighbor


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float


class WeightMeasure:
    """Sampling tables for pi(v) proportional to a per-rank weight vector.

    Weights are grouped by distinct value; the alias table lives on the
    classes and members of a class are drawn uniformly, so a draw costs
    O(1) regardless of the side's size.
    """

    def __init__(self, side: Parity, d: int, values, counts, members):
        self.side = side
        self.d = d
        self.values = np.asarray(values, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.members = np.ascontiguousarray(members, dtype=np.uint64)
        self.offsets = np.concatenate([[0], np.cumsum(self.counts)])
        self.n_side = int(self.counts.sum())
        class_mass = self.values * self.counts
        self.total = math.fsum(float(x) for x in class_mass)
        self._alias_prob, self._alias_idx = _build_alias(class_mass / self.total)
        self._weights_cache: np.ndarray | None = None

    @classmethod
    def from_instance(
        cls, inst: PercolationInstance, side: Parity, lam: float = 1.0
    ) -> "WeightMeasure":
        if inst.d > MEASURE_MAX_DIM:
            raise DimensionError(f"measure construction limited to d <= {MEASURE_MAX_DIM}")
        deg = inst.degrees(side)
        hist = inst.degree_histogram(side)
        w = degree_weights(inst.d, lam)
        present = np.flatnonzero(hist)
        order = np.argsort(deg, kind="stable")
        return cls(side, inst.d, w[present], hist[present], order)

    @classmethod
    def from_weights(cls, side: Parity, d: int, weights) -> "WeightMeasure":
        weights = np.asarray(weights, dtype=np.float64)
        if (weights <= 0).any():
            raise ValueError("weights must be positive")
        values, inverse, counts = np.unique(
            weights, return_inverse=True, return_counts=True
        )
        order = np.argsort(inverse, kind="stable")
        return cls(side, d, values, counts, order)

    @property
    def weights(self) -> np.ndarray:
        """Per-rank weight array (parity-rank order)."""
        if self._weights_cache is None:
            w = np.empty(self.n_side, dtype=np.float64)
            for c in range(len(self.values)):
                w[self.members[self.offsets[c] : self.offsets[c + 1]]] = self.values[c]
            self._weights_cache = w
        return self._weights_cache

    def power_sum(self, k: int) -> float:
        """Exactly rounded sum of weight^k over the side."""
        return math.fsum(
            float(c) * float(v) ** k for c, v in zip(self.counts, self.values)
        )

    def draw_ranks(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """size i.i.d. parity ranks distributed as pi."""
        n_classes = len(self.values)
        idx = rng.integers(0, n_classes, size=size)
        take_alias = rng.random(size) >= self._alias_prob[idx]
        cls_pick = np.where(take_alias, self._alias_idx[idx], idx)
        pos = (rng.random(size) * self.counts[cls_pick]).astype(np.int64)
        return self.members[self.offsets[cls_pick] + pos]


def _build_alias(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose's alias construction for a small probability vector."""
    n = len(probs)
    scaled = probs * n
    prob = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    return prob, alias


def build_measure(
    inst: PercolationInstance, side: Parity, lam: float = 1.0
) -> WeightMeasure:
    """Measure with pi(v) proportional to phi_v on the given side."""
    return WeightMeasure.from_instance(inst, side, lam)


def _pairs_per_trial(keys: np.ndarray, rank_bits: int, trials: int) -> np.ndarray:
    """Given (trial << rank_bits | value) keys, count equal pairs per trial."""
    keys = np.sort(keys)
    starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
    lengths = np.diff(np.append(starts, len(keys)))
    pairs = lengths * (lengths - 1) // 2
    trial_of_run = (keys[starts] >> np.uint64(rank_bits)).astype(np.int64)
    out = np.zeros(trials, dtype=np.int64)
    np.add.at(out, trial_of_run, pairs)
    return out


def sample_collision_counts(
    measure: WeightMeasure, n: int, trials: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """(n_repeat, n_neighbor) pair counts for each of the given trials."""
    if n < 2:
        raise ValueError("need at least two draws per trial")
    d = measure.d
    rank_bits = d - 1
    block = max(1, _BLOCK_KEYS // (n * d))
    reps = np.empty(trials, dtype=np.int64)
    nbrs = np.empty(trials, dtype=np.int64)
    done = 0
    while done < trials:
        bt = min(block, trials - done)
        draws = measure.draw_ranks(rng, bt * n).reshape(bt, n)
        trial_key = (np.arange(bt, dtype=np.uint64) << np.uint64(rank_bits))[:, None]
        rep_keys = (trial_key | draws).ravel()
        rep = _pairs_per_trial(rep_keys, rank_bits, bt)
        # Expand each draw into its d neighbor ranks on the opposite side;
        # shared-neighbor pair totals then encode repeats and 2-neighbor
        # pairs with multiplicities d and 2 respectively.
        nb = np.empty((bt, n, d), dtype=np.uint64)
        nb[:, :, 0] = draws
        for j in range(d - 1):
            nb[:, :, j + 1] = draws ^ np.uint64(1 << j)
        nb |= trial_key[:, :, None]
        shared = _pairs_per_trial(nb.ravel(), rank_bits, bt)
        reps[done : done + bt] = rep
        nbrs[done : done + bt] = (shared - d * rep) // 2
        done += bt
    return reps, nbrs


def draw_birthday(
    measure: WeightMeasure, n: int, rng: np.random.Generator
) -> BirthdayOutcome:
    """Pair counts of one i.i.d. n-sample from the measure."""
    rep, nbr = sample_collision_counts(measure, n, 1, rng)
    return BirthdayOutcome(n=n, n_repeat=int(rep[0]), n_neighbor=int(nbr[0]))


def theta(measure: WeightMeasure, n: int) -> float:
    """Poisson collision parameter C(n,2) * sum(phi^2) / (sum(phi))^2."""
    if n < 2:
        raise ValueError("need at least two draws")
    s1 = measure.total
    s2 = measure.power_sum(2)
    return 0.5 * n * (n - 1) * s2 / (s1 * s1)


def stein_diagnostics(measure: WeightMeasure, n: int) -> tuple[float, float, float]:
    """The three vanishing statistics behind the Poisson limit.

    y1 = n^2 * sum over unordered 2-neighbor pairs of w_u w_v / W^2
    y2 = n^3 * sum(w^3) / W^3
    y3 = n^3 * (sum(w^2) / W^2)^2
    """
    if measure.d > DIAGNOSTIC_MAX_DIM:
        raise DimensionError(
            f"2-neighbor double sum limited to d <= {DIAGNOSTIC_MAX_DIM}"
        )
    w = measure.weights
    idx = np.arange(measure.n_side, dtype=np.int64)
    cross = 0.0
    for m in two_neighbor_flips(measure.d):
        cross += float(np.dot(w, w[idx ^ m]))
    cross *= 0.5
    total = measure.total
    s2 = measure.power_sum(2)
    s3 = measure.power_sum(3)
    y1 = n * n * cross / total ** 2
    y2 = n ** 3 * s3 / total ** 3
    y3 = n ** 3 * (s2 / total ** 2) ** 2
    return y1, y2, y3


def collision_probability_mc(
    measure: WeightMeasure, n: int, trials: int, rng: np.random.Generator
) -> Estimate:
    """Fraction of trials with at least one colliding pair, with its SE."""
    if trials < 100:
        raise ValueError("need at least 100 trials")
    rep, nbr = sample_collision_counts(measure, n, trials, rng)
    hits = np.count_nonzero(rep + nbr)
    p = hits / trials
    return Estimate(value=p, se=math.sqrt(p * (1.0 - p) / trials))


def collision_pmf_empirical(
    measure: WeightMeasure, n: int, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """Empirical pmf of the collision pair count over the given trials."""
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    rep, nbr = sample_collision_counts(measure, n, trials, rng)
    return np.bincount(rep + nbr) / trials


def collision_summary(
    measure: WeightMeasure, n: int, trials: int, rng: np.random.Generator
) -> dict:
    """One pass over the trials feeding every per-instance report column."""
    rep, nbr = sample_collision_counts(measure, n, trials, rng)
    collide = rep + nbr
    hits = int(np.count_nonzero(collide))
    p_col = hits / trials
    return {
        "n_repeat_mean": float(rep.mean()),
        "n_neighbor_mean": float(nbr.mean()),
        "p_no_collision": 1.0 - p_col,
        "p_no_collision_se": math.sqrt(p_col * (1.0 - p_col) / trials),
        "pmf": np.bincount(collide) / trials,
    }

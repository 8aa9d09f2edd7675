"""Constructions of k-AP-free sets.

* ``threeapfree_seed``: Behrend-sphere sets, a greedy set and (for small
  universes) the exact optimum, whichever is largest.
* ``product_construct``: combine free sets U and V into a free set W of
  size |U||V| in a universe of size 2mn.
* ``block_random_construct``: s translated copies of a free seed S placed
  in widely spaced windows with offsets d_i in {1..2N}.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exact import Cache, rk_exact
from .intset import IntSet, count_s_aps, find_progression, is_k_ap_free

log = logging.getLogger(__name__)

__all__ = [
    "BlockParams",
    "ConstructionSoundnessError",
    "MonteCarloResult",
    "behrend_sets",
    "greedy_free_set",
    "threeapfree_seed",
    "product_construct",
    "block_random_construct",
    "augment_free",
    "expected_sap_lower_bound",
    "final_lower_bound",
    "offset_rng",
    "monte_carlo_expected_saps",
    "exhaustive_expected_saps",
]

_MASK64 = (1 << 64) - 1


class ConstructionSoundnessError(AssertionError):
    """A constructed set contains a progression it must not contain."""


def behrend_sets(n_bound: int) -> List[IntSet]:
    """All Behrend sphere sets that fit in {1..n_bound}.

    For digit bound d >= 2 and dimension m, integers sum a_i (2d-1)^i with
    digits 0 <= a_i < d never carry when two of them are added, so the points
    on a sphere sum a_i^2 = const contain no 3-term progression.
    """
    out = []
    d = 2
    # Dimension 1 only gives singletons, so start at m = 2.
    while 2 * d * (d - 1) + 1 <= n_bound:
        base = 2 * d - 1
        m = 2
        while True:
            top = sum((d - 1) * base**i for i in range(m))
            if top + 1 > n_bound:
                break
            shells: Dict[int, List[int]] = {}
            for digits in itertools.product(range(d), repeat=m):
                x = sum(a * base**i for i, a in enumerate(digits))
                shells.setdefault(sum(a * a for a in digits), []).append(x + 1)
            out.extend(IntSet(v) for v in shells.values())
            m += 1
        d += 1
    return out


def greedy_free_set(n_bound: int, k: int = 3) -> IntSet:
    """Add 1, 2, ..., n_bound in order whenever no k-AP is created."""
    chosen: List[int] = []
    members = set()
    for x in range(1, n_bound + 1):
        ok = True
        # x would be the largest term of a k-AP x-(k-1)d, ..., x-d, x.
        for d in range(1, (x - 1) // (k - 1) + 1):
            if all(x - j * d in members for j in range(1, k)):
                ok = False
                break
        if ok:
            chosen.append(x)
            members.add(x)
    return IntSet(chosen)


def threeapfree_seed(
    n_bound: int,
    exact_limit: int = 40,
    cache: Optional[Cache] = None,
    max_nodes: Optional[int] = 200_000,
) -> IntSet:
    """Largest 3-AP-free subset of {1..n_bound} among the candidate families.

    Candidates: every Behrend sphere set, the greedy set, and the exact
    optimum when n_bound <= exact_limit and it is found within ``max_nodes``.
    Ties go to the lexicographically smallest element sequence.
    """
    if n_bound < 1:
        raise ValueError("n_bound must be at least 1")
    candidates = behrend_sets(n_bound)
    candidates.append(greedy_free_set(n_bound, 3))
    if n_bound <= exact_limit:
        entry = rk_exact(3, n_bound, cache, max_nodes=max_nodes)
        if entry.witness:
            candidates.append(entry.witness)
    best = min(candidates, key=lambda c: (-len(c), c.elements))
    if find_progression(best, 3) is not None:
        raise ConstructionSoundnessError(f"seed for {n_bound} contains a 3-AP")
    return best


def product_construct(
    U: Iterable[int], m: int, V: Iterable[int], n: int, variant: str = "corrected"
) -> IntSet:
    """Combine U in {1..m} and V in {1..n} into one set of size |U||V|.

    ``variant="literal"`` uses {2u(n-1) + v}. That spacing lets sums carry
    between blocks (U = V = {1, 2}, m = n = 2 gives {3, 4, 5, 6}), so it is
    kept for study only. ``variant="corrected"`` uses {2n(u-1) + v}, which
    lies in {1..2mn} and is k-AP-free whenever U and V are.
    """
    U, V = IntSet(U), IntSet(V)
    if not U or not V:
        raise ValueError("U and V must be nonempty")
    if U.min < 1 or U.max > m:
        raise ValueError(f"U must lie in {{1..{m}}}")
    if V.min < 1 or V.max > n:
        raise ValueError(f"V must lie in {{1..{n}}}")
    if variant == "literal":
        return IntSet(2 * u * (n - 1) + v for u in U for v in V)
    if variant == "corrected":
        return IntSet(2 * n * (u - 1) + v for u in U for v in V)
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class BlockParams:
    """Window size N, progression length s, forbidden length k, seed S, offsets d."""

    N: int
    s: int
    k: int
    S: IntSet
    d: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "S", IntSet(self.S))
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not self.k > self.s >= 3:
            raise ValueError(f"need k > s >= 3, got k={self.k}, s={self.s}")
        if self.S and (self.S.min < 1 or self.S.max > self.N):
            raise ValueError(f"S must lie in {{1..{self.N}}}")
        if len(self.d) != self.s:
            raise ValueError(f"need {self.s} offsets, got {len(self.d)}")
        if any(not 1 <= x <= 2 * self.N for x in self.d):
            raise ValueError(f"offsets must lie in {{1..{2 * self.N}}}")
        free, witness = is_k_ap_free(self.S, self.k)
        if not free:
            raise ValueError(f"S contains the {self.k}-AP {witness.terms}")


def block_shift(N: int, i: int, d_i: int) -> int:
    """Translation applied to S for block i (1-based)."""
    return 6 * (i - 1) * N - 1 + d_i


def augment_free(A: Iterable[int], size: int, k: int, start: int) -> IntSet:
    """Greedily add the smallest integers >= start keeping A k-AP-free until |A| = size."""
    members = set(A)
    x = start
    while len(members) < size:
        ok = True
        trial = members | {x}
        # A new k-AP must use x; x is the largest element so far.
        for d in range(1, (x - min(trial)) // (k - 1) + 1):
            if all(x - j * d in members for j in range(1, k)):
                ok = False
                break
        if ok:
            members.add(x)
        x += 1
    return IntSet(members)


def block_random_construct(p: BlockParams, augment_to: Optional[int] = None) -> IntSet:
    """Union of S_i = S + 6(i-1)N - 1 + d_i for i = 1..s.

    Each S_i lies in {6(i-1)N+1, ..., 6(i-1)N+3N-1}; a progression meeting two
    blocks has difference at least 3N+2 and so meets every block at most once,
    which keeps the union k-AP-free for k > s.

    With ``augment_to`` the set is padded greedily, starting above
    max(A) + 6ksN, up to that many elements.
    """
    A = IntSet(
        itertools.chain.from_iterable(
            (x + block_shift(p.N, i, d_i) for x in p.S) for i, d_i in enumerate(p.d, 1)
        )
    )
    if augment_to is not None and len(A) < augment_to:
        start = (A.max if A else 0) + p.k * 6 * p.s * p.N + 1
        A = augment_free(A, augment_to, p.k, start)
    return A


def expected_sap_lower_bound(N: int, s: int, size_S: int) -> Fraction:
    """(1/s) * C(N, 2) * (|S| / 2N)^s as an exact rational."""
    if N < 1 or s < 3 or not 0 <= size_S <= N:
        raise ValueError("need N >= 1, s >= 3, 0 <= size_S <= N")
    return Fraction(1, s) * Fraction(N * (N - 1), 2) * Fraction(size_S, 2 * N) ** s


def final_lower_bound(n: int, s: int, N: int) -> Fraction:
    """(n / 300sN)^(s-2) * n^2 as an exact rational."""
    if min(n, s, N) < 1:
        raise ValueError("n, s, N must be positive")
    return Fraction(n, 300 * s * N) ** (s - 2) * n * n


def offset_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial); independent of evaluation order."""
    return np.random.Generator(np.random.Philox(key=(seed & _MASK64) | (trial << 64)))


@dataclass(frozen=True)
class MonteCarloResult:
    trials: int
    mean: Fraction
    variance: Fraction
    min: int
    max: int
    bound: Fraction

    @property
    def exceeds_bound(self) -> bool:
        return self.mean >= self.bound


def _counted(params: BlockParams) -> int:
    A = block_random_construct(params)
    witness = find_progression(A, params.k)
    if witness is not None:
        raise ConstructionSoundnessError(
            f"offsets {params.d} produced the {params.k}-AP {witness.terms}"
        )
    if len(A) != params.s * len(params.S):
        raise ConstructionSoundnessError(f"offsets {params.d} produced overlapping blocks")
    return count_s_aps(A, params.s)


def _summarize(counts: Sequence[int], bound: Fraction) -> MonteCarloResult:
    t = len(counts)
    mean = Fraction(sum(counts), t)
    if t > 1:
        variance = sum((Fraction(c) - mean) ** 2 for c in counts) / (t - 1)
    else:
        variance = Fraction(0)
    return MonteCarloResult(t, mean, variance, min(counts), max(counts), bound)


def monte_carlo_expected_saps(
    S: Iterable[int],
    N: int,
    s: int,
    k: int,
    trials: int,
    seed: int,
    threads: int = 1,
) -> MonteCarloResult:
    """Sample offset vectors and average the number of s-APs in the union.

    Trial t draws its offsets from ``offset_rng(seed, t)``, so the result
    does not depend on ``threads``. Every sampled set is checked for
    k-AP-freeness and raises ``ConstructionSoundnessError`` otherwise.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    S = IntSet(S)
    BlockParams(N, s, k, S, (1,) * s)  # validates the fixed parameters

    def run(t: int) -> int:
        d = offset_rng(seed, t).integers(1, 2 * N, size=s, endpoint=True)
        return _counted(BlockParams(N, s, k, S, tuple(int(x) for x in d)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(run, range(trials)))
    else:
        counts = [run(t) for t in range(trials)]
    return _summarize(counts, expected_sap_lower_bound(N, s, len(S)))


def exhaustive_expected_saps(S: Iterable[int], N: int, s: int, k: int) -> MonteCarloResult:
    """Exact average over all (2N)^s offset vectors."""
    S = IntSet(S)
    counts = [
        _counted(BlockParams(N, s, k, S, d))
        for d in itertools.product(range(1, 2 * N + 1), repeat=s)
    ]
    return _summarize(counts, expected_sap_lower_bound(N, s, len(S)))

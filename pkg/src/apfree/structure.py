"""Small-scale tools for the sumset side of the argument.

The 3-AP incidence graph joins a and b (two copies of A) when (a+b)/2 is in
A. Its restricted sumset is just the doubled set of realised midpoints, so
it has doubling constant K = 1. ``rich_subset`` extracts a subset A' whose
pairs are joined by many walks of length four, and ``verify_bsg`` checks
that every difference in A' - A' is an alternating sum of four restricted
sums read off such a walk.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .intset import IntSet, difference_set, iterated_sumset, sumset

log = logging.getLogger(__name__)

__all__ = [
    "APGraph",
    "build_ap_graph",
    "partial_sumset",
    "count_paths4",
    "iter_paths4",
    "RichSubsetReport",
    "RichSubsetError",
    "rich_subset",
    "BSGReport",
    "verify_bsg",
    "FreimanMap",
    "freiman_iso_check",
    "PlunneckeReport",
    "plunnecke_check",
]

_MASK64 = (1 << 64) - 1

# Pipeline constants: common-neighbour threshold p^2 n / 20 and the
# 0.9 fraction of good pairs required of U.
_CODEG_DIVISOR = 20
_GOOD_PAIR_FRACTION = Fraction(9, 10)


@dataclass(frozen=True)
class APGraph:
    """Bipartite graph on two copies of A; (a, b) is an edge iff a != b and (a+b)/2 is in A."""

    ground: IntSet
    edges: FrozenSet[Tuple[int, int]]
    neighbors: Mapping[int, FrozenSet[int]] = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.ground)

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.edges), self.n * self.n)

    def codegree(self, a: int, b: int) -> int:
        return len(self.neighbors[a] & self.neighbors[b])


def build_ap_graph(A: Iterable[int]) -> APGraph:
    A = IntSet(A)
    if not A:
        raise ValueError("ground set must be nonempty")
    nbrs: Dict[int, set] = {a: set() for a in A}
    elems = A.elements
    for i, a in enumerate(elems):
        for b in elems[i + 1:]:
            if (a + b) % 2 == 0 and (a + b) // 2 in A:
                nbrs[a].add(b)
                nbrs[b].add(a)
    edges = frozenset((a, b) for a, bs in nbrs.items() for b in bs)
    return APGraph(A, edges, {a: frozenset(bs) for a, bs in nbrs.items()})


def partial_sumset(G: APGraph) -> IntSet:
    """Sums a + b over the edges of G."""
    return IntSet(a + b for a, b in G.edges)


def count_paths4(G: APGraph, a: int, a_end: int) -> int:
    """Number of walks (a, b, a'', b', a_end) of length four in G."""
    if a not in G.neighbors or a_end not in G.neighbors:
        raise ValueError("endpoints must lie in the ground set")
    if not G.neighbors[a] or not G.neighbors[a_end]:
        return 0
    return sum(G.codegree(a, mid) * G.codegree(mid, a_end) for mid in G.ground)


def iter_paths4(G: APGraph, a: int, a_end: int):
    """Yield every walk (a, b, a'', b', a_end), enumerated edge by edge."""
    nb = G.neighbors
    for b in sorted(nb[a]):
        for mid in sorted(nb[b]):
            for b2 in sorted(nb[mid] & nb[a_end]):
                yield (a, b, mid, b2, a_end)


class RichSubsetError(RuntimeError):
    def __init__(self, message: str, attempts: int, best_size: int, best_fraction: Fraction) -> None:
        super().__init__(message)
        self.attempts = attempts
        self.best_size = best_size
        self.best_fraction = best_fraction


@dataclass(frozen=True)
class RichSubsetReport:
    U: IntSet
    Aprime: IntSet
    threshold: Fraction
    min_pair_paths: Optional[int]
    attempts: int
    trivial: bool = False
    good_pair_fraction: Fraction = Fraction(1)
    path_lower_bound: Fraction = Fraction(0)


def _attempt_rng(seed: int, attempt: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(seed & _MASK64) | (attempt << 64)))


def _good_fraction(G: APGraph, U: IntSet, threshold: Fraction) -> Fraction:
    pairs = len(U) * (len(U) - 1) // 2
    if pairs == 0:
        return Fraction(1)
    good = sum(1 for x, y in itertools.combinations(U, 2) if G.codegree(x, y) >= threshold)
    return Fraction(good, pairs)


def rich_subset(
    G: APGraph,
    seed: int = 0,
    retries: int = 64,
    hypothesis_constant: float = 1.0,
) -> RichSubsetReport:
    """Find A' in A whose pairs are joined by many length-four walks.

    U is the neighbourhood of a random vertex, accepted once |U| >= pn/2 and
    at least 90% of its pairs have p^2 n / 20 common neighbours. A' is the
    ceil(|U|/2) vertices of smallest degree in the graph F on U joining pairs
    with fewer common neighbours, ties broken by the smaller element.

    When p < hypothesis_constant / sqrt(n) the whole ground set is returned
    with ``trivial=True``.
    """
    n = G.n
    p = G.density
    if n < 2 or not G.edges or p < hypothesis_constant / math.sqrt(n):
        return RichSubsetReport(G.ground, G.ground, Fraction(0), None, 0, trivial=True)

    threshold = p * p * n / _CODEG_DIVISOR
    min_size = p * n / 2
    vertices = G.ground.elements
    best_size, best_frac = 0, Fraction(0)
    for attempt in range(1, retries + 1):
        v = vertices[int(_attempt_rng(seed, attempt).integers(0, n))]
        U = IntSet(G.neighbors[v])
        if len(U) < min_size:
            best_size = max(best_size, len(U))
            continue
        frac = _good_fraction(G, U, threshold)
        if frac < _GOOD_PAIR_FRACTION:
            if frac > best_frac:
                best_size, best_frac = len(U), frac
            continue
        Aprime = _low_degree_half(G, U, threshold)
        paths = [count_paths4(G, x, y) for x, y in itertools.combinations(Aprime, 2)]
        t = threshold
        bound = Fraction(len(U), 2) * t * (t - 1) if t >= 1 else Fraction(0)
        return RichSubsetReport(
            U, Aprime, threshold, min(paths) if paths else None, attempt,
            good_pair_fraction=frac, path_lower_bound=bound,
        )
    raise RichSubsetError(
        f"no acceptable neighbourhood in {retries} attempts", retries, best_size, best_frac
    )


def _low_degree_half(G: APGraph, U: IntSet, threshold: Fraction) -> IntSet:
    deg = {x: 0 for x in U}
    for x, y in itertools.combinations(U, 2):
        if G.codegree(x, y) < threshold:
            deg[x] += 1
            deg[y] += 1
    keep = (len(U) + 1) // 2
    return IntSet(sorted(U, key=lambda x: (deg[x], x))[:keep])


@dataclass
class BSGReport:
    n: int
    p: Fraction
    constant_C: float
    subset: RichSubsetReport
    diff_size: int
    size_ok: bool
    diff_ok: bool
    representation_ok: bool
    diff_ratio: Optional[float]
    unrepresented: List[int] = field(default_factory=list)
    mismatched: List[int] = field(default_factory=list)
    path_ratio: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.size_ok and self.diff_ok and self.representation_ok


def _check_representations(G: APGraph, Aprime: IntSet, P: IntSet):
    """For each y in A'-A', verify the walk-derived four-sum identities for one generating pair."""
    generator: Dict[int, Tuple[int, int]] = {}
    for a in Aprime:
        for b in Aprime:
            generator.setdefault(a - b, (a, b))
    unrepresented, mismatched = [], []
    for y in sorted(generator):
        a, a_end = generator[y]
        verified = 0
        for _, b, mid, b2, _ in iter_paths4(G, a, a_end):
            x1, x2, x3, x4 = a + b, mid + b, mid + b2, a_end + b2
            if x1 in P and x2 in P and x3 in P and x4 in P and x1 - x2 + x3 - x4 == y:
                verified += 1
        if verified == 0:
            unrepresented.append(y)
        if verified != count_paths4(G, a, a_end):
            mismatched.append(y)
    return unrepresented, mismatched


def verify_bsg(
    A: Iterable[int],
    constant_C: float = 2000.0,
    seed: int = 0,
    retries: int = 64,
    hypothesis_constant: float = 1.0,
) -> BSGReport:
    """Run the K = 1 pipeline on the AP graph of A and check the three clauses.

    (i) |A'| >= pn/4; (ii) |A'-A'| <= C p^-5 n; (iii) every y in A'-A' has a
    verified representation x1 - x2 + x3 - x4 with all x_i in the restricted
    sumset, and the number of verified walk representations equals the walk
    count for the generating pair.
    """
    A = IntSet(A)
    if len(A) < 2:
        raise ValueError("need at least two elements")
    G = build_ap_graph(A)
    n, p = G.n, G.density
    sub = rich_subset(G, seed, retries, hypothesis_constant)
    Aprime = sub.Aprime
    diff_size = len(difference_set(Aprime, Aprime))
    size_ok = len(Aprime) >= p * n / 4
    if p == 0:
        diff_ok, ratio = True, None
    else:
        scale = n / p**5
        ratio = float(diff_size / scale)
        diff_ok = diff_size <= constant_C * scale
    if sub.trivial:
        unrep, mism = [], []
        rep_ok = True
    else:
        unrep, mism = _check_representations(G, Aprime, partial_sumset(G))
        rep_ok = not unrep and not mism
    path_ratio = None
    if sub.min_pair_paths is not None and p > 0:
        path_ratio = float(sub.min_pair_paths / (p**5 * n**3))
    return BSGReport(n, p, constant_C, sub, diff_size, size_ok, diff_ok, rep_ok,
                     ratio, unrep, mism, path_ratio)


@dataclass(frozen=True)
class FreimanMap:
    """A bijection S -> T tested for Freiman isomorphism of the given order."""

    pairs: Mapping[int, int]
    order: int = 2

    def __post_init__(self) -> None:
        if self.order < 2:
            raise ValueError("order must be at least 2")
        if len(set(self.pairs.values())) != len(self.pairs):
            raise ValueError("map is not one-to-one")

    @classmethod
    def order_preserving(cls, S: Iterable[int], T: Iterable[int], order: int = 2) -> "FreimanMap":
        S, T = IntSet(S), IntSet(T)
        if len(S) != len(T):
            raise ValueError("|S| != |T|")
        return cls(dict(zip(S, T)), order)

    @classmethod
    def from_function(cls, S: Iterable[int], phi, order: int = 2) -> "FreimanMap":
        return cls({x: phi(x) for x in IntSet(S)}, order)

    @property
    def source(self) -> IntSet:
        return IntSet(self.pairs)

    @property
    def target(self) -> IntSet:
        return IntSet(self.pairs.values())

    def compose(self, other: "FreimanMap") -> "FreimanMap":
        """The map x -> other(self(x)); its order is the smaller of the two."""
        return FreimanMap({x: other.pairs[y] for x, y in self.pairs.items()},
                          min(self.order, other.order))


def freiman_iso_check(phi: FreimanMap):
    """Return ``(True, None)`` or ``(False, (xs, ys))`` with a violating pair of r-multisets.

    Groups all r-multisets of the source by their sum and by the sum of their
    images; the map is an isomorphism iff both groupings coincide.
    """
    r = phi.order
    src = sorted(phi.pairs)
    by_source: Dict[int, Tuple[int, ...]] = {}
    by_target: Dict[int, Tuple[int, ...]] = {}
    for xs in itertools.combinations_with_replacement(src, r):
        s_sum = sum(xs)
        t_sum = sum(phi.pairs[x] for x in xs)
        first = by_source.setdefault(s_sum, xs)
        if sum(phi.pairs[x] for x in first) != t_sum:
            return False, (first, xs)
        first = by_target.setdefault(t_sum, xs)
        if sum(first) != s_sum:
            return False, (first, xs)
    return True, None


@dataclass(frozen=True)
class PlunneckeReport:
    alpha: Fraction
    bound: Fraction
    actual: int
    r: int
    r_prime: int

    @property
    def passed(self) -> bool:
        return self.actual <= self.bound


def plunnecke_check(S: Iterable[int], T: Iterable[int], r: int, r_prime: int) -> PlunneckeReport:
    """Compare |rT - r'T| with alpha^(r+r') |S| where alpha = |S+T| / |S|."""
    S, T = IntSet(S), IntSet(T)
    if not S or not T:
        raise ValueError("S and T must be nonempty")
    if r < 1 or r_prime < 1:
        raise ValueError("r and r' must be positive")
    alpha = Fraction(len(sumset(S, T)), len(S))
    bound = alpha ** (r + r_prime) * len(S)
    actual = len(iterated_sumset(r, r_prime, T))
    report = PlunneckeReport(alpha, bound, actual, r, r_prime)
    if not report.passed:
        log.error("Plunnecke bound violated: |%dT-%dT|=%d > %s", r, r_prime, actual, bound)
    return report

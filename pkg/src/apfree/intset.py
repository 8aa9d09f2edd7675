"""Finite integer sets, progression counting, freeness checks and sumsets.

Counting uses a bit-parallel scan over differences when the set is dense
enough in its span, and a pair scan with hash membership otherwise.
Both kernels return identical results; ``count_s_aps`` picks one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Tuple

__all__ = [
    "IntSet",
    "Progression",
    "normalize",
    "count_s_aps",
    "find_progression",
    "is_k_ap_free",
    "window_ap_count_exact",
    "window_ap_count_closed_form",
    "sumset",
    "difference_set",
    "negate",
    "iterated_sumset",
]

# Above this many bits a bitmask representation is not worth building.
_MAX_MASK_BITS = 1 << 20


class IntSet(Sequence[int]):
    """Immutable sorted set of distinct integers."""

    __slots__ = ("_elements", "_members")

    def __init__(self, elements: Iterable[int] = ()) -> None:
        elems = tuple(sorted(set(int(x) for x in elements)))
        self._elements: Tuple[int, ...] = elems
        self._members = frozenset(elems)

    @classmethod
    def _from_sorted(cls, elems: Tuple[int, ...]) -> "IntSet":
        obj = cls.__new__(cls)
        obj._elements = elems
        obj._members = frozenset(elems)
        return obj

    @classmethod
    def from_mask(cls, mask: int, base: int = 0) -> "IntSet":
        """Decode a bitmask where bit i stands for the integer ``base + i``."""
        bits = bin(mask)[2:][::-1]
        return cls._from_sorted(tuple(base + i for i, c in enumerate(bits) if c == "1"))

    @property
    def elements(self) -> Tuple[int, ...]:
        return self._elements

    @property
    def min(self) -> int:
        return self._elements[0]

    @property
    def max(self) -> int:
        return self._elements[-1]

    @property
    def span(self) -> int:
        return self._elements[-1] - self._elements[0] if self._elements else 0

    def mask(self, base: Optional[int] = None) -> int:
        """Bitmask of the set relative to ``base`` (defaults to the minimum)."""
        if not self._elements:
            return 0
        lo = self._elements[0] if base is None else base
        m = 0
        for x in self._elements:
            m |= 1 << (x - lo)
        return m

    def __len__(self) -> int:
        return len(self._elements)

    def __getitem__(self, i):  # type: ignore[override]
        return self._elements[i]

    def __iter__(self) -> Iterator[int]:
        return iter(self._elements)

    def __contains__(self, x: object) -> bool:
        return x in self._members

    def __eq__(self, other: object) -> bool:
        if isinstance(other, IntSet):
            return self._elements == other._elements
        if isinstance(other, (set, frozenset)):
            return self._members == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._elements)

    def __le__(self, other: "IntSet") -> bool:
        return self._members <= other._members

    def __repr__(self) -> str:
        return "IntSet({" + ", ".join(map(str, self._elements)) + "})"

    def issubset(self, other: Iterable[int]) -> bool:
        return self._members.issubset(other)

    def union(self, *others: Iterable[int]) -> "IntSet":
        return IntSet(self._members.union(*others))

    def translate(self, t: int) -> "IntSet":
        return IntSet._from_sorted(tuple(x + t for x in self._elements))

    def affine(self, a: int, b: int) -> "IntSet":
        """Image under x -> a*x + b."""
        return IntSet(a * x + b for x in self._elements)


@dataclass(frozen=True, order=True)
class Progression:
    """The progression start, start+diff, ..., start+(length-1)*diff."""

    start: int
    diff: int
    length: int

    def __post_init__(self) -> None:
        if self.diff <= 0:
            raise ValueError(f"progression difference must be positive, got {self.diff}")
        if self.length < 3:
            raise ValueError(f"progression length must be at least 3, got {self.length}")

    @property
    def terms(self) -> Tuple[int, ...]:
        return tuple(self.start + i * self.diff for i in range(self.length))

    def __iter__(self) -> Iterator[int]:
        return iter(self.terms)


def normalize(raw: Iterable[int]) -> IntSet:
    return IntSet(raw)


def _as_intset(A: Iterable[int]) -> IntSet:
    return A if isinstance(A, IntSet) else IntSet(A)


def _check_length(s: int) -> None:
    if s < 3:
        raise ValueError(f"progression length must be at least 3, got {s}")


def _use_bits(A: IntSet, s: int) -> bool:
    n = len(A)
    span = A.span
    return span <= _MAX_MASK_BITS and span // (s - 1) <= n * n


def _scan_bits(A: IntSet, s: int, first_only: bool):
    # Bit j of `hits` marks a progression starting at min + j with difference d.
    mask = A.mask()
    lo = A.min
    total = 0
    for d in range(1, A.span // (s - 1) + 1):
        hits = mask
        for j in range(1, s):
            hits &= mask >> (j * d)
            if not hits:
                break
        if hits:
            if first_only:
                return Progression(lo + (hits & -hits).bit_length() - 1, d, s)
            total += hits.bit_count()
    return None if first_only else total


def _scan_pairs(A: IntSet, s: int, first_only: bool):
    elems = A.elements
    members = A._members
    total = 0
    best: Optional[Tuple[int, int]] = None
    top = elems[-1]
    for i, x in enumerate(elems):
        for y in elems[i + 1:]:
            d = y - x
            if x + (s - 1) * d > top:
                break
            if all(x + j * d in members for j in range(2, s)):
                total += 1
                if first_only and (best is None or (d, x) < best):
                    best = (d, x)
    if first_only:
        return None if best is None else Progression(best[1], best[0], s)
    return total


def count_s_aps(A: Iterable[int], s: int) -> int:
    """Number of s-term progressions with positive difference contained in A."""
    _check_length(s)
    A = _as_intset(A)
    if len(A) < s:
        return 0
    if _use_bits(A, s):
        return _scan_bits(A, s, first_only=False)
    return _scan_pairs(A, s, first_only=False)


def find_progression(A: Iterable[int], k: int) -> Optional[Progression]:
    """A k-term progression in A with the smallest difference (then start), if any."""
    _check_length(k)
    A = _as_intset(A)
    if len(A) < k:
        return None
    if _use_bits(A, k):
        return _scan_bits(A, k, first_only=True)
    return _scan_pairs(A, k, first_only=True)


def is_k_ap_free(A: Iterable[int], k: int) -> Tuple[bool, Optional[Progression]]:
    """Return ``(True, None)`` if A has no k-term progression, else ``(False, witness)``."""
    witness = find_progression(A, k)
    return witness is None, witness


def window_ap_count_exact(N: int, s: int) -> int:
    """Count sequences a, a+D, ..., a+(s-1)D inside {1..N} over every integer D.

    Zero and negative differences are included, so this counts ordered
    progressions rather than sets. Evaluated by direct summation.
    """
    if N < 1:
        raise ValueError("N must be positive")
    _check_length(s)
    total = 0
    reach = (N - 1) // (s - 1)
    for D in range(-reach, reach + 1):
        for a in range(1, N + 1):
            last = a + (s - 1) * D
            if 1 <= last <= N:
                total += 1
    return total


def window_ap_count_closed_form(N: int, s: int) -> int:
    """The closed form N + 2 * sum_{a=1}^{N-1} floor((N - a) / s)."""
    if N < 1:
        raise ValueError("N must be positive")
    _check_length(s)
    return N + 2 * sum((N - a) // s for a in range(1, N))


def negate(X: Iterable[int]) -> IntSet:
    X = _as_intset(X)
    return IntSet._from_sorted(tuple(-x for x in reversed(X.elements)))


def sumset(X: Iterable[int], Y: Iterable[int]) -> IntSet:
    """The set {x + y : x in X, y in Y}."""
    X, Y = _as_intset(X), _as_intset(Y)
    if not X or not Y:
        return IntSet()
    if len(X) > len(Y):
        X, Y = Y, X
    if X.span + Y.span > _MAX_MASK_BITS:
        return IntSet(x + y for x in X for y in Y)
    ymask = Y.mask()
    acc = 0
    x0 = X.min
    for x in X:
        acc |= ymask << (x - x0)
    return IntSet.from_mask(acc, x0 + Y.min)


def difference_set(X: Iterable[int], Y: Iterable[int]) -> IntSet:
    """The set {x - y : x in X, y in Y}."""
    return sumset(X, negate(Y))


def iterated_sumset(r: int, r_prime: int, X: Iterable[int]) -> IntSet:
    """The set rX - r'X, i.e. X + ... + X - X - ... - X."""
    if r < 0 or r_prime < 0 or r + r_prime < 1:
        raise ValueError("need r, r' >= 0 with r + r' >= 1")
    X = _as_intset(X)
    if not X:
        return IntSet()
    result: Optional[IntSet] = None
    for _ in range(r):
        result = X if result is None else sumset(result, X)
    neg = negate(X)
    for _ in range(r_prime):
        result = neg if result is None else sumset(result, neg)
    assert result is not None
    return result

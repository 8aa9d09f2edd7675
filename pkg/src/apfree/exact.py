"""Exact values of r_k(n) and windowed maxima of f_s over k-AP-free sets.

The solver for r_k(n) works upward in n. Since r_k(n) - r_k(n-1) is 0 or 1,
it only has to decide whether a free set of size r_k(n-1) + 1 exists, and
any such set must contain both 1 and n. The depth-first search visits
elements in ascending order, tries "include" before "exclude" (so the first
hit is the lexicographically smallest witness) and prunes with the already
certified values for shorter intervals.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from .intset import IntSet, count_s_aps, is_k_ap_free

log = logging.getLogger(__name__)

CACHE_ENV = "APFREE_CACHE"

__all__ = [
    "SolverEntry",
    "FskEntry",
    "Cache",
    "Unresolved",
    "BudgetExceeded",
    "Budget",
    "rk_exact",
    "find_N",
    "fsk_windowed_max",
    "window_stability",
    "verify_table_inequalities",
    "TableReport",
    "Violation",
]


class BudgetExceeded(Exception):
    """Raised inside a search when its node or time budget runs out."""


class Unresolved(RuntimeError):
    """A value could not be certified within the budget."""

    def __init__(self, message: str, partial=None) -> None:
        super().__init__(message)
        self.partial = partial


@dataclass
class Budget:
    """Node and wall-clock limits shared by one top-level call."""

    max_nodes: Optional[int] = None
    max_seconds: Optional[float] = None
    nodes: int = 0
    _deadline: Optional[float] = field(default=None, repr=False)

    def start(self) -> "Budget":
        if self.max_seconds is not None and self._deadline is None:
            self._deadline = time.monotonic() + self.max_seconds
        return self

    def tick(self) -> None:
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise BudgetExceeded(f"node budget {self.max_nodes} exceeded")
        if self._deadline is not None and (self.nodes & 0xFFF) == 0:
            if time.monotonic() > self._deadline:
                raise BudgetExceeded(f"time budget {self.max_seconds}s exceeded")


@dataclass(frozen=True)
class SolverEntry:
    k: int
    n: int
    value: int
    witness: IntSet
    certified: bool = True

    def to_record(self) -> dict:
        return {
            "kind": "rk",
            "k": self.k,
            "n": self.n,
            "value": self.value,
            "certified": self.certified,
            "witness": list(self.witness),
        }


@dataclass(frozen=True)
class FskEntry:
    k: int
    s: int
    n: int
    window: int
    value: int
    witness: IntSet
    certified: bool = True

    def to_record(self) -> dict:
        return {
            "kind": "fsk",
            "k": self.k,
            "s": self.s,
            "n": self.n,
            "window": self.window,
            "value": self.value,
            "certified": self.certified,
            "witness": list(self.witness),
        }


def _entry_from_record(rec: dict):
    kind = rec["kind"]
    witness = IntSet(int(x) for x in rec["witness"])
    if kind == "rk":
        return SolverEntry(int(rec["k"]), int(rec["n"]), int(rec["value"]), witness, bool(rec["certified"]))
    if kind == "fsk":
        return FskEntry(
            int(rec["k"]), int(rec["s"]), int(rec["n"]), int(rec["window"]),
            int(rec["value"]), witness, bool(rec["certified"]),
        )
    raise ValueError(f"unknown record kind {kind!r}")


class Cache:
    """In-memory table of solver results, optionally backed by a JSON-lines file.

    New entries are appended to the file. When loading, a certified record
    beats an uncertified one for the same key, otherwise the later line wins.
    """

    def __init__(self, path: Optional[os.PathLike] = None) -> None:
        self.path = Path(path) if path is not None else None
        self._rk: Dict[Tuple[int, int], SolverEntry] = {}
        self._fsk: Dict[Tuple[int, int, int, int], FskEntry] = {}
        if self.path is not None and self.path.exists():
            self.load()

    @classmethod
    def from_env(cls) -> "Cache":
        path = os.environ.get(CACHE_ENV)
        return cls(path or None)

    def load(self) -> None:
        assert self.path is not None
        with self.path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = _entry_from_record(json.loads(line))
                except (ValueError, KeyError) as exc:
                    log.warning("skipping malformed cache line %d in %s: %s", lineno, self.path, exc)
                    continue
                self._store(entry)

    def _store(self, entry) -> bool:
        if isinstance(entry, SolverEntry):
            table, key = self._rk, (entry.k, entry.n)
        else:
            table, key = self._fsk, (entry.k, entry.s, entry.n, entry.window)
        old = table.get(key)
        if old is not None and old.certified and not entry.certified:
            return False
        table[key] = entry
        return True

    def put(self, entry) -> None:
        if self._store(entry) and self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as fh:
                fh.write(json.dumps(entry.to_record()) + "\n")

    def get_rk(self, k: int, n: int) -> Optional[SolverEntry]:
        return self._rk.get((k, n))

    def get_fsk(self, k: int, s: int, n: int, window: int) -> Optional[FskEntry]:
        return self._fsk.get((k, s, n, window))

    def rk_entries(self, k: Optional[int] = None) -> List[SolverEntry]:
        return [e for key, e in sorted(self._rk.items()) if k is None or key[0] == k]

    def fsk_entries(self) -> List[FskEntry]:
        return [e for _, e in sorted(self._fsk.items())]

    def __len__(self) -> int:
        return len(self._rk) + len(self._fsk)


@lru_cache(maxsize=64)
def _completion_table(k: int, n: int) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    """For each x in 1..n, pairs (needed, completes) over differences d.

    ``needed`` is the mask of x-d, ..., x-(k-2)d; if those and x are chosen,
    the element x+d (bit ``completes``) would finish a k-AP. Rows with
    x+d > n are omitted.
    """
    table: List[Tuple[Tuple[int, int], ...]] = [()]
    for x in range(1, n + 1):
        rows = []
        for d in range(1, (x - 1) // (k - 2) + 1 if k > 2 else 1):
            needed = 0
            for j in range(1, k - 1):
                needed |= 1 << (x - j * d)
            if x + d <= n:
                rows.append((needed, 1 << (x + d)))
        table.append(tuple(rows))
    return tuple(table)


@lru_cache(maxsize=64)
def _extension_table(s: int, n: int) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    """Like ``_completion_table`` for length s, but with the completing element as an int."""
    return tuple(
        tuple((needed, comp.bit_length() - 1) for needed, comp in rows)
        for rows in _completion_table(s, n)
    )


def _search_free_set(
    k: int,
    n: int,
    target: int,
    interval_bound: List[int],
    budget: Budget,
    require_ends: bool,
) -> Optional[int]:
    """Lexicographically first k-AP-free subset of {1..n} with ``target`` elements.

    ``interval_bound[m]`` must be an upper bound on r_k(m) for m < n.
    Returns the subset as a bitmask (bit x for element x) or None.
    """
    completes = _completion_table(k, n)
    full = ((1 << (n + 1)) - 1) ^ 1

    def dfs(x: int, chosen: int, forbidden: int, size: int) -> Optional[int]:
        if size == target:
            return chosen
        if x > n:
            return None
        budget.tick()
        need = target - size
        remaining = n - x + 1
        if remaining < n and interval_bound[remaining] < need:
            return None
        free_left = (full >> x << x) & ~forbidden
        if free_left.bit_count() < need:
            return None
        bit = 1 << x
        if not forbidden & bit:
            new_forbidden = forbidden
            now = chosen | bit
            for needed, comp in completes[x]:
                if now & needed == needed:
                    new_forbidden |= comp
            found = dfs(x + 1, now, new_forbidden, size + 1)
            if found is not None:
                return found
        if require_ends and (x == 1 or x == n):
            return None
        return dfs(x + 1, chosen, forbidden, size)

    return dfs(1, 0, 0, 0)


def _mask_to_set(mask: int) -> IntSet:
    return IntSet.from_mask(mask >> 1, 1)


def rk_exact(
    k: int,
    n: int,
    cache: Optional[Cache] = None,
    max_nodes: Optional[int] = None,
    max_seconds: Optional[float] = None,
    budget: Optional[Budget] = None,
) -> SolverEntry:
    """Certified r_k(n) with the lexicographically smallest maximum witness.

    If the budget runs out the returned entry has ``certified=False`` and its
    value is only a lower bound backed by its witness.
    """
    if k < 3:
        raise ValueError(f"k must be at least 3, got {k}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    cache = cache if cache is not None else Cache()
    hit = cache.get_rk(k, n)
    if hit is not None and hit.certified:
        return hit
    budget = (budget or Budget(max_nodes, max_seconds)).start()

    bound = [0]
    prev_value = 0
    for m in range(1, n + 1):
        entry = cache.get_rk(k, m)
        if entry is None or not entry.certified:
            try:
                entry = _solve_one(k, m, prev_value, bound, budget)
            except BudgetExceeded as exc:
                log.info("r_%d(%d) unresolved: %s", k, m, exc)
                partial = _unresolved_entry(k, n, cache)
                cache.put(partial)
                return partial
            cache.put(entry)
        bound.append(entry.value)
        prev_value = entry.value
    return cache.get_rk(k, n) or entry


def _solve_one(k: int, m: int, prev_value: int, bound: List[int], budget: Budget) -> SolverEntry:
    if m == 1:
        return SolverEntry(k, 1, 1, IntSet([1]))
    found = _search_free_set(k, m, prev_value + 1, bound, budget, require_ends=True)
    value = prev_value + 1
    if found is None:
        found = _search_free_set(k, m, prev_value, bound, budget, require_ends=False)
        value = prev_value
        assert found is not None, "a smaller witness always extends to a larger interval"
    witness = _mask_to_set(found)
    _recheck(witness, k, value, m)
    return SolverEntry(k, m, value, witness)


def _recheck(witness: IntSet, k: int, size: int, top: int) -> None:
    free, ap = is_k_ap_free(witness, k)
    if not free or len(witness) != size or witness.min < 1 or witness.max > top:
        raise AssertionError(f"solver produced an invalid witness {witness} (k={k}, ap={ap})")


def _unresolved_entry(k: int, n: int, cache: Cache) -> SolverEntry:
    # Best certified witness on a smaller interval is still a valid lower bound.
    best = None
    for entry in cache.rk_entries(k):
        if entry.n <= n and (best is None or entry.value > best.value):
            best = entry
    witness = best.witness if best is not None else IntSet()
    return SolverEntry(k, n, len(witness), witness, certified=False)


def find_N(
    k: int,
    target: int,
    cache: Optional[Cache] = None,
    max_nodes: Optional[int] = None,
    max_seconds: Optional[float] = None,
) -> int:
    """Least N with r_k(N) = target."""
    if target < 1:
        raise ValueError("target must be at least 1")
    cache = cache if cache is not None else Cache()
    budget = Budget(max_nodes, max_seconds).start()
    N = 1
    while True:
        entry = rk_exact(k, N, cache, budget=budget)
        if not entry.certified:
            raise Unresolved(f"r_{k}({N}) not certified within budget", partial=entry)
        if entry.value == target:
            return N
        if entry.value > target:  # cannot happen: r_k steps by at most one
            raise AssertionError(f"r_{k} jumped past {target} at N={N}")
        N += 1


def fsk_windowed_max(
    n: int,
    k: int,
    s: int,
    M: Optional[int] = None,
    cache: Optional[Cache] = None,
    max_nodes: Optional[int] = None,
    max_seconds: Optional[float] = None,
) -> FskEntry:
    """Maximum number of s-APs in a k-AP-free n-subset of {1..M}.

    The search fixes the minimum at 1 (translation) and accepts only sets
    whose elements minus one have gcd 1 (dilation); both maps preserve the
    progression count and freeness. The witness is the lexicographically
    smallest maximiser.
    """
    if not k > s >= 3:
        raise ValueError(f"need k > s >= 3, got k={k}, s={s}")
    if n < s:
        raise ValueError(f"need n >= s, got n={n}, s={s}")
    M = 4 * n if M is None else M
    if M < n:
        raise ValueError(f"window {M} is smaller than n={n}")
    cache = cache if cache is not None else Cache()
    hit = cache.get_fsk(k, s, n, M)
    if hit is not None and hit.certified:
        return hit

    budget = Budget(max_nodes, max_seconds).start()
    completes = _completion_table(k, M)
    extends = _extension_table(s, M)

    best_value = -1
    best_mask = 0

    def dfs(x: int, chosen: int, forbidden: int, size: int, count: int, g: int,
            pending: Dict[int, int]) -> None:
        # pending[y]: s-APs that y would complete using only chosen terms.
        nonlocal best_value, best_mask
        if size == n:
            if g == 1 and count > best_value:
                best_value, best_mask = count, chosen
            return
        left = n - size
        if M - x + 1 < left:
            return
        # Every later s-AP ends at a future element y. If its second-largest
        # term is chosen, all its smaller terms are too (counted in pending);
        # otherwise that term is one of the earlier future elements.
        gains = sorted((c for y, c in pending.items() if y >= x and not forbidden >> y & 1),
                       reverse=True)
        if count + sum(gains[:left]) + left * (left - 1) // 2 <= best_value:
            return
        budget.tick()
        bit = 1 << x
        if not forbidden & bit:
            now = chosen | bit
            new_forbidden = forbidden
            for needed, comp in completes[x]:
                if now & needed == needed:
                    new_forbidden |= comp
            new_pending = dict(pending)
            for needed, y in extends[x]:
                if now & needed == needed:
                    new_pending[y] = new_pending.get(y, 0) + 1
            dfs(x + 1, now, new_forbidden, size + 1, count + pending.get(x, 0),
                math.gcd(g, x - 1), new_pending)
        dfs(x + 1, chosen, forbidden, size, count, g, pending)

    certified = True
    # Element 1 is always included; start the recursion after it.
    try:
        dfs(2, 1 << 1, 0, 1, 0, 0, {})
    except BudgetExceeded as exc:
        log.info("f_{%d,%d}(%d) window %d unresolved: %s", s, k, n, M, exc)
        certified = False
    if best_value < 0:
        if certified:
            raise ValueError(f"no {k}-AP-free set of size {n} fits in {{1..{M}}}")
        raise Unresolved("no feasible set found within budget")
    witness = _mask_to_set(best_mask)
    _recheck(witness, k, n, M)
    if count_s_aps(witness, s) != best_value:
        raise AssertionError(f"incremental count {best_value} disagrees for {witness}")
    entry = FskEntry(k, s, n, M, best_value, witness, certified)
    cache.put(entry)
    return entry


@dataclass(frozen=True)
class StabilityRow:
    n: int
    base_window: int
    wide_window: int
    base_value: int
    wide_value: int
    certified: bool

    @property
    def stable(self) -> bool:
        return self.base_value == self.wide_value


def window_stability(
    k: int,
    s: int,
    n_values: Iterable[int],
    base_factor: int = 4,
    wide_factor: int = 6,
    cache: Optional[Cache] = None,
    max_nodes: Optional[int] = None,
) -> List[StabilityRow]:
    """Compare windowed maxima at windows base_factor*n and wide_factor*n."""
    rows = []
    for n in n_values:
        a = fsk_windowed_max(n, k, s, base_factor * n, cache, max_nodes)
        b = fsk_windowed_max(n, k, s, wide_factor * n, cache, max_nodes)
        row = StabilityRow(n, a.window, b.window, a.value, b.value, a.certified and b.certified)
        if not row.stable:
            log.warning("window instability at n=%d: %d vs %d", n, a.value, b.value)
        rows.append(row)
    return rows


@dataclass(frozen=True)
class Violation:
    check: str
    k: int
    args: Tuple[int, ...]
    detail: str


@dataclass
class TableReport:
    checked: Dict[str, int] = field(default_factory=dict)
    violations: List[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def _count(self, check: str) -> None:
        self.checked[check] = self.checked.get(check, 0) + 1

    def _fail(self, check: str, k: int, args: Tuple[int, ...], detail: str) -> None:
        self.violations.append(Violation(check, k, args, detail))
        if check == "supermultiplicative":
            log.error("r_%d table contradicts r(2mn) >= r(m)r(n) at %s: %s", k, args, detail)


def verify_table_inequalities(cache: Cache) -> TableReport:
    """Check the elementary inequalities satisfied by r_k on certified entries."""
    report = TableReport()
    by_k: Dict[int, Dict[int, int]] = {}
    for e in cache.rk_entries():
        if e.certified:
            by_k.setdefault(e.k, {})[e.n] = e.value
    for check in ("monotone", "step", "subadditive", "almost_decreasing",
                  "supermultiplicative", "squared_density"):
        report.checked[check] = 0

    for k, r in sorted(by_k.items()):
        ns = sorted(r)
        for i, a in enumerate(ns):
            for b in ns[i + 1:]:
                report._count("monotone")
                if r[a] > r[b]:
                    report._fail("monotone", k, (a, b), f"r({a})={r[a]} > r({b})={r[b]}")
            if a + 1 in r:
                report._count("step")
                if r[a + 1] - r[a] not in (0, 1):
                    report._fail("step", k, (a, a + 1), f"r({a+1}) - r({a}) = {r[a+1] - r[a]}")
        for a in ns:
            for b in ns:
                if b < a:
                    continue
                if a + b in r:
                    report._count("subadditive")
                    if r[a + b] > r[a] + r[b]:
                        report._fail("subadditive", k, (a, b), f"r({a+b})={r[a+b]} > {r[a]}+{r[b]}")
                if 2 * a * b in r:
                    report._count("supermultiplicative")
                    if r[2 * a * b] < r[a] * r[b]:
                        report._fail("supermultiplicative", k, (a, b),
                                     f"r({2*a*b})={r[2*a*b]} < {r[a]}*{r[b]}")
        for big in ns:
            for small in ns:
                if big >= small:
                    # r(big)/(2 big) <= r(small)/small
                    report._count("almost_decreasing")
                    if Fraction(r[big], 2 * big) > Fraction(r[small], small):
                        report._fail("almost_decreasing", k, (big, small),
                                     f"r({big})/(2*{big}) > r({small})/{small}")
                if small * small >= big:
                    # r(N)/N >= (r(n)/n)^2 / 8 with N = big, n = small
                    report._count("squared_density")
                    if Fraction(r[big], big) < Fraction(r[small], small) ** 2 / 8:
                        report._fail("squared_density", k, (big, small),
                                     f"r({big})/{big} < (r({small})/{small})^2/8")
    return report

"""Brute-force reference implementations, deliberately independent of apfree."""

from itertools import combinations, product

import numpy as np


def aps_by_combinations(A, s):
    """Count s-term progressions by testing every s-subset."""
    A = sorted(set(A))
    total = 0
    for t in combinations(A, s):
        d = t[1] - t[0]
        if all(t[i + 1] - t[i] == d for i in range(s - 1)):
            total += 1
    return total


def aps_by_indicator(A, s):
    """Count s-term progressions by shifting a boolean indicator over the universe."""
    A = list(set(A))
    if len(A) < s:
        return 0
    lo = min(A)
    ind = np.zeros(max(A) - lo + 1, dtype=bool)
    ind[np.array(A) - lo] = True
    U = len(ind)
    total = 0
    for d in range(1, (U - 1) // (s - 1) + 1):
        span = U - (s - 1) * d
        hit = ind[:span].copy()
        for j in range(1, s):
            hit &= ind[j * d:j * d + span]
        total += int(hit.sum())
    return total


def is_free(A, k):
    return aps_by_combinations(A, k) == 0


def r_naive(n, k):
    """Largest k-AP-free subset of {1..n}, by trying every subset size upward."""
    for t in range(1, n + 1):
        if not any(is_free(c, k) for c in combinations(range(1, n + 1), t)):
            return t - 1
    return n


def window_sequences(N, s):
    """Ordered s-term progressions in {1..N} with any integer difference."""
    return sum(
        1
        for seq in product(range(1, N + 1), repeat=s)
        if all(seq[i + 1] - seq[i] == seq[1] - seq[0] for i in range(s - 1))
    )


def block_union(S, N, d):
    return sorted(x + 6 * i * N - 1 + di for i, di in enumerate(d) for x in S)


def fsk_brute(n, k, s, M):
    """Max s-AP count over k-AP-free n-subsets of {1..M} (no normalization)."""
    best = -1
    for c in combinations(range(1, M + 1), n):
        if is_free(c, k):
            best = max(best, aps_by_combinations(c, s))
    return best

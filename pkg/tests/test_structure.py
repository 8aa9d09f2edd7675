import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from apfree.intset import IntSet, count_s_aps, difference_set, is_k_ap_free
from apfree.structure import (
    FreimanMap,
    RichSubsetError,
    build_ap_graph,
    count_paths4,
    freiman_iso_check,
    iter_paths4,
    partial_sumset,
    plunnecke_check,
    rich_subset,
    verify_bsg,
)


def walks4_brute(A, a, a_end):
    """Enumerate every 5-tuple of vertices and keep those joined by AP-graph edges."""
    A = list(A)
    members = set(A)

    def edge(x, y):
        return x != y and (x + y) % 2 == 0 and (x + y) // 2 in members

    return sum(
        1
        for b, mid, b2 in itertools.product(A, repeat=3)
        if edge(a, b) and edge(b, mid) and edge(mid, b2) and edge(b2, a_end)
    )


def test_ap_graph_examples():
    G = build_ap_graph([1, 2, 3])
    assert G.edges == {(1, 3), (3, 1)} and G.density == Fraction(2, 9)
    G = build_ap_graph([1, 2])
    assert not G.edges and G.density == 0
    assert len(build_ap_graph(range(1, 6)).edges) == 8
    with pytest.raises(ValueError):
        build_ap_graph([])


@settings(max_examples=150, deadline=None)
@given(st.sets(st.integers(-30, 30), min_size=1, max_size=20))
def test_ap_graph_invariants(A):
    G = build_ap_graph(A)
    assert len(G.edges) == 2 * count_s_aps(A, 3)
    for a, b in G.edges:
        assert (b, a) in G.edges and a != b
        assert (a + b) % 2 == 0 and (a + b) // 2 in A
    P = partial_sumset(G)
    assert len(P) <= len(A)
    assert P.issubset({2 * c for c in A})
    assert 0 <= G.density < 1


def test_partial_sumset_examples():
    assert partial_sumset(build_ap_graph([1, 2, 3])) == {4}
    assert partial_sumset(build_ap_graph([1, 2])) == set()
    assert partial_sumset(build_ap_graph(range(1, 6))) == {4, 6, 8}


def test_count_paths4_examples():
    G = build_ap_graph([1, 2, 3])
    assert count_paths4(G, 1, 1) == 1
    assert list(iter_paths4(G, 1, 1)) == [(1, 3, 1, 3, 1)]
    assert count_paths4(G, 2, 2) == 0  # 2 has no incident edge
    assert count_paths4(build_ap_graph([1, 2, 4]), 1, 4) == 0
    with pytest.raises(ValueError):
        count_paths4(G, 1, 7)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(0, 25), min_size=1, max_size=12), st.data())
def test_count_paths4_matches_enumeration(A, data):
    G = build_ap_graph(A)
    a = data.draw(st.sampled_from(sorted(A)))
    b = data.draw(st.sampled_from(sorted(A)))
    expected = walks4_brute(A, a, b)
    assert count_paths4(G, a, b) == expected == sum(1 for _ in iter_paths4(G, a, b))


def test_rich_subset_trivial_cases():
    G = build_ap_graph([1, 2, 4, 5, 10])  # 3-AP-free
    rep = rich_subset(G)
    assert rep.trivial and rep.Aprime == G.ground
    single = build_ap_graph([7])
    assert rich_subset(single).Aprime == {7}
    # constant 30: density can never reach 30/sqrt(64) > 1
    rep = rich_subset(build_ap_graph(range(1, 65)), hypothesis_constant=30)
    assert rep.trivial


def test_rich_subset_on_interval():
    G = build_ap_graph(range(1, 65))
    rep = rich_subset(G, seed=0)
    assert not rep.trivial
    assert rep.Aprime <= rep.U <= G.ground
    assert len(rep.Aprime) >= (len(rep.U) + 1) // 2
    assert len(rep.U) >= G.density * G.n / 2
    assert rep.good_pair_fraction >= Fraction(9, 10)
    assert rep.min_pair_paths >= 1
    for a, b in itertools.combinations(rep.Aprime, 2):
        assert count_paths4(G, a, b) >= 1


def test_rich_subset_is_deterministic_per_seed():
    G = build_ap_graph(range(1, 41))
    assert rich_subset(G, seed=5) == rich_subset(G, seed=5)


def test_rich_subset_retry_exhaustion():
    # One 3-AP plus isolated points: most sampled neighbourhoods are empty.
    G = build_ap_graph([1, 2, 3] + [10**i for i in range(2, 11)])
    with pytest.raises(RichSubsetError) as info:
        rich_subset(G, seed=0, retries=3, hypothesis_constant=0.01)
    assert info.value.attempts == 3 and info.value.best_size == 0
    accepted = rich_subset(G, seed=1, retries=3, hypothesis_constant=0.01)
    assert accepted.U in ({1}, {3})


def test_verify_bsg_interval_32():
    rep = verify_bsg(range(1, 33), constant_C=2000)
    assert rep.size_ok and rep.diff_ok and rep.representation_ok and rep.passed
    assert rep.diff_size == len(difference_set(rep.subset.Aprime, rep.subset.Aprime))


def test_verify_bsg_free_set_is_trivial():
    rep = verify_bsg([1, 2, 4, 5, 10, 11, 13, 14])
    assert rep.subset.trivial and rep.p == 0 and rep.passed


def test_verify_bsg_on_block_construction():
    from apfree.constructions import BlockParams, block_random_construct

    A = block_random_construct(BlockParams(6, 3, 4, [1, 2, 4, 5], (3, 7, 11)))
    rep = verify_bsg(A, constant_C=2000)
    assert rep.size_ok and rep.diff_ok
    assert rep.subset.trivial or rep.representation_ok


def test_verify_bsg_contract():
    with pytest.raises(ValueError):
        verify_bsg([1])


def test_representation_identity_for_every_walk():
    A = IntSet(range(1, 21))
    G = build_ap_graph(A)
    P = partial_sumset(G)
    for a, a_end in [(1, 5), (2, 14), (7, 7)]:
        for _, b, mid, b2, _ in iter_paths4(G, a, a_end):
            xs = (a + b, mid + b, mid + b2, a_end + b2)
            assert all(x in P for x in xs)
            assert xs[0] - xs[1] + xs[2] - xs[3] == a - a_end


# Freiman


def freiman_brute(phi: FreimanMap) -> bool:
    """Check the iff condition over every ordered 2r-tuple."""
    S = sorted(phi.pairs)
    r = phi.order
    for xs in itertools.product(S, repeat=r):
        for ys in itertools.product(S, repeat=r):
            left = sum(xs) == sum(ys)
            right = sum(phi.pairs[x] for x in xs) == sum(phi.pairs[y] for y in ys)
            if left != right:
                return False
    return True


def test_freiman_examples():
    assert freiman_iso_check(FreimanMap.from_function([3, 8, 9, 20], lambda x: 2 * x + 7)) == (True, None)
    ok, violation = freiman_iso_check(FreimanMap.order_preserving([0, 1, 2], [0, 1, 3]))
    assert not ok and violation == ((0, 2), (1, 1))
    assert freiman_iso_check(FreimanMap({5: 100})) == (True, None)


def test_freiman_map_validation():
    with pytest.raises(ValueError):
        FreimanMap({1: 2, 3: 2})
    with pytest.raises(ValueError):
        FreimanMap({1: 2}, order=1)
    with pytest.raises(ValueError):
        FreimanMap.order_preserving([1, 2], [1])


@settings(max_examples=100, deadline=None)
@given(
    st.sets(st.integers(-20, 20), min_size=1, max_size=7),
    st.integers(-5, 5).filter(bool),
    st.integers(-100, 100),
    st.integers(2, 3),
)
def test_affine_maps_are_isomorphisms(S, a, b, r):
    assert freiman_iso_check(FreimanMap.from_function(S, lambda x: a * x + b, r))[0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-12, 12), min_size=1, max_size=6, unique=True),
       st.lists(st.integers(-12, 12), min_size=6, max_size=6, unique=True))
def test_freiman_check_matches_brute_force(S, T):
    phi = FreimanMap(dict(zip(S, T)))
    ok, violation = freiman_iso_check(phi)
    assert ok == freiman_brute(phi)
    if not ok:
        xs, ys = violation
        assert (sum(xs) == sum(ys)) != (sum(phi.pairs[x] for x in xs) == sum(phi.pairs[y] for y in ys))


def test_composition_of_isomorphisms():
    rng = random.Random(4)
    for _ in range(40):
        S = rng.sample(range(-30, 30), rng.randint(1, 7))
        f = FreimanMap.from_function(S, lambda x: 3 * x - 2)
        mid = sorted(f.pairs.values())
        g = FreimanMap.from_function(mid, lambda x: -x + 11)
        assert freiman_iso_check(f.compose(g))[0]
        # a non-affine 2-isomorphism: small set spread out so sums never collide
        spread = FreimanMap(dict(zip(sorted(S), [10**i for i in range(len(S))])))
        if freiman_iso_check(spread)[0]:
            assert freiman_iso_check(f.compose(g).compose(FreimanMap(
                {y: spread.pairs[x] for x, y in f.compose(g).pairs.items()})))[0]


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(-15, 15), min_size=3, max_size=8, unique=True), st.integers(3, 5))
def test_two_isomorphisms_preserve_progressions(S, k):
    rng = random.Random(sum(S))
    T = rng.sample(range(-40, 40), len(S))
    phi = FreimanMap(dict(zip(S, T)))
    if not freiman_iso_check(phi)[0]:
        return
    inverse = {y: x for x, y in phi.pairs.items()}
    for combo in itertools.combinations(sorted(S), k):
        image = sorted(phi.pairs[x] for x in combo)
        assert is_k_ap_free(combo, k)[0] == is_k_ap_free(image, k)[0]
    for combo in itertools.combinations(sorted(T), k):
        pre = sorted(inverse[y] for y in combo)
        assert is_k_ap_free(combo, k)[0] == is_k_ap_free(pre, k)[0]


# Plunnecke


def test_plunnecke_examples():
    rep = plunnecke_check(range(10), range(10), 1, 1)
    assert rep.alpha == Fraction(19, 10) and rep.actual == 19 and rep.bound == Fraction(361, 10)
    assert rep.passed
    rep = plunnecke_check([0, 5], [3], 2, 1)
    assert rep.actual == 1 and rep.passed
    rep = plunnecke_check(range(10), range(10), 2, 2)
    assert rep.actual == 37 and rep.bound == Fraction(19, 10) ** 4 * 10 and rep.passed


def test_plunnecke_contract():
    with pytest.raises(ValueError):
        plunnecke_check([], [1], 1, 1)
    with pytest.raises(ValueError):
        plunnecke_check([1], [1], 0, 1)


@settings(max_examples=200, deadline=None)
@given(st.sets(st.integers(-60, 60), min_size=1, max_size=30),
       st.sets(st.integers(-60, 60), min_size=1, max_size=30),
       st.integers(1, 2), st.integers(1, 2))
def test_plunnecke_never_fails(S, T, r, rp):
    assert plunnecke_check(S, T, r, rp).passed

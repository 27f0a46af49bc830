import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diosum import counting, reals, sums
from diosum.cf import IrrationalSpec, expand_data
from diosum.errors import DiosumError

CBRT2 = IrrationalSpec.root(2, 3)
CBRT4 = IrrationalSpec.root(4, 3)


def test_count_examples(phi):
    assert counting.count_dist_le(phi, 5, Fraction(1, 4)) == 3
    assert counting.count_dist_le(phi, 9, Fraction(1, 2)) == 9
    assert counting.count_dist_le(phi, 3, Fraction(1, 10)) == 0


def test_count_validation(phi):
    with pytest.raises(DiosumError):
        counting.count_dist_le(phi, 0, Fraction(1, 4))
    with pytest.raises(DiosumError):
        counting.count_dist_le(phi, 5, Fraction(0))
    with pytest.raises(DiosumError):
        counting.count_fast(phi, 5, Fraction(1, 4), "weird")


@settings(max_examples=120, deadline=None)
@given(
    pick=st.integers(0, 4),
    N=st.integers(1, 600),
    k=st.integers(2, 200),
    variant=st.sampled_from(["dist", "frac", "complement"]),
)
def test_count_fast_equals_brute(pick, N, k, variant):
    spec = [
        IrrationalSpec.phi(),
        IrrationalSpec.sqrt2(),
        IrrationalSpec.e(),
        IrrationalSpec.uniform(1),
        IrrationalSpec.uniform(2),
    ][pick]
    t = Fraction(1, k)
    assert counting.count_fast(spec, N, t, variant) == counting.count_dist_le(
        spec, N, t, variant
    )


@settings(max_examples=60, deadline=None)
@given(
    N=st.integers(1, 300),
    k=st.integers(2, 60),
    bn=st.integers(-7, 7),
    bd=st.integers(1, 9),
)
def test_count_fast_with_shift(N, k, bn, bd):
    spec = IrrationalSpec.sqrt2()
    t, beta = Fraction(1, k), Fraction(bn, bd)
    assert counting.count_fast(spec, N, t, "dist", beta) == counting.count_dist_le(
        spec, N, t, "dist", beta
    )


def test_count_threshold_near_one(phi):
    # ceil(t * 2**128) lands exactly on 2**128; must not wrap in the kernel
    t = Fraction(2**128 - 1, 2**128)
    assert counting.count_dist_le(phi, 50, t, "frac") == 50
    assert counting.count_fast(phi, 50, t, "frac") == 50
    t2 = Fraction(10**40 - 1, 10**40)
    assert counting.count_dist_le(phi, 50, t2, "complement") == counting.count_fast(
        phi, 50, t2, "complement"
    )


def test_count_fast_spec_instances(phi, sqrt2):
    assert counting.count_fast(phi, 10**4, Fraction(1, 97)) == counting.count_dist_le(
        phi, 10**4, Fraction(1, 97)
    )
    assert counting.count_fast(sqrt2, 2000, Fraction(3, 1000)) == counting.count_dist_le(
        sqrt2, 2000, Fraction(3, 1000)
    )
    assert counting.count_fast(phi, 12345, Fraction(1, 2)) == 12345


def test_count_monotone_in_t(phi):
    prev = 0
    for k in range(200, 1, -13):
        cur = counting.count_fast(phi, 500, Fraction(1, k))
        assert cur >= prev
        prev = cur


def test_pigeonhole_examples(phi, sqrt2):
    assert counting.pigeonhole_bound(sqrt2, 12, Fraction(1, 29)) == 5
    bound = counting.pigeonhole_bound(phi, 10, Fraction(1, 10))
    assert bound == Fraction(4 * 13, 10) + 1
    assert counting.count_dist_le(phi, 10, Fraction(1, 10)) <= bound


@settings(max_examples=60, deadline=None)
@given(N=st.integers(1, 1500), k=st.integers(2, 150), pick=st.integers(0, 2))
def test_pigeonhole_property(N, k, pick):
    spec = [IrrationalSpec.phi(), IrrationalSpec.sqrt2(), IrrationalSpec.e()][pick]
    t = Fraction(1, k)
    assert counting.count_dist_le(spec, N, t) <= counting.pigeonhole_bound(spec, N, t)


def _oracle_discrepancy(spec, N):
    """Independent brute force over all critical intervals, with exact
    rational endpoints (midpoints of very tight enclosures)."""
    xs = []
    for n in range(1, N + 1):
        frac, _ = reals.frac_part(spec, n, rel_bits=100)
        xs.append(frac.mid)
    xs.sort()
    best = Fraction(0)
    for i in range(N):  # 0-based; point rank is i + 1
        for j in range(i, N):
            closed = (j - i + 1) - N * (xs[j] - xs[i])
            opened = N * (xs[j] - xs[i]) - max(j - i - 1, 0)
            best = max(best, closed, opened)
    for j in range(N):
        best = max(best, N * xs[j] - j)  # [0, x_{j+1}) holds j points
    for i in range(N):
        best = max(best, N * (1 - xs[i]) - (N - i - 1))  # (x_{i+1}, 1]
    return best


def test_discrepancy_single_point(phi, sqrt2):
    for spec in (phi, sqrt2):
        ball = counting.discrepancy(spec, 1)
        assert abs(float(ball.mid) - 1.0) <= float(ball.rad) + 1e-12


def test_discrepancy_matches_brute(phi, sqrt2, e_const):
    for spec in (phi, sqrt2, e_const):
        for N in (1, 2, 3, 5, 8, 13):
            ball = counting.discrepancy(spec, N)
            oracle = _oracle_discrepancy(spec, N)
            assert abs(ball.mid - oracle) <= ball.rad + Fraction(1, 10**6)


def test_discrepancy_dominates_mesh_deviations(phi, e_const):
    # second, formula-free oracle: D_N must dominate the deviation of every
    # interval on a fine mesh (sup lower-bound consistency)
    for spec, N in ((phi, 23), (e_const, 37)):
        ball = counting.discrepancy(spec, N)
        xs = sorted(
            reals.frac_part(spec, n, rel_bits=80)[0].mid for n in range(1, N + 1)
        )
        mesh = [Fraction(i, 97) for i in range(98)]
        worst = Fraction(0)
        for i, lo in enumerate(mesh):
            for hi in mesh[i + 1 :]:
                inside = sum(1 for x in xs if lo <= x <= hi)
                worst = max(worst, abs(inside - (hi - lo) * N))
        assert ball.hi + Fraction(1, 10**6) >= worst


def test_discrepancy_bounds(phi):
    data = expand_data(phi, 12)
    for N in (5, 21, 100):
        ball = counting.discrepancy(phi, N)
        assert float(ball.hi) <= N
    ball5 = counting.discrepancy(phi, 5)
    # K = 4 block: 2 (s_4 + 5/q_4) = 2 (4 + 1) = 10
    assert float(ball5.hi) <= 10


def test_discrepancy_profile_agrees(phi):
    prof, slack = counting.discrepancy_profile(phi, 40)
    for N in (1, 7, 25, 40):
        single = counting.discrepancy(phi, N)
        assert abs(prof[N - 1] - float(single.mid)) <= 1e-9


def test_local_disc_extrema_example(phi):
    mx, mn = counting.local_disc_extrema(phi, 1, Fraction(7, 10))
    assert mx == Fraction(3, 10)
    # N ranges over {1} only: the minimum equals the maximum
    assert mn == Fraction(3, 10)


def test_local_disc_extrema_tiny_t(phi):
    mx, mn = counting.local_disc_extrema(phi, 3, Fraction(1, 1000))
    assert abs(mx) <= 1 and abs(mn) <= 1


def test_local_disc_batch_matches_single(sqrt2):
    ts = [Fraction(j, 64) for j in (1, 9, 32, 63)]
    batch = counting.local_disc_extrema_batch(sqrt2, 4, ts)
    for K in (1, 2, 3, 4):
        for t in ts:
            assert batch[(K, t)] == counting.local_disc_extrema(sqrt2, K, t)


def test_schoissengeier_exact_values(sqrt2, phi):
    data = expand_data(sqrt2, 5)
    mx, mn = counting.schoissengeier_prediction(data, 3, Fraction(3, 10))
    assert isinstance(mx, Fraction) and isinstance(mn, Fraction)
    # degenerate t = 1 has {q_k t} = 0 throughout
    z_mx, z_mn = counting.schoissengeier_prediction(data, 3, Fraction(1))
    assert z_mx == 0 and z_mn == 0
    # phi, K = 1, t = 7/10: no even k <= 1, so the max formula is empty
    pdata = expand_data(phi, 3)
    p_mx, _ = counting.schoissengeier_prediction(pdata, 1, Fraction(7, 10))
    assert p_mx == 0


def test_schoissengeier_near_measured(phi, sqrt2):
    # spot check the O(1) gap on a small grid
    for spec, K in ((phi, 6), (sqrt2, 5)):
        data = expand_data(spec, K + 1)
        for t in (Fraction(7, 64), Fraction(31, 64)):
            mx, mn = counting.local_disc_extrema(spec, K, t)
            fx, fn = counting.schoissengeier_prediction(data, K, t)
            assert abs(float(mx - fx)) <= 4
            assert abs(float(mn - fn)) <= 4


def _brute_count_multidim(specs, N, t):
    d = len(specs)
    total = 0

    def rec(vec):
        nonlocal total
        if len(vec) == d:
            if any(vec):
                ball_entries = [(s, c) for s, c in zip(specs, vec) if c]
                if counting._resolve_member(ball_entries, Fraction(0), 0, t):
                    total += 1
            return
        for c in range(-N, N + 1):
            rec(vec + [c])

    rec([])
    return total


def test_count_multidim_examples():
    assert counting.count_multidim((CBRT2, CBRT4), 2, Fraction(1, 2)) == 24
    got = counting.count_multidim((CBRT2, CBRT4), 4, Fraction(1, 8))
    assert got == _brute_count_multidim((CBRT2, CBRT4), 4, Fraction(1, 8))


def test_count_multidim_d1_symmetry(phi):
    for t in (Fraction(1, 5), Fraction(1, 17)):
        assert counting.count_multidim((phi,), 10, t) == 2 * counting.count_dist_le(
            phi, 10, t
        )


def test_count_multidim_validation(phi):
    with pytest.raises(DiosumError):
        counting.count_multidim((phi,), 4, Fraction(3, 4))

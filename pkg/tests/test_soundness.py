"""Deep soundness checks of the certified arithmetic.

These validate the two trust anchors directly: per-term double bounds from
the kernel against exact rational reciprocals, and the floor-sum descent
(including its reflection and exact-integer-hit correction) against an
independent exact-surd oracle.
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diosum import counting, kernel
from diosum.cf import IrrationalSpec
from diosum.reals import beta_scaled, frac_scaled, map_variant
from exact_surd import Surd

PHI = IrrationalSpec.phi()
MOD = 1 << 128


def test_single_term_bounds_contain_exact_reciprocal():
    """Kernel double bounds must bracket the exact rational 1/d for the very
    same integer interval the kernel saw."""
    rng = random.Random(99)
    specs = [PHI, IrrationalSpec.sqrt2(), IrrationalSpec.e(), IrrationalSpec.uniform(5)]
    for _ in range(400):
        spec = specs[rng.randrange(len(specs))]
        n = rng.randint(1, 10**6)
        variant = rng.randrange(3)
        weight = rng.randrange(2)
        a = frac_scaled(spec, 128)
        s_lo, s_hi, m, flags = kernel.sum_block(
            a, 1, 0, 0, n, n, variant, weight, None, 0, 128
        )
        if flags:
            continue
        r = (n * a) % MOD
        d_lo, d_hi = map_variant(r, n, MOD, variant)
        div = n if weight else 1
        exact_lo = Fraction(MOD, d_hi * div)
        exact_hi = Fraction(MOD, d_lo * div)
        assert Fraction(s_lo) <= exact_lo
        assert Fraction(s_hi) >= exact_hi
        # the bounds stay tight: within a relative 2**-40 of the exact ones
        assert Fraction(s_hi) - Fraction(s_lo) <= (exact_hi) * Fraction(1, 2**40) + (
            exact_hi - exact_lo
        )


def _mobius_as_surd(y, n_plus_v: Fraction, u: Fraction) -> Surd:
    """(n + v) * y + u as an exact surd, for y a Moebius image of phi - 1.

    phi - 1 = (-1 + sqrt 5)/2, so (a(phi-1) + b)/(c(phi-1) + d) rationalizes
    to an explicit (U + V sqrt 5)/W with integer entries.
    """
    a, b, c, d = y
    num_r, num_s = 2 * b - a, a  # numerator = (num_r + num_s sqrt5)/2
    den_r, den_s = 2 * d - c, c
    # multiply by the conjugate of the denominator
    U = num_r * den_r - 5 * num_s * den_s
    V = num_s * den_r - num_r * den_s
    W = den_r * den_r - 5 * den_s * den_s
    # y = (U + V sqrt5)/W; now (n+v) y + u with rationals
    p, q = n_plus_v, u
    return Surd(
        p.numerator * q.denominator * U + q.numerator * p.denominator * W,
        p.numerator * q.denominator * V,
        W * p.denominator * q.denominator,
        5,
    )


def _oracle_gsum(y, N, u, v):
    total = 0
    for n in range(1, N + 1):
        total += _mobius_as_surd(y, v + n, u).floor()
    return total


def _random_unimodular(rng, depth):
    # compose digit matrices [[a,1],[1,0]]: always a valid Moebius state
    m = (1, 0, 0, 1)
    for _ in range(depth):
        a = rng.randint(1, 4)
        p, q, r, s = m
        m = (a * p + q, p, a * r + s, r)
    return m


def test_gsum_matches_exact_surd_oracle():
    ctx = counting._Ctx(PHI)
    rng = random.Random(7)
    for trial in range(60):
        y = _random_unimodular(rng, rng.randint(0, 4))
        u = Fraction(rng.randint(-8, 8), rng.randint(1, 6))
        v = Fraction(rng.randint(-8, 8), rng.randint(1, 6))
        N = rng.randint(1, 90)
        got = counting._gsum(ctx, N, y, u, v)
        want = _oracle_gsum(y, N, u, v)
        assert got == want, (y, N, u, v)


def test_gsum_exact_integer_hit_correction():
    """State engineered so the reflection step meets an exact integer:
    y = phi - 1 in (1/2, 1), v = -3, u = 2 gives floor((3+v) y + u) = 2
    exactly at n = 3."""
    ctx = counting._Ctx(PHI)
    y = (1, 0, 0, 1)
    for N in (5, 10, 40, 80):
        got = counting._gsum(ctx, N, y, Fraction(2), Fraction(-3))
        want = _oracle_gsum(y, N, Fraction(2), Fraction(-3))
        assert got == want
    # the n = 3 term really is the exact integer 2 (n + v = 0 leaves just u)
    x = _mobius_as_surd(y, Fraction(0), Fraction(2))
    assert x.v == 0 and x.u == 2 * x.w


@settings(max_examples=40, deadline=None)
@given(
    N=st.integers(1, 120),
    un=st.integers(-9, 9),
    ud=st.integers(1, 7),
    vn=st.integers(-9, 9),
    vd=st.integers(1, 7),
)
def test_gsum_property_vs_oracle(N, un, ud, vn, vd):
    ctx = counting._Ctx(PHI)
    u, v = Fraction(un, ud), Fraction(vn, vd)
    assert counting._gsum(ctx, N, (1, 0, 0, 1), u, v) == _oracle_gsum(
        (1, 0, 0, 1), N, u, v
    )

"""Pure-Python term kernel.

Evaluates blocks of terms 1/f(n*alpha + beta) where f is the fractional
part, its complement, or the distance to the nearest integer, together
with certified cutoff filtering and membership counting.

The fractional part of n*alpha + beta is carried as an exact integer
interval [r, r+w] in units of 2**-bits; per-term reciprocal bounds are
produced as IEEE doubles with error-free directed conversion (shift to
<= 53 significant bits, then an exact power-of-two scaling) plus a single
outward guard multiplication covering the division rounding.  The compiled
kernel in _ckernel.pyx performs bit-identical arithmetic at bits == 128;
this module is the selected fallback and also serves arbitrary precisions.

Terms whose interval wraps the circle, touches zero, or is not separated
from the cutoff are reported back by index for exact resolution by the
caller; they are never guessed.
"""

import math

# One rounding happens in 1/x and (optionally) one more in the weight
# division before the guard multiply; 2**-48 dominates three half-ulp
# roundings with a wide margin.
GUARD_UP = 1.0 + 2.0**-48
GUARD_DN = 1.0 - 2.0**-48

MAX_KERNEL_BITS = 900  # beyond this the double conversion would go subnormal


def float_below(v: int, bits: int) -> float:
    """Largest representable double <= v / 2**bits (v >= 0)."""
    sh = v.bit_length() - 53
    if sh > 0:
        return math.ldexp(v >> sh, sh - bits)
    return math.ldexp(v, -bits)


def float_above(v: int, bits: int) -> float:
    """Smallest representable double >= v / 2**bits (v >= 0)."""
    sh = v.bit_length() - 53
    if sh > 0:
        m = v >> sh
        if (m << sh) != v:
            m += 1
        return math.ldexp(m, sh - bits)
    return math.ldexp(v, -bits)


def sum_block(
    a: int,
    aw: int,
    b: int,
    bw: int,
    n0: int,
    n1: int,
    variant: int,
    weight: int,
    cut_lo,
    cut_hi,
    exclude: int,
    bits: int,
):
    """Sum of reciprocal terms for n in [n0, n1].

    Returns (s_lo, s_hi, included, flagged): certified double bounds on the
    sum over certified-included terms, the number of such terms, and the
    indices needing exact resolution.
    """
    if bits > MAX_KERNEL_BITS:
        raise ValueError("kernel bits too large for double conversion")
    modulus = 1 << bits
    half = modulus >> 1
    has_cut = cut_lo is not None
    s_lo = 0.0
    s_hi = 0.0
    included = 0
    flagged = []
    ldexp = math.ldexp
    for n in range(n0, n1 + 1):
        if n == exclude:
            continue
        r = (n * a + b) % modulus
        w = n * aw + bw
        top = r + w
        if top >= modulus:
            flagged.append(n)
            continue
        if variant == 0:  # distance to nearest integer
            if top <= half:
                d_lo, d_hi = r, top
            elif r >= half:
                d_lo, d_hi = modulus - top, modulus - r
            else:
                m_top = modulus - top
                d_lo = r if r < m_top else m_top
                d_hi = half
        elif variant == 1:  # fractional part
            d_lo, d_hi = r, top
        else:  # complement 1 - {x}
            if r == 0:  # d_hi would be the full modulus (wraps in the u128 twin)
                flagged.append(n)
                continue
            d_lo, d_hi = modulus - top, modulus - r
        if d_lo <= 0:
            flagged.append(n)
            continue
        if has_cut:
            if d_hi <= cut_lo:
                continue
            if d_lo < cut_hi:
                flagged.append(n)
                continue
        sh = d_hi.bit_length() - 53
        if sh > 0:
            mh = d_hi >> sh
            if (mh << sh) != d_hi:
                mh += 1
            x_hi = ldexp(mh, sh - bits)
            x_lo = ldexp(d_lo >> sh, sh - bits)
        else:
            x_hi = ldexp(d_hi, -bits)
            x_lo = ldexp(d_lo, -bits)
        q_hi = 1.0 / x_lo
        q_lo = 1.0 / x_hi
        if weight:
            q_hi = q_hi / n
            q_lo = q_lo / n
        s_hi += q_hi * GUARD_UP
        s_lo += q_lo * GUARD_DN
        included += 1
    return s_lo, s_hi, included, flagged


def count_block(
    a: int,
    aw: int,
    b: int,
    bw: int,
    n0: int,
    n1: int,
    variant: int,
    t_lo: int,
    t_hi: int,
    bits: int,
):
    """Count of n in [n0, n1] with variant value <= threshold, exact.

    Returns (count, flagged); ambiguous memberships are flagged, never
    guessed.
    """
    modulus = 1 << bits
    half = modulus >> 1
    count = 0
    flagged = []
    for n in range(n0, n1 + 1):
        r = (n * a + b) % modulus
        w = n * aw + bw
        top = r + w
        if top >= modulus:
            flagged.append(n)
            continue
        if variant == 0:
            if top <= half:
                d_lo, d_hi = r, top
            elif r >= half:
                d_lo, d_hi = modulus - top, modulus - r
            else:
                m_top = modulus - top
                d_lo = r if r < m_top else m_top
                d_hi = half
        elif variant == 1:
            d_lo, d_hi = r, top
        else:
            if r == 0:
                flagged.append(n)
                continue
            d_lo, d_hi = modulus - top, modulus - r
        if d_hi <= t_lo:
            count += 1
        elif d_lo >= t_hi:
            pass
        else:
            flagged.append(n)
    return count, flagged

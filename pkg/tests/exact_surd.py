"""Independent exact arithmetic for quadratic surds.

Used as the oracle side of dual-route checks: values (u + v sqrt(D)) / w
are compared against rationals by pure integer sign tests, with no shared
code or representation with the library's 128-bit evaluation path.
"""

import math
from fractions import Fraction


def sign_a_plus_b_sqrt(a: int, b: int, d: int) -> int:
    """Sign of a + b*sqrt(d), exact (d positive non-square)."""
    if b == 0:
        return (a > 0) - (a < 0)
    if a == 0:
        return 1 if b > 0 else -1
    if a > 0 and b > 0:
        return 1
    if a < 0 and b < 0:
        return -1
    aa, bb = a * a, b * b * d
    if aa == bb:
        raise ArithmeticError("sqrt(d) rational?")
    if a > 0:  # b < 0
        return 1 if aa > bb else -1
    return 1 if bb > aa else -1


class Surd:
    """(u + v*sqrt(d)) / w, canonicalized to w > 0."""

    __slots__ = ("u", "v", "w", "d")

    def __init__(self, u, v, w, d):
        if w == 0:
            raise ZeroDivisionError("surd denominator")
        if w < 0:
            u, v, w = -u, -v, -w
        self.u, self.v, self.w, self.d = u, v, w, d

    @staticmethod
    def from_spec(spec, n: int = 1, shift=Fraction(0)):
        """n * (P + sqrt(D))/Q + shift, exact."""
        shift = Fraction(shift)
        bn, bd = shift.numerator, shift.denominator
        return Surd(
            n * spec.p * bd + bn * spec.q,
            n * bd,
            spec.q * bd,
            spec.d,
        )

    def cmp(self, fr) -> int:
        """Sign of self - fr for rational fr."""
        fr = Fraction(fr)
        p, q = fr.numerator, fr.denominator
        return sign_a_plus_b_sqrt(self.u * q - p * self.w, self.v * q, self.d)

    def floor(self) -> int:
        f = math.floor((self.u + self.v * math.sqrt(self.d)) / self.w)
        while self.cmp(f) < 0:
            f -= 1
        while self.cmp(f + 1) >= 0:
            f += 1
        return f

    def frac(self) -> "Surd":
        f = self.floor()
        return Surd(self.u - f * self.w, self.v, self.w, self.d)

    def one_minus(self) -> "Surd":
        return Surd(self.w - self.u, -self.v, self.w, self.d)

    def dist_nearest(self) -> "Surd":
        """||value||: assumes nothing, reduces mod 1 first."""
        x = self.frac()
        if x.cmp(Fraction(1, 2)) < 0:
            return x
        return x.one_minus()

    def enclosure(self, bits: int):
        """Exact rational (lo, hi) with lo < value < hi, width <= 2**-bits."""
        scale = 1 << (bits + 2)
        if self.v >= 0:
            s = math.isqrt(self.v * self.v * self.d * scale * scale)
            lo_num, hi_num = self.u * scale + s, self.u * scale + s + 1
        else:
            s = math.isqrt(self.v * self.v * self.d * scale * scale)
            lo_num, hi_num = self.u * scale - s - 1, self.u * scale - s
        den = self.w * scale
        return Fraction(lo_num, den), Fraction(hi_num, den)

    def reciprocal_bounds(self, bits: int = 200):
        """Exact rational (lo, hi) bracketing 1 / value (value > 0)."""
        lo, hi = self.enclosure(bits)
        if lo <= 0:
            raise ArithmeticError("need a positive value")
        return 1 / hi, 1 / lo

    def __float__(self):
        return (self.u + self.v * math.sqrt(self.d)) / self.w

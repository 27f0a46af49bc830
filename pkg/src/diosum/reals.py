"""Certified evaluation of {n*alpha + beta}, ||n*alpha + beta|| and threshold tests.

Everything is driven by one primitive: a certified integer A with
frac(alpha) * 2**bits strictly inside (A, A+1).  From it, n*alpha + beta mod 1
lives in an exact integer interval [r, r+w] / 2**bits, and the fractional-part,
complement and distance-to-nearest maps are exact integer transformations of
that interval.  Precision escalates by doubling until a decision is certified
or the cap is hit, in which case PrecisionExhausted is raised (never silently
classified).
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass
from fractions import Fraction

from . import cf
from .errors import DiosumError, PrecisionExhausted

__all__ = [
    "BallReal",
    "ThresholdDecision",
    "precision_cap",
    "DEFAULT_START_BITS",
    "eval_alpha",
    "frac_scaled",
    "int_part",
    "dist_nearest",
    "frac_part",
    "compare_threshold",
    "map_variant",
    "VARIANT_DIST",
    "VARIANT_FRAC",
    "VARIANT_COMPLEMENT",
]

DEFAULT_START_BITS = 128
_DEFAULT_CAP = 65536

VARIANT_DIST = 0
VARIANT_FRAC = 1
VARIANT_COMPLEMENT = 2


def precision_cap() -> int:
    """Precision cap in bits; override with DIOSUM_MAX_PRECISION_BITS."""
    raw = os.environ.get("DIOSUM_MAX_PRECISION_BITS")
    if raw is None:
        return _DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DiosumError(f"bad DIOSUM_MAX_PRECISION_BITS={raw!r}") from exc
    if cap <= 0:
        raise DiosumError("DIOSUM_MAX_PRECISION_BITS must be positive")
    return cap


@dataclass(frozen=True)
class BallReal:
    """Midpoint-radius enclosure of a real, with exact dyadic fields."""

    mid: Fraction
    rad: Fraction
    precision: int

    @staticmethod
    def from_endpoints(lo, hi, precision: int) -> "BallReal":
        lo, hi = Fraction(lo), Fraction(hi)
        if hi < lo:
            raise DiosumError("ball endpoints out of order")
        return BallReal(mid=(lo + hi) / 2, rad=(hi - lo) / 2, precision=precision)

    @property
    def lo(self) -> Fraction:
        return self.mid - self.rad

    @property
    def hi(self) -> Fraction:
        return self.mid + self.rad

    @property
    def width(self) -> Fraction:
        return 2 * self.rad

    def contains(self, x) -> bool:
        x = Fraction(x)
        return self.lo <= x <= self.hi

    def overlaps(self, other: "BallReal") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __float__(self) -> float:
        return float(self.mid)


@dataclass(frozen=True)
class ThresholdDecision:
    outcome: str  # "below" or "above"
    precision: int


# ---------------------------------------------------------------------------
# Scaled fractional part of alpha


@functools.lru_cache(maxsize=None)
def int_part(spec: cf.IrrationalSpec) -> int:
    """floor(alpha), exact."""
    if spec.kind == "surd":
        return cf.surd_floor_scaled(spec.p, spec.d, spec.q, 0)
    bits = 16
    cap = precision_cap()
    while True:
        lo, hi = cf.spec_interval(spec, bits)
        if math.floor(lo) == math.floor(hi):
            return math.floor(lo)
        if bits >= cap:
            raise PrecisionExhausted("cannot certify floor(alpha)", bits=cap)
        bits = min(2 * bits, cap)


@functools.lru_cache(maxsize=None)
def frac_scaled(spec: cf.IrrationalSpec, bits: int) -> int:
    """Certified A with frac(alpha) * 2**bits strictly in (A, A+1)."""
    if spec.kind == "surd":
        a0 = cf.surd_floor_scaled(spec.p, spec.d, spec.q, 0)
        return cf.surd_floor_scaled(spec.p, spec.d, spec.q, bits) - (a0 << bits)
    a0 = int_part(spec)
    guard = bits + 8
    cap = max(precision_cap(), bits + 8)
    while True:
        lo, hi = cf.spec_interval(spec, guard)
        fl_lo = (lo.numerator << bits) // lo.denominator
        fl_hi = (hi.numerator << bits) // hi.denominator
        if fl_lo == fl_hi:
            return fl_lo - (a0 << bits)
        if guard >= cap:
            raise PrecisionExhausted(
                f"cannot certify alpha to {bits} bits", bits=cap
            )
        guard = min(2 * guard, cap)


def beta_scaled(beta: Fraction, bits: int):
    """(B, w) with beta * 2**bits in [B, B+w], w in {0, 1}, exact."""
    beta = Fraction(beta)
    num = beta.numerator << bits
    b, rem = divmod(num, beta.denominator)
    return b, (0 if rem == 0 else 1)


def eval_alpha(spec: cf.IrrationalSpec, precision: int) -> BallReal:
    """Enclosure of alpha with radius <= 2**(1 - precision)."""
    if precision < 32:
        raise DiosumError("precision must be >= 32 bits")
    lo, hi = cf.spec_interval(spec, precision + 1)
    return BallReal.from_endpoints(lo, hi, precision)


# ---------------------------------------------------------------------------
# Circle-interval maps (shared, exact; the compiled kernel mirrors these)


def map_variant(r: int, w: int, modulus: int, variant: int):
    """Image of the circle interval [r, r+w]/modulus under the variant map.

    Returns exact integers (d_lo, d_hi) in units of 1/modulus, or None when
    the interval wraps through 0 and the image is not representable
    (callers must refine).  d_lo == 0 likewise signals a needed refinement
    for reciprocal and threshold uses.
    """
    top = r + w
    if top >= modulus:
        return None
    if variant == VARIANT_FRAC:
        return r, top
    if variant == VARIANT_COMPLEMENT:
        return modulus - top, modulus - r
    half = modulus >> 1
    if top <= half:
        return r, top
    if r >= half:
        return modulus - top, modulus - r
    return min(r, modulus - top), half


def _point_interval(spec, n: int, beta: Fraction, bits: int):
    """[r, r+w]/2**bits enclosing {n*alpha + beta}, exact integers."""
    a = frac_scaled(spec, bits)
    b, wb = beta_scaled(beta, bits)
    modulus = 1 << bits
    r = (n * a + b) % modulus
    w = n + wb
    return r, w, modulus


def _refine(spec, n, beta, variant, start_bits, rel_bits, cap):
    bits = start_bits
    while True:
        r, w, modulus = _point_interval(spec, n, beta, bits)
        mapped = map_variant(r, w, modulus, variant)
        if mapped is not None:
            d_lo, d_hi = mapped
            if d_lo > 0 and (d_hi - d_lo) <= max(1, d_lo >> rel_bits):
                return d_lo, d_hi, bits
        if bits >= cap:
            raise PrecisionExhausted(
                f"cannot certify variant {variant} at n={n} below {cap} bits",
                index=n,
                bits=cap,
            )
        bits = min(2 * bits, cap)


def dist_nearest(
    spec: cf.IrrationalSpec,
    n: int,
    beta=Fraction(0),
    rel_bits: int = 64,
    start_bits: int = DEFAULT_START_BITS,
) -> BallReal:
    """Certified enclosure of ||n*alpha + beta||, beta rational."""
    if n < 1:
        raise DiosumError("n must be >= 1")
    cap = precision_cap()
    d_lo, d_hi, bits = _refine(
        spec, n, Fraction(beta), VARIANT_DIST, start_bits, rel_bits, cap
    )
    modulus = 1 << bits
    return BallReal.from_endpoints(
        Fraction(d_lo, modulus), Fraction(d_hi, modulus), bits
    )


def frac_part(
    spec: cf.IrrationalSpec,
    n: int,
    beta=Fraction(0),
    rel_bits: int = 64,
    start_bits: int = DEFAULT_START_BITS,
):
    """Balls for {n*alpha + beta} and its complement 1 - {n*alpha + beta}."""
    if n < 1:
        raise DiosumError("n must be >= 1")
    cap = precision_cap()
    beta = Fraction(beta)
    d_lo, d_hi, bits = _refine(spec, n, beta, VARIANT_FRAC, start_bits, rel_bits, cap)
    modulus = 1 << bits
    frac = BallReal.from_endpoints(Fraction(d_lo, modulus), Fraction(d_hi, modulus), bits)
    comp = BallReal.from_endpoints(
        Fraction(modulus - d_hi, modulus), Fraction(modulus - d_lo, modulus), bits
    )
    return frac, comp


def compare_threshold(
    producer, threshold, start_bits: int = DEFAULT_START_BITS
) -> ThresholdDecision:
    """Certified strict comparison of a refinable value against a rational.

    `producer(bits)` must return a BallReal whose radius shrinks as bits grow.
    Since the values compared here are irrational and thresholds rational,
    equality cannot occur and the doubling loop terminates in principle; the
    cap guards pathological specs.
    """
    threshold = Fraction(threshold)
    if threshold <= 0:
        raise DiosumError("threshold must be a positive rational")
    cap = precision_cap()
    bits = start_bits
    while True:
        ball = producer(bits)
        if ball.hi < threshold:
            return ThresholdDecision("below", bits)
        if ball.lo > threshold:
            return ThresholdDecision("above", bits)
        if bits >= cap:
            raise PrecisionExhausted(
                f"threshold {threshold} not separated below {cap} bits", bits=cap
            )
        bits = min(2 * bits, cap)

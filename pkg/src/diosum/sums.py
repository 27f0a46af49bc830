"""Certified brute-force evaluation of every reciprocal sum family.

All families share one pipeline: terms are evaluated in blocks by the
kernel at 128 working bits, block subtotals are combined by a fixed
balanced reduction over chunks of 2**14 indices (deterministic and
independent of worker count), terms the kernel cannot certify are resolved
exactly at escalating precision, and a final outward guard turns the
directed double bounds into an exact dyadic enclosure.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import kernel
from .cf import IrrationalSpec, expand_data, locate_block
from .errors import DiosumError, PrecisionExhausted, RationalDependence
from .reals import (
    VARIANT_COMPLEMENT,
    VARIANT_DIST,
    VARIANT_FRAC,
    BallReal,
    beta_scaled,
    frac_scaled,
    map_variant,
    precision_cap,
)

__all__ = [
    "SumResult",
    "sum_dist",
    "sum_harmonic_dist",
    "sum_frac",
    "find_min_index",
    "sum_shifted",
    "sum_multidim",
    "small_dist_indices",
]

CHUNK = 1 << 14
DEFAULT_REL_TOL = Fraction(1, 10**9)
_GUARD_UP = 1.0 + 2.0**-48
_GUARD_DN = 1.0 - 2.0**-48

_VARIANT_IDS = {"dist": VARIANT_DIST, "frac": VARIANT_FRAC, "complement": VARIANT_COMPLEMENT}


@dataclass(frozen=True)
class SumResult:
    enclosure: BallReal
    N: int
    variant: str
    weight: str
    cutoff: Fraction | None
    beta: Fraction | None
    excluded_index: int | None
    terms_included: int
    precision_bits: int

    @property
    def value(self) -> float:
        return float(self.enclosure.mid)

    @property
    def width(self) -> float:
        return float(self.enclosure.width)


def _workers() -> int:
    raw = os.environ.get("DIOSUM_WORKERS")
    if raw:
        return max(1, int(raw))
    return max(1, os.cpu_count() or 1)


def _float_up(fr: Fraction) -> float:
    f = float(fr)
    return f if Fraction(f) >= fr else math.nextafter(f, math.inf)


def _float_dn(fr: Fraction) -> float:
    f = float(fr)
    return f if Fraction(f) <= fr else math.nextafter(f, -math.inf)


def _cut_band(cutoff: Fraction | None, bits: int):
    if cutoff is None:
        return None
    num = cutoff.numerator << bits
    lo, rem = divmod(num, cutoff.denominator)
    return lo, lo + (0 if rem == 0 else 1)


def _pairwise(values):
    """Fixed balanced reduction; deterministic for a given leaf order."""
    values = list(values)
    if not values:
        return 0.0
    while len(values) > 1:
        nxt = []
        for i in range(0, len(values) - 1, 2):
            nxt.append(values[i] + values[i + 1])
        if len(values) % 2:
            nxt.append(values[-1])
        values = nxt
    return values[0]


def _assemble(lo_leaves, hi_leaves, included, bits, n_resolved) -> BallReal:
    """Enclosure from directed per-leaf bounds plus an outward summation guard.

    Each internal sequential run is at most CHUNK additions and the
    reduction tree depth is logarithmic, so (CHUNK + 64 + resolved) units of
    2**-50 per side dominates the accumulated rounding with a wide margin.
    """
    if included == 0:
        return BallReal(Fraction(0), Fraction(0), bits)
    s_lo = _pairwise(lo_leaves)
    s_hi = _pairwise(hi_leaves)
    eps = math.ldexp(CHUNK + 64 + n_resolved, -50)
    lo = s_lo * (1.0 - eps)
    hi = s_hi * (1.0 + eps)
    return BallReal.from_endpoints(Fraction(lo), Fraction(hi), bits)


# ---------------------------------------------------------------------------
# Exact resolution of kernel-flagged terms


def _linear_interval(entries, beta: Fraction, bits: int):
    """[r, r+w]/2**bits enclosing frac(sum coef*alpha + beta), exact."""
    modulus = 1 << bits
    r = 0
    w = 0
    for spec, coef in entries:
        a = frac_scaled(spec, bits)
        r += coef * a
        if coef < 0:
            r += coef
        w += abs(coef)
    b, wb = beta_scaled(beta, bits)
    return (r + b) % modulus, w + wb, modulus


def _resolve_term(entries, beta, variant, weight_div, cutoff, label,
                  dependence_suspect=False):
    """Certified (t_lo, t_hi) float bounds for one term, or None if excluded.

    Escalates precision by doubling; raises PrecisionExhausted at the cap.
    With dependence_suspect (multidimensional linear forms), a value that
    keeps straddling an integer at the cap raises RationalDependence
    instead.
    """
    cap = precision_cap()
    bits = 256
    while True:
        r, w, modulus = _linear_interval(entries, beta, bits)
        mapped = map_variant(r, w, modulus, variant)
        separated = mapped is not None and mapped[0] > 0
        if separated:
            d_lo, d_hi = mapped
            if cutoff is not None:
                if Fraction(d_hi, modulus) <= cutoff:
                    return None
                if Fraction(d_lo, modulus) < cutoff:
                    separated = False
            if separated and (d_hi - d_lo) << 48 <= d_lo:
                t_hi = Fraction(modulus, d_lo * weight_div)
                t_lo = Fraction(modulus, d_hi * weight_div)
                return _float_dn(t_lo), _float_up(t_hi)
        if bits >= cap:
            if dependence_suspect and (mapped is None or mapped[0] == 0):
                raise RationalDependence(
                    f"{label}: linear form stays next to an integer at {cap} bits"
                )
            raise PrecisionExhausted(
                f"{label}: term not certified below {cap} bits", bits=cap
            )
        bits = min(2 * bits, cap)


# ---------------------------------------------------------------------------
# One-dimensional driver


def _sum_range(spec, beta, N, variant, weight, cutoff, exclude, bits):
    a = frac_scaled(spec, bits)
    b, wb = beta_scaled(beta, bits)
    modulus = 1 << bits
    b %= modulus
    cut = _cut_band(cutoff, bits)
    if cut is not None and cut[0] >= modulus:
        # cutoff >= 1 excludes every term: the variant values are < 1 strictly
        return BallReal(Fraction(0), Fraction(0), bits), 0
    blocks = [(n0, min(n0 + CHUNK - 1, N)) for n0 in range(1, N + 1, CHUNK)]

    def run(block):
        n0, n1 = block
        return kernel.sum_block(a, 1, b, wb, n0, n1, variant, weight, cut, exclude, bits)

    if len(blocks) > 1 and kernel.backend() == "c" and _workers() > 1:
        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(block) for block in blocks]

    lo_leaves = [r[0] for r in results]
    hi_leaves = [r[1] for r in results]
    included = sum(r[2] for r in results)
    flagged = sorted(n for r in results for n in r[3])
    for n in flagged:
        resolved = _resolve_term(
            [(spec, n)], beta, variant, n if weight else 1, cutoff, f"n={n}"
        )
        if resolved is None:
            continue
        lo_leaves.append(resolved[0])
        hi_leaves.append(resolved[1])
        included += 1
    return _assemble(lo_leaves, hi_leaves, included, bits, len(flagged)), included


def _certified_sum(spec, N, variant_name, weight_name, cutoff, beta, exclude,
                   rel_tol=DEFAULT_REL_TOL):
    if N < 1:
        raise DiosumError("N must be >= 1")
    variant = _VARIANT_IDS[variant_name]
    weight = 1 if weight_name == "1/n" else 0
    beta = Fraction(beta) if beta is not None else Fraction(0)
    cutoff = Fraction(cutoff) if cutoff is not None else None
    bits = 128
    while True:
        ball, included = _sum_range(spec, beta, N, variant, weight, cutoff, exclude, bits)
        if included == 0 or ball.width <= rel_tol * abs(ball.mid):
            return SumResult(
                enclosure=ball,
                N=N,
                variant=variant_name,
                weight=weight_name,
                cutoff=cutoff,
                beta=beta if beta != 0 else None,
                excluded_index=exclude if exclude else None,
                terms_included=included,
                precision_bits=bits,
            )
        if bits >= min(precision_cap(), 768):
            raise PrecisionExhausted(
                f"relative tolerance {rel_tol} unreachable at {bits} bits", bits=bits
            )
        bits *= 2


# ---------------------------------------------------------------------------
# Public sum families


def sum_dist(spec: IrrationalSpec, N: int, c) -> SumResult:
    """Sum over n <= N with ||n alpha|| >= c/N of 1/||n alpha||."""
    c = Fraction(c)
    if c <= 0:
        raise DiosumError("c must be a positive rational")
    return _certified_sum(spec, N, "dist", "1", c / Fraction(N), None, 0)


def sum_harmonic_dist(spec: IrrationalSpec, N: int) -> SumResult:
    """Sum over n <= N of 1/(n ||n alpha||); no cutoff needed."""
    return _certified_sum(spec, N, "dist", "1/n", None, None, 0)


def sum_frac(spec: IrrationalSpec, N: int, c=None, variant: str = "frac",
             weight: str = "1") -> SumResult:
    """Fractional-part sums: 1/{n alpha} or 1/(1 - {n alpha}), weight 1 or 1/n."""
    if variant not in ("frac", "complement"):
        raise DiosumError("variant must be 'frac' or 'complement'")
    if weight not in ("1", "1/n"):
        raise DiosumError("weight must be '1' or '1/n'")
    if weight == "1" and c is None:
        raise DiosumError("cutoff c is required for weight 1")
    cutoff = None
    if c is not None:
        c = Fraction(c)
        if c <= 0:
            raise DiosumError("c must be a positive rational")
        cutoff = c / Fraction(N)
    return _certified_sum(spec, N, variant, weight, cutoff, None, 0)


def _argmin_variant(spec, beta, N, variant_name):
    variant = _VARIANT_IDS[variant_name]
    beta = Fraction(beta)
    cap = precision_cap()
    bits = 128
    candidates = list(range(1, N + 1))
    while True:
        a = frac_scaled(spec, bits)
        b, wb = beta_scaled(beta, bits)
        modulus = 1 << bits
        ivals = []
        best_hi = None
        for n in candidates:
            r = (n * a + b) % modulus
            mapped = map_variant(r, n + wb, modulus, variant)
            if mapped is None:
                mapped = (0, modulus)  # wrapped; could be arbitrarily small
            ivals.append((n, mapped[0], mapped[1]))
            if best_hi is None or mapped[1] < best_hi:
                best_hi = mapped[1]
        alive = [(n, lo, hi) for (n, lo, hi) in ivals if lo <= best_hi]
        if len(alive) == 1:
            return alive[0][0]
        if bits >= cap:
            raise PrecisionExhausted(
                f"argmin tie among {[n for n, _, _ in alive]} unresolved at "
                f"{cap} bits (reported, not guessed)",
                bits=cap,
            )
        candidates = [n for n, _, _ in alive]
        bits = min(2 * bits, cap)


def find_min_index(spec: IrrationalSpec, beta, N: int) -> int:
    """Certified argmin of ||n alpha + beta|| over 1 <= n <= N.

    Exact ties are impossible for rational beta and irrational alpha (a tie
    would force alpha rational), so refinement terminates in principle; an
    unresolved overlap at the cap is reported, never guessed.
    """
    if N < 1:
        raise DiosumError("N must be >= 1")
    return _argmin_variant(spec, beta, N, "dist")


def sum_shifted(spec: IrrationalSpec, beta, N: int, mode: str = "exclude_min",
                weight: str = "1", variant: str = "dist") -> SumResult:
    """Shifted sums 1/||n alpha + beta|| and fractional-part variants.

    mode "exclude_min" omits the index minimizing the variant value over
    1 <= n <= N and records it in the result; mode "full" keeps every index.
    """
    if mode not in ("exclude_min", "full"):
        raise DiosumError("mode must be 'exclude_min' or 'full'")
    if variant not in _VARIANT_IDS:
        raise DiosumError(f"unknown variant {variant!r}")
    if weight not in ("1", "1/n"):
        raise DiosumError("weight must be '1' or '1/n'")
    exclude = _argmin_variant(spec, beta, N, variant) if mode == "exclude_min" else 0
    return _certified_sum(spec, N, variant, weight, None, beta, exclude)


# ---------------------------------------------------------------------------
# Higher-dimensional sums over [-N, N]^d \ {0}


class _LatticeAccumulator:
    """Collects directed per-segment bounds for half-lattice evaluation."""

    def __init__(self, specs, N, bits):
        self.specs = specs
        self.N = N
        self.bits = bits
        self.modulus = 1 << bits
        self.A = [frac_scaled(s, bits) for s in specs]
        # scaled floor of 1 - alpha_i, for negative coefficients
        self.Aneg = [self.modulus - a - 1 for a in self.A]
        self.lo_leaves = []
        self.hi_leaves = []
        self.included = 0
        self.n_resolved = 0

    def point(self, vector, weight_div):
        entries = [(s, c) for s, c in zip(self.specs, vector) if c != 0]
        res = _resolve_term(
            entries, Fraction(0), VARIANT_DIST, weight_div, None, f"n={vector}",
            dependence_suspect=True,
        )
        self.n_resolved += 1
        if res is not None:
            self.lo_leaves.append(res[0])
            self.hi_leaves.append(res[1])
            self.included += 1

    def segment(self, mult, base, bw, j0, j1, vec_fn, weight_div=1):
        """Kernel run over dist(base + j*mult) for j in [j0, j1]."""
        if j1 < j0:
            return
        s_lo, s_hi, m, flags = kernel.sum_block(
            mult, 1, base % self.modulus, bw, j0, j1, VARIANT_DIST, 0, None, 0, self.bits
        )
        if weight_div != 1:
            inv_lo = _float_dn(Fraction(1, weight_div))
            inv_hi = _float_up(Fraction(1, weight_div))
            s_lo = (s_lo * inv_lo) * _GUARD_DN
            s_hi = (s_hi * inv_hi) * _GUARD_UP
        self.lo_leaves.append(s_lo)
        self.hi_leaves.append(s_hi)
        self.included += m
        for j in flags:
            self.point(vec_fn(j), weight_div)

    def prefix_base(self, prefix):
        r = 0
        w = 0
        for a, aneg, coef in zip(self.A, self.Aneg, prefix):
            if coef >= 0:
                r += coef * a
            else:
                r += (-coef) * aneg
            w += abs(coef)
        return r % self.modulus, w


def _emit_unit_half(acc: _LatticeAccumulator, dim: int, pad):
    """Segments covering {n in [-N,N]^dim \\ 0, first nonzero coord > 0},
    embedded in the first `dim` coordinates (remaining coords zero)."""
    N = acc.N

    def rec(prefix, started):
        if len(prefix) == dim - 1:
            pfx = tuple(prefix)
            base, bw = acc.prefix_base(prefix)
            if started:
                acc.segment(
                    acc.Aneg[dim - 1], base, bw, 1, N,
                    lambda j, p=pfx: p + (-j,) + pad,
                )
            # an all-zero prefix contributes positives only (first nonzero > 0)
            acc.segment(
                acc.A[dim - 1], base, bw, 1, N,
                lambda j, p=pfx: p + (j,) + pad,
            )
            return
        lo = -N if started else 0
        for coef in range(lo, N + 1):
            rec(prefix + [coef], started or coef != 0)

    rec([], False)
    if dim > 1:
        # vectors whose last coordinate is zero: the (dim-1)-dimensional half lattice
        _emit_unit_half(acc, dim - 1, (0,) + pad)


def _emit_linf_half_2d(acc: _LatticeAccumulator):
    """Half shells ||n||_inf = ell for d = 2, with weight divisor ell**2."""
    N = acc.N
    a1, a2 = acc.A
    neg2 = acc.Aneg[1]
    modulus = acc.modulus
    for ell in range(1, N + 1):
        wd = ell * ell
        row_base = (ell * a1) % modulus
        acc.segment(a2, row_base, ell, 1, ell, lambda j, L=ell: (L, j), wd)
        acc.segment(neg2, row_base, ell, 1, ell, lambda j, L=ell: (L, -j), wd)
        acc.segment(a1, 0, 0, ell, ell, lambda j: (j, 0), wd)
        if ell >= 2:
            col_pos = (ell * a2) % modulus
            col_neg = (ell * neg2) % modulus
            acc.segment(a1, col_pos, ell, 1, ell - 1, lambda j, L=ell: (j, L), wd)
            acc.segment(a1, col_neg, ell, 1, ell - 1, lambda j, L=ell: (j, -L), wd)
        acc.segment(a2, 0, 0, ell, ell, lambda j: (0, j), wd)


def sum_multidim(specs, N: int, weight: str = "1") -> SumResult:
    """Sum over n in [-N, N]^d \\ {0} of weight(n) / ||n_1 a_1 + ... + n_d a_d||.

    weight "1" or "linf" (the latter is ||n||_inf ** -d).  Exploits the
    symmetry ||-x|| = ||x||: the half lattice with first nonzero coordinate
    positive is evaluated and the result doubled (an exact scaling).
    Raises RationalDependence if some nonzero vector appears to send the
    linear form to an integer.
    """
    specs = tuple(specs)
    d = len(specs)
    if d < 1 or N < 1:
        raise DiosumError("need d >= 1 and N >= 1")
    if weight not in ("1", "linf"):
        raise DiosumError("weight must be '1' or 'linf'")
    acc = _LatticeAccumulator(specs, N, 128)
    if weight == "1":
        _emit_unit_half(acc, d, ())
    elif d == 1:
        # ||n||_inf = n on the half line: the kernel's 1/n weight
        s_lo, s_hi, m, flags = kernel.sum_block(
            acc.A[0], 1, 0, 0, 1, N, VARIANT_DIST, 1, None, 0, acc.bits
        )
        acc.lo_leaves.append(s_lo)
        acc.hi_leaves.append(s_hi)
        acc.included += m
        for j in flags:
            acc.point((j,), j)
    elif d == 2:
        _emit_linf_half_2d(acc)
    else:
        raise DiosumError("linf weight is implemented for d <= 2")

    ball = _assemble(acc.lo_leaves, acc.hi_leaves, acc.included, acc.bits, acc.n_resolved)
    ball = BallReal(ball.mid * 2, ball.rad * 2, ball.precision)  # mirror half, exact
    return SumResult(
        enclosure=ball,
        N=N,
        variant="multidim-dist",
        weight=weight,
        cutoff=None,
        beta=None,
        excluded_index=None,
        terms_included=acc.included * 2,
        precision_bits=acc.bits,
    )


# ---------------------------------------------------------------------------
# Indices with ||n alpha|| < 1/(2n)


def small_dist_indices(spec: IrrationalSpec, N: int) -> list:
    """Sorted n <= N with ||n alpha|| < 1/(2n); each returned index is
    verified (not assumed) to be a multiple of its block's q_k."""
    if N < 1:
        raise DiosumError("N must be >= 1")
    cap = precision_cap()
    bits = 128
    a = frac_scaled(spec, bits)
    modulus = 1 << bits
    out = []
    for n in range(1, N + 1):
        r = (n * a) % modulus
        mapped = map_variant(r, n, modulus, VARIANT_DIST)
        decided = None
        if mapped is not None:
            d_lo, d_hi = mapped
            if 2 * n * d_hi < modulus:
                decided = True
            elif 2 * n * d_lo >= modulus:
                decided = False
        if decided is None:
            decided = _small_dist_resolve(spec, n, cap)
        if decided:
            out.append(n)
    data = expand_data(spec, locate_block(spec, N) + 1)
    for n in out:
        k = data.block_index(n)
        if n % data.q[k] != 0:
            raise DiosumError(
                f"convergent-multiple structure violated at n={n}: "
                f"q_{k}={data.q[k]} does not divide it"
            )
    return out


def _small_dist_resolve(spec, n, cap) -> bool:
    bits = 256
    while True:
        a = frac_scaled(spec, bits)
        modulus = 1 << bits
        r = (n * a) % modulus
        mapped = map_variant(r, n, modulus, VARIANT_DIST)
        if mapped is not None:
            d_lo, d_hi = mapped
            if 2 * n * d_hi < modulus:
                return True
            if 2 * n * d_lo >= modulus:
                return False
        if bits >= cap:
            raise PrecisionExhausted(
                f"||{n} alpha|| vs 1/(2n) not separated below {cap} bits",
                index=n,
                bits=cap,
            )
        bits = min(2 * bits, cap)

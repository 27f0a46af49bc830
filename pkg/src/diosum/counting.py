"""Counting functions and discrepancy quantities.

count_dist_le is the certified brute-force count; count_fast computes the
same number in time roughly logarithmic in N by a Euclidean descent on
floor sums: #{n <= N : {n y + z} <= t} is a difference of two sums
G(N, y, z) = sum_{n<=N} floor(n y + z), and G satisfies an exact recursion
that replaces y by a unimodular image of itself with N shrinking
geometrically.  The state keeps y as an integer Moebius transform of alpha
and z = u + v y with rational u, v, so every floor taken along the way is a
certified decision about a linear fractional expression in alpha (with an
exact algebraic test for the integer edge case, which alpha's
irrationality makes decidable).

Discrepancy is computed by the standard finite reduction over intervals
with endpoints at the sample points; local discrepancy extrema are exact
integer scans.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import kernel
from .cf import ContinuedFractionData, IrrationalSpec, expand_data, locate_block
from .errors import DiosumError, PrecisionExhausted
from .reals import (
    VARIANT_DIST,
    BallReal,
    beta_scaled,
    frac_scaled,
    map_variant,
    precision_cap,
)

__all__ = [
    "count_dist_le",
    "count_fast",
    "pigeonhole_bound",
    "discrepancy",
    "discrepancy_profile",
    "local_disc_extrema",
    "local_disc_extrema_batch",
    "schoissengeier_prediction",
    "count_multidim",
]

_VARIANTS = {"dist": 0, "frac": 1, "complement": 2}
_BRUTE_CUTOFF = 64  # descent defers to direct evaluation below this length
CHUNK = 1 << 14


# ---------------------------------------------------------------------------
# Certified brute-force count


def _threshold_band(t: Fraction, bits: int):
    num = t.numerator << bits
    lo, rem = divmod(num, t.denominator)
    return lo, lo + (0 if rem == 0 else 1)


def _resolve_member(entries, beta, variant, t):
    """Exact decision of `variant value <= t` for sum(coef*alpha) + beta."""
    cap = precision_cap()
    bits = 256
    while True:
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
        r = (r + b) % modulus
        mapped = map_variant(r, w + wb, modulus, variant)
        if mapped is not None:
            d_lo, d_hi = mapped
            if Fraction(d_hi, modulus) <= t:
                return True
            if Fraction(d_lo, modulus) >= t:
                return False
        if bits >= cap:
            raise PrecisionExhausted(
                f"membership vs t={t} not separated below {cap} bits", bits=cap
            )
        bits = min(2 * bits, cap)


def count_dist_le(spec: IrrationalSpec, N: int, t, variant: str = "dist",
                  beta=None) -> int:
    """|{1 <= n <= N : variant(n alpha + beta) <= t}|, every membership certified."""
    t = Fraction(t)
    if t <= 0 or N < 1:
        raise DiosumError("need t > 0 and N >= 1")
    if variant not in _VARIANTS:
        raise DiosumError(f"unknown variant {variant!r}")
    beta = Fraction(beta) if beta is not None else Fraction(0)
    vid = _VARIANTS[variant]
    if (variant == "dist" and t >= Fraction(1, 2)) or t >= 1:
        return N
    bits = 128
    a = frac_scaled(spec, bits)
    b, wb = beta_scaled(beta, bits)
    b %= 1 << bits
    t_lo, t_hi = _threshold_band(t, bits)
    total = 0
    for n0 in range(1, N + 1, CHUNK):
        n1 = min(n0 + CHUNK - 1, N)
        cnt, flags = kernel.count_block(a, 1, b, wb, n0, n1, vid, t_lo, t_hi, bits)
        total += cnt
        for n in flags:
            if _resolve_member([(spec, n)], beta, vid, t):
                total += 1
    return total


# ---------------------------------------------------------------------------
# Moebius-coefficient floor machinery for the fast count


class _Ctx:
    __slots__ = ("spec", "cap", "bits", "a", "modulus")

    def __init__(self, spec):
        self.spec = spec
        self.cap = precision_cap()
        self.bits = 128
        self.a = frac_scaled(spec, 128)
        self.modulus = 1 << 128

    def refine(self):
        if self.bits >= self.cap:
            raise PrecisionExhausted(
                f"floor not certified below {self.cap} bits", bits=self.cap
            )
        self.bits = min(2 * self.bits, self.cap)
        self.a = frac_scaled(self.spec, self.bits)
        self.modulus = 1 << self.bits


def _mfloor(ctx: _Ctx, pn: int, qn: int, rd: int, sd: int) -> int:
    """Certified floor((pn*alpha + qn) / (rd*alpha + sd)), integer coefficients.

    The expression equals an integer m only identically (pn = m rd and
    qn = m sd), since alpha is irrational; otherwise interval refinement
    separates it from every integer.
    """
    if rd == 0 and sd == 0:
        raise DiosumError("zero denominator in floor expression")
    while True:
        a, modulus = ctx.a, ctx.modulus
        if pn >= 0:
            num_lo, num_hi = pn * a + qn * modulus, pn * (a + 1) + qn * modulus
        else:
            num_lo, num_hi = pn * (a + 1) + qn * modulus, pn * a + qn * modulus
        if rd >= 0:
            den_lo, den_hi = rd * a + sd * modulus, rd * (a + 1) + sd * modulus
        else:
            den_lo, den_hi = rd * (a + 1) + sd * modulus, rd * a + sd * modulus
        if den_lo <= 0 <= den_hi:
            ctx.refine()
            continue
        # floor is monotone, so the extreme floors sit at the corners
        f1 = num_lo // den_lo
        f2 = num_lo // den_hi
        f3 = num_hi // den_lo
        f4 = num_hi // den_hi
        f_lo = min(f1, f2, f3, f4)
        f_hi = max(f1, f2, f3, f4)
        if f_lo == f_hi:
            return f_lo
        if f_hi - f_lo == 1 and pn == f_hi * rd and qn == f_hi * sd:
            return f_hi  # the expression is exactly the integer f_hi
        ctx.refine()


def _floor_linear(ctx: _Ctx, p: Fraction, q: Fraction, y) -> int:
    """floor(p*y + q) for rational p, q and y = (a alpha + b)/(c alpha + d)."""
    a, b, c, d = y
    num1 = p * a + q * c
    num0 = p * b + q * d
    den = num1.denominator * num0.denominator // math.gcd(
        num1.denominator, num0.denominator
    )
    pn, qn = num1 * den, num0 * den
    assert pn.denominator == 1 and qn.denominator == 1
    return _mfloor(ctx, pn.numerator, qn.numerator, c * den, d * den)


def _gsum_brute(ctx: _Ctx, N: int, y, u: Fraction, v: Fraction) -> int:
    """Direct evaluation of sum_{n<=N} floor((n+v) y + u), integer interval
    arithmetic only; ambiguous indices are retried at refined precision."""
    a, b, c, d = y
    un, ud = u.numerator, u.denominator
    vn, vd = v.numerator, v.denominator
    total = 0
    pending = list(range(1, N + 1))
    while pending:
        A, modulus = ctx.a, ctx.modulus
        if a >= 0:
            y_lo, y_hi = a * A + b * modulus, a * (A + 1) + b * modulus
        else:
            y_lo, y_hi = a * (A + 1) + b * modulus, a * A + b * modulus
        if c >= 0:
            d_lo, d_hi = c * A + d * modulus, c * (A + 1) + d * modulus
        else:
            d_lo, d_hi = c * (A + 1) + d * modulus, c * A + d * modulus
        if d_lo <= 0 <= d_hi:
            ctx.refine()
            continue
        den1, den2 = vd * ud * d_lo, vd * ud * d_hi
        retry = []
        for n in pending:
            p = (n * vd + vn) * ud
            if p == 0:  # value is exactly u
                total += un // ud
                continue
            q = un * vd
            if p >= 0:
                n_lo, n_hi = p * y_lo, p * y_hi
            else:
                n_lo, n_hi = p * y_hi, p * y_lo
            if q >= 0:
                n_lo += q * d_lo
                n_hi += q * d_hi
            else:
                n_lo += q * d_hi
                n_hi += q * d_lo
            f1 = n_lo // den1
            f2 = n_lo // den2
            f3 = n_hi // den1
            f4 = n_hi // den2
            f_lo = min(f1, f2, f3, f4)
            f_hi = max(f1, f2, f3, f4)
            if f_lo == f_hi:
                total += f_lo
            else:
                retry.append(n)
        if retry:
            ctx.refine()
        pending = retry
    return total


def _gsum(ctx: _Ctx, N: int, y, u: Fraction, v: Fraction) -> int:
    """sum_{n=1}^{N} floor(n y + z) with z = u + v y, exact.

    y is an integer Moebius 4-tuple acting on alpha; the descent keeps
    0 < y < 1/2 (reflecting y -> 1 - y when needed) so N shrinks at least
    geometrically, and bottoms out at direct evaluation below
    _BRUTE_CUTOFF.
    """
    total = 0
    while True:
        if N <= 0:
            return total
        if N < _BRUTE_CUTOFF:
            return total + _gsum_brute(ctx, N, y, u, v)
        fy = _floor_linear(ctx, Fraction(1), Fraction(0), y)
        fz = _floor_linear(ctx, v, u, y)
        if fy or fz:
            total += fy * (N * (N + 1) // 2) + fz * N
            a, b, c, d = y
            y = (a - fy * c, b - fy * d, c, d)
            u = u + v * fy - fz
            continue
        # now 0 < y < 1, 0 <= z < 1
        two_y = _floor_linear(ctx, Fraction(2), Fraction(0), y)
        if two_y >= 1:
            # reflect y -> 1 - y (in (0, 1/2)); floor(n y + z) becomes
            # n - 1 - floor(n y' - z) except at exact-integer hits, which
            # require v = -n and u integral and are counted exactly.
            a, b, c, d = y
            y = (c - a, d - b, c, d)
            u, v = -(u + v), v
            corr = 0
            if v.denominator == 1 and u.denominator == 1:
                n_hit = -int(v)  # an exact hit needs n = -v (and u integral)
                if 1 <= n_hit <= N:
                    corr = 1
            # G_old = N(N+1)/2 - N + corr - G_new
            total += N * (N + 1) // 2 - N + corr
            return total - _gsum(ctx, N, y, u, v)
        M = _floor_linear(ctx, v + N, u, y)
        if M <= 0:
            return total
        total += N * M + M
        # y <- -1/y, z <- z / y = v + (-u) * (-1/y)
        a, b, c, d = y
        y = (-c, -d, a, b)
        u, v = v, -u
        N = M


def count_fast(spec: IrrationalSpec, N: int, t, variant: str = "dist",
               beta=None) -> int:
    """Same value as count_dist_le, computed sublinearly in N.

    With C(x) = #{n <= N : {n alpha + beta} < x} = G(beta) - G(beta - x),
    the G(beta) terms cancel in every variant, leaving two floor-sum
    descents per count:
      dist:        N - G(beta - t) + G(beta + t - 1)
      frac:        G(beta) - G(beta - t)
      complement:  N - G(beta) + G(beta + t - 1)
    """
    t = Fraction(t)
    if t <= 0 or N < 1:
        raise DiosumError("need t > 0 and N >= 1")
    if variant not in _VARIANTS:
        raise DiosumError(f"unknown variant {variant!r}")
    beta = Fraction(beta) if beta is not None else Fraction(0)
    ctx = _Ctx(spec)
    y0 = (1, 0, 0, 1)  # frac(alpha); the shift enters through z

    def g(z):
        return _gsum(ctx, N, y0, z, Fraction(0))

    if variant == "dist":
        if t >= Fraction(1, 2):
            return N
        return N - g(beta - t) + g(beta + t - 1)
    if t >= 1:
        return N
    if variant == "frac":
        return g(beta) - g(beta - t)
    return N - g(beta) + g(beta + t - 1)


def pigeonhole_bound(spec: IrrationalSpec, N: int, t) -> Fraction:
    """4 q_{K+1} t + 1 for the block q_K <= N < q_{K+1}, exact rational."""
    t = Fraction(t)
    if t <= 0 or N < 1:
        raise DiosumError("need t > 0 and N >= 1")
    K = locate_block(spec, N)
    data = expand_data(spec, K + 1)
    return 4 * data.q[K + 1] * t + 1


# ---------------------------------------------------------------------------
# Discrepancy


def _sample_points(spec: IrrationalSpec, N: int, bits: int = 128):
    """Floats x_n ~ {n alpha} with |error| <= 2**-52 each, plus that bound."""
    a = frac_scaled(spec, bits)
    modulus = 1 << bits
    scale = math.ldexp(1.0, -bits)
    xs = np.empty(N, dtype=np.float64)
    r = 0
    for n in range(N):
        r = (r + a) % modulus
        xs[n] = r * scale
    return xs, math.ldexp(1.0, -52)


def _disc_from_sorted(xs: np.ndarray, N: int):
    """D_N from sorted sample floats.

    Overfull deviation sup over closed [x_i, x_j]:  max(u_j - min_{i<=j} u_i) + 1
    with u_j = j - N x_j (1-based j); underfull sup over open intervals and
    boundary gaps: max over i < j of (v_j - v_i) + 1 on v extended by
    v_0 = 0 (left boundary) and v_{N+1} = -1 (right boundary), v = -u.
    """
    idx = np.arange(1, N + 1, dtype=np.float64)
    u = idx - N * xs
    e_plus = float(np.max(u - np.minimum.accumulate(u))) + 1.0
    v = np.concatenate(([0.0], -u, [-1.0]))
    prefix = np.minimum.accumulate(v)[:-1]
    e_minus = float(np.max(v[1:] - prefix)) + 1.0
    return max(e_plus, e_minus)


def discrepancy(spec: IrrationalSpec, N: int) -> BallReal:
    """D_N(alpha) = sup over subintervals of |count - length * N|, certified.

    The supremum is attained in the limit over intervals with endpoints at
    the sample points (closed and open limits both realized by the two
    scans); the float evaluation carries a rigorous error slack.
    """
    if N < 1:
        raise DiosumError("N must be >= 1")
    xs, point_err = _sample_points(spec, N)
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    gaps = np.diff(xs)
    if N > 1 and float(np.min(gaps)) <= 4.0 * point_err:
        raise PrecisionExhausted("sample points too close to sort at 128 bits")
    d = _disc_from_sorted(xs, N)
    # |u_j| error <= N * point_err plus N units of last-place slack
    slack = N * point_err * 2.0 + math.ldexp(float(N + 2), -40)
    return BallReal.from_endpoints(
        Fraction(d) - Fraction(slack), Fraction(d) + Fraction(slack), 128
    )


def discrepancy_profile(spec: IrrationalSpec, N_max: int):
    """(D_N, slack_N) floats for every N <= N_max, one incremental pass."""
    if N_max < 1:
        raise DiosumError("N_max must be >= 1")
    all_x, point_err = _sample_points(spec, N_max)
    out = np.empty(N_max, dtype=np.float64)
    slack = np.empty(N_max, dtype=np.float64)
    cur = np.empty(0, dtype=np.float64)
    for N in range(1, N_max + 1):
        pos = np.searchsorted(cur, all_x[N - 1])
        cur = np.insert(cur, pos, all_x[N - 1])
        out[N - 1] = _disc_from_sorted(cur, N)
        slack[N - 1] = N * point_err * 2.0 + math.ldexp(float(N + 2), -40)
    return out, slack


# ---------------------------------------------------------------------------
# Local discrepancy


def _indicator_ints(spec: IrrationalSpec, Q: int, t: Fraction):
    """Exact 0/1 indicators of {n alpha} <= t for n = 1..Q-1."""
    bits = 128
    a = frac_scaled(spec, bits)
    modulus = 1 << bits
    t_lo, t_hi = _threshold_band(t, bits)
    ind = []
    r = 0
    for n in range(1, Q):
        r = (r + a) % modulus
        lo, hi = r, r + n
        if hi <= t_lo:
            ind.append(1)
        elif lo >= t_hi:
            ind.append(0)
        else:
            ind.append(1 if _resolve_member([(spec, n)], Fraction(0), 1, t) else 0)
    return ind


def local_disc_extrema(spec: IrrationalSpec, K: int, t):
    """Exact (max, min) over 1 <= N < q_{K+1} of |{n <= N : {n alpha} <= t}| - tN."""
    t = Fraction(t)
    if not (0 < t < 1):
        raise DiosumError("t must be in (0, 1)")
    if K < 1:
        raise DiosumError("K must be >= 1")
    data = expand_data(spec, K + 1)
    Q = data.q[K + 1]
    ind = _indicator_ints(spec, Q, t)
    best_hi = None
    best_lo = None
    cnt = 0
    td, tn = t.denominator, t.numerator
    for N in range(1, Q):
        cnt += ind[N - 1]
        val = cnt * td - tn * N  # (count - tN) * denominator, exact
        if best_hi is None or val > best_hi:
            best_hi = val
        if best_lo is None or val < best_lo:
            best_lo = val
    return Fraction(best_hi, td), Fraction(best_lo, td)


def local_disc_extrema_batch(spec: IrrationalSpec, K_max: int, ts):
    """Extrema for every K <= K_max and each rational t, sharing one pass.

    Returns {(K, t): (max, min)}.  Floats drive the scan; any sample closer
    than 2**-40 to a threshold is resolved exactly.
    """
    data = expand_data(spec, K_max + 1)
    Q = data.q[K_max + 1]
    xs, point_err = _sample_points(spec, Q - 1)
    out = {}
    for t in ts:
        t = Fraction(t)
        if t.denominator * Q >= (1 << 62):  # int64 scan would overflow
            for k in range(1, K_max + 1):
                out[(k, t)] = local_disc_extrema(spec, k, t)
            continue
        tf = float(t)
        near = np.abs(xs - tf) <= 2**-40
        ind = (xs <= tf).astype(np.int64)
        for i in np.nonzero(near)[0]:
            ind[i] = 1 if _resolve_member([(spec, int(i) + 1)], Fraction(0), 1, t) else 0
        cnt = np.cumsum(ind)
        ns = np.arange(1, Q, dtype=np.int64)
        vals = cnt * t.denominator - t.numerator * ns  # exact in int64 range
        run_max = np.maximum.accumulate(vals)
        run_min = np.minimum.accumulate(vals)
        for k in range(1, K_max + 1):
            edge = data.q[k + 1] - 1  # extrema over N in [1, q_{k+1})
            out[(k, t)] = (
                Fraction(int(run_max[edge - 1]), t.denominator),
                Fraction(int(run_min[edge - 1]), t.denominator),
            )
    return out


def schoissengeier_prediction(data: ContinuedFractionData, K: int, t):
    """Even/odd-index formula values for the local discrepancy extrema.

    max-formula:  sum over even k <= K of {q_k t}(a_{k+1}(1 - {q_k t})
                  + {q_{k+1} t} - {q_{k-1} t});
    min-formula:  minus the same sum over odd k <= K.
    Exact rationals for rational t.
    """
    t = Fraction(t)
    if K < 1:
        raise DiosumError("K must be >= 1")
    if data.K < K + 1:
        raise DiosumError("need digits through a_{K+1}")

    def frac_qt(k):
        v = data.q[k] * t
        return v - math.floor(v)

    even_sum = Fraction(0)
    odd_sum = Fraction(0)
    for k in range(1, K + 1):
        term = frac_qt(k) * (
            data.digits[k + 1] * (1 - frac_qt(k)) + frac_qt(k + 1) - frac_qt(k - 1)
        )
        if k % 2 == 0:
            even_sum += term
        else:
            odd_sum += term
    return even_sum, -odd_sum


# ---------------------------------------------------------------------------
# Higher-dimensional counting


def count_multidim(specs, N: int, t) -> int:
    """|{n in [-N,N]^d \\ {0} : ||n . alpha|| <= t}|, exact certified count."""
    specs = tuple(specs)
    d = len(specs)
    t = Fraction(t)
    if d < 1 or N < 1:
        raise DiosumError("need d >= 1 and N >= 1")
    if not (0 < t <= Fraction(1, 2)):
        raise DiosumError("t must be in (0, 1/2]")
    bits = 128
    modulus = 1 << bits
    A = [frac_scaled(s, bits) for s in specs]
    Aneg = [modulus - a - 1 for a in A]
    t_lo, t_hi = _threshold_band(t, bits)
    total = 0

    def prefix_base(prefix):
        r = 0
        w = 0
        for a, aneg, coef in zip(A, Aneg, prefix):
            r += coef * a if coef >= 0 else (-coef) * aneg
            w += abs(coef)
        return r % modulus, w

    def segment(mult, base, bw, j0, j1, vec_fn):
        nonlocal total
        if j1 < j0:
            return
        cnt, flags = kernel.count_block(
            mult, 1, base % modulus, bw, j0, j1, VARIANT_DIST, t_lo, t_hi, bits
        )
        total += cnt
        for j in flags:
            vec = vec_fn(j)
            entries = [(s, c) for s, c in zip(specs, vec) if c != 0]
            if _resolve_member(entries, Fraction(0), VARIANT_DIST, t):
                total += 1

    def emit(dim, pad):
        def rec(prefix, started):
            if len(prefix) == dim - 1:
                pfx = tuple(prefix)
                base, bw = prefix_base(prefix)
                if started:
                    segment(Aneg[dim - 1], base, bw, 1, N,
                            lambda j, p=pfx: p + (-j,) + pad)
                segment(A[dim - 1], base, bw, 1, N,
                        lambda j, p=pfx: p + (j,) + pad)
                return
            lo = -N if started else 0
            for coef in range(lo, N + 1):
                rec(prefix + [coef], started or coef != 0)

        rec([], False)
        if dim > 1:
            emit(dim - 1, (0,) + pad)

    emit(d, ())
    return 2 * total

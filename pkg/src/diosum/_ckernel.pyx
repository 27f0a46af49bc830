# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled term kernel for the 128-bit working representation.

Arithmetic mirrors diosum._pykernel exactly: unsigned 128-bit wraparound is
the fractional-part circle, reciprocal bounds use the same error-free
directed conversion and the same guard constants, and accumulation order is
identical, so results are bit-identical to the fallback at bits == 128.
"""

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"
    int __builtin_clzll(unsigned long long) nogil

ctypedef unsigned long long u64

cdef double GUARD_UP = 1.0 + 2.0 ** -48
cdef double GUARD_DN = 1.0 - 2.0 ** -48

cdef int FLAG_CAP = 256

# POW2[s] = 2.0 ** (s - 128); exact doubles, all normal.
cdef double POW2[96]
for _s in range(96):
    POW2[_s] = 2.0 ** (_s - 128)


cdef inline int _bitlen(u128 x) nogil:
    cdef u64 hi = <u64> (x >> 64)
    if hi:
        return 128 - __builtin_clzll(hi)
    return 64 - __builtin_clzll(<u64> x)


def sum_block_128(u64 a_hi, u64 a_lo, u64 aw,
                  u64 b_hi, u64 b_lo, u64 bw,
                  u64 n0, u64 n1, int variant, int weight, int has_cut,
                  u64 cl_hi, u64 cl_lo, u64 ch_hi, u64 ch_lo,
                  u64 exclude):
    """(s_lo, s_hi, included, flagged, overflowed) for n in [n0, n1]."""
    cdef u128 b = ((<u128> b_hi) << 64) | b_lo
    cdef u128 cut_lo = ((<u128> cl_hi) << 64) | cl_lo
    cdef u128 cut_hi = ((<u128> ch_hi) << 64) | ch_lo
    cdef u128 half = (<u128> 1) << 127
    cdef u128 r, top, d_lo, d_hi, m_top
    cdef u64 n, w, mh, ml
    cdef int blen, sh
    cdef double x_lo, x_hi, q_lo, q_hi
    cdef double s_lo = 0.0, s_hi = 0.0
    cdef long long included = 0
    cdef u64 flagbuf[256]
    cdef int nflag = 0
    cdef bint overflow = False

    with nogil:
        n = n0
        while n <= n1:
            if n == exclude:
                n += 1
                continue
            r = (<u128> n) * a_lo + (((<u128> n) * a_hi) << 64) + b
            w = n * aw + bw
            top = r + w
            if top < r:  # wrapped through 0
                if nflag < FLAG_CAP:
                    flagbuf[nflag] = n
                    nflag += 1
                else:
                    overflow = True
                n += 1
                continue
            if variant == 0:
                if top <= half:
                    d_lo = r
                    d_hi = top
                elif r >= half:
                    d_lo = -top
                    d_hi = -r
                else:
                    m_top = -top
                    d_lo = r if r < m_top else m_top
                    d_hi = half
            elif variant == 1:
                d_lo = r
                d_hi = top
            else:
                if r == 0:  # complement upper endpoint would wrap
                    if nflag < FLAG_CAP:
                        flagbuf[nflag] = n
                        nflag += 1
                    else:
                        overflow = True
                    n += 1
                    continue
                d_lo = -top
                d_hi = -r
            if d_lo == 0:
                if nflag < FLAG_CAP:
                    flagbuf[nflag] = n
                    nflag += 1
                else:
                    overflow = True
                n += 1
                continue
            if has_cut:
                if d_hi <= cut_lo:
                    n += 1
                    continue
                if d_lo < cut_hi:
                    if nflag < FLAG_CAP:
                        flagbuf[nflag] = n
                        nflag += 1
                    else:
                        overflow = True
                    n += 1
                    continue
            blen = _bitlen(d_hi)
            sh = blen - 53
            if sh < 0:
                sh = 0
            mh = <u64> (d_hi >> sh)
            if ((<u128> mh) << sh) != d_hi:
                mh += 1
            x_hi = (<double> mh) * POW2[sh]
            ml = <u64> (d_lo >> sh)
            x_lo = (<double> ml) * POW2[sh]
            q_hi = 1.0 / x_lo
            q_lo = 1.0 / x_hi
            if weight:
                q_hi = q_hi / (<double> n)
                q_lo = q_lo / (<double> n)
            s_hi += q_hi * GUARD_UP
            s_lo += q_lo * GUARD_DN
            included += 1
            n += 1

    flags = [flagbuf[i] for i in range(nflag)]
    return s_lo, s_hi, included, flags, overflow


def count_block_128(u64 a_hi, u64 a_lo, u64 aw,
                    u64 b_hi, u64 b_lo, u64 bw,
                    u64 n0, u64 n1, int variant,
                    u64 tl_hi, u64 tl_lo, u64 th_hi, u64 th_lo):
    """(count, flagged, overflowed): #{n : variant value <= threshold}."""
    cdef u128 b = ((<u128> b_hi) << 64) | b_lo
    cdef u128 t_lo = ((<u128> tl_hi) << 64) | tl_lo
    cdef u128 t_hi = ((<u128> th_hi) << 64) | th_lo
    cdef u128 half = (<u128> 1) << 127
    cdef u128 r, top, d_lo, d_hi, m_top
    cdef u64 n, w
    cdef long long count = 0
    cdef u64 flagbuf[256]
    cdef int nflag = 0
    cdef bint overflow = False

    with nogil:
        n = n0
        while n <= n1:
            r = (<u128> n) * a_lo + (((<u128> n) * a_hi) << 64) + b
            w = n * aw + bw
            top = r + w
            if top < r:
                if nflag < FLAG_CAP:
                    flagbuf[nflag] = n
                    nflag += 1
                else:
                    overflow = True
                n += 1
                continue
            if variant == 0:
                if top <= half:
                    d_lo = r
                    d_hi = top
                elif r >= half:
                    d_lo = -top
                    d_hi = -r
                else:
                    m_top = -top
                    d_lo = r if r < m_top else m_top
                    d_hi = half
            elif variant == 1:
                d_lo = r
                d_hi = top
            else:
                if r == 0:
                    if nflag < FLAG_CAP:
                        flagbuf[nflag] = n
                        nflag += 1
                    else:
                        overflow = True
                    n += 1
                    continue
                d_lo = -top
                d_hi = -r
            if d_hi <= t_lo:
                count += 1
            elif d_lo >= t_hi:
                pass
            else:
                if nflag < FLAG_CAP:
                    flagbuf[nflag] = n
                    nflag += 1
                else:
                    overflow = True
            n += 1

    flags = [flagbuf[i] for i in range(nflag)]
    return count, flags, overflow

"""Selected DFT bins in double-double arithmetic.

Evolving a truncated packet amplifies the unstable band |k| < m by up to
e^{c m t}.  An ordinary FFT leaves roundoff of order eps * ||f|| in every
bin, and after amplification that roundoff swamps the causal cancellation
between the two bands.  Here only the few bins inside the band are
recomputed with ~32-digit accumulation, which is enough for the
cm t ~ 30 regime.  The input samples themselves are taken as exact.
"""

from __future__ import annotations

from functools import lru_cache

import mpmath
import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e = e + (al + bl)
    return _two_sum(s, e)


@lru_cache(maxsize=8)
def twiddles(n: int):
    """cos and sin of -2 pi r / n for r = 0..n-1 as (hi, lo) double pairs."""
    if n % 8:
        raise ValueError("twiddle table needs n divisible by 8")
    with mpmath.workdps(40):
        eighth = n // 8
        c_oct = []
        s_oct = []
        for r in range(eighth + 1):
            th = 2 * mpmath.pi * r / n
            c_oct.append(mpmath.cos(th))
            s_oct.append(mpmath.sin(th))
        cos_q = [None] * (n // 4 + 1)
        sin_q = [None] * (n // 4 + 1)
        for r in range(n // 4 + 1):
            if r <= eighth:
                cos_q[r], sin_q[r] = c_oct[r], s_oct[r]
            else:
                cos_q[r], sin_q[r] = s_oct[n // 4 - r], c_oct[n // 4 - r]
        quarter = n // 4
        cos_full = []
        sin_full = []
        for r in range(n):
            qd, rr = divmod(r, quarter)
            c, s = cos_q[rr], sin_q[rr]
            if qd == 0:
                cv, sv = c, s
            elif qd == 1:
                cv, sv = -s, c
            elif qd == 2:
                cv, sv = -c, -s
            else:
                cv, sv = s, -c
            cos_full.append(cv)
            sin_full.append(-sv)  # negative exponent
        ch = np.array([float(v) for v in cos_full])
        cl = np.array([float(v - mpmath.mpf(h)) for v, h in zip(cos_full, ch)])
        sh = np.array([float(v) for v in sin_full])
        sl = np.array([float(v - mpmath.mpf(h)) for v, h in zip(sin_full, sh)])
    for a in (ch, cl, sh, sl):
        a.setflags(write=False)
    return ch, cl, sh, sl


def _pairwise_dd_sum(h, l):
    while h.shape[1] > 1:
        if h.shape[1] % 2:
            pad = np.zeros((h.shape[0], 1))
            h = np.concatenate([h, pad], axis=1)
            l = np.concatenate([l, pad], axis=1)
        h, l = _dd_add(h[:, 0::2], l[:, 0::2], h[:, 1::2], l[:, 1::2])
    return h[:, 0], l[:, 0]


def dft_bins_dd(f: np.ndarray, bins: np.ndarray, chunk: int = 64):
    """sum_j f_j exp(-2 pi i n j / N) for each n in ``bins``.

    Returns ``(hi, lo)`` complex arrays whose sum carries roughly twice
    double precision.
    """
    f = np.asarray(f, dtype=complex)
    n = f.size
    ch, cl, sh, sl = twiddles(n)
    bins = np.asarray(bins, dtype=np.int64)
    out_hi = np.empty(bins.size, dtype=complex)
    out_lo = np.empty(bins.size, dtype=complex)
    j = np.arange(n, dtype=np.int64)
    fr = f.real
    fi = f.imag
    for start in range(0, bins.size, chunk):
        b = bins[start:start + chunk]
        idx = np.multiply.outer(b, j) % n
        Ch, Cl, Sh, Sl = ch[idx], cl[idx], sh[idx], sl[idx]
        # real part: fr*C - fi*S ; imaginary part: fr*S + fi*C
        p1, e1 = _two_prod(fr, Ch)
        e1 = e1 + fr * Cl
        p2, e2 = _two_prod(-fi, Sh)
        e2 = e2 - fi * Sl
        rh, rl = _dd_add(p1, e1, p2, e2)
        p3, e3 = _two_prod(fr, Sh)
        e3 = e3 + fr * Sl
        p4, e4 = _two_prod(fi, Ch)
        e4 = e4 + fi * Cl
        ih, il = _dd_add(p3, e3, p4, e4)
        rh, rl = _pairwise_dd_sum(rh, rl)
        ih, il = _pairwise_dd_sum(ih, il)
        out_hi[start:start + chunk] = rh + 1j * ih
        out_lo[start:start + chunk] = rl + 1j * il
    return out_hi, out_lo

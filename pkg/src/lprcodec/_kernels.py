"""Compiled per-row kernels: mixture PMF, bin sums, 16-bit count quantization.

Every path that produces coder CDFs (batch encoder, wavefront loop, the scalar
raster reference and the public model functions) runs these same routines,
so encoder and decoder see bit-identical counts. Sums are strictly sequential
and no fast-math flags are set.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

TOTAL = 1 << 16


# beyond |x| = 40 the logistic differs from 0/1 by < 5e-18; saturating there
# skips most exp() calls on wide supports
_SATURATE = 40.0
_BUCKETS = 256


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x > _SATURATE:
        return 1.0
    if x < -_SATURATE:
        return 0.0
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True, inline="always")
def _mix_cdf(x, pi, mu, sigma):
    f = 0.0
    for k in range(pi.shape[0]):
        f += pi[k] * _sigmoid((x - mu[k]) / sigma[k])
    return f


@njit(cache=True)
def pmf_row(pi, mu, sigma, lo, hi, out):
    """Tail-folded discrete logistic mixture PMF over [lo, hi] into ``out``."""
    n = hi - lo + 1
    prev = 0.0
    m = 0
    while m < n - 1:
        x = lo + m + 0.5
        f = _mix_cdf(x, pi, mu, sigma)
        p = f - prev
        out[m] = p if p > 0.0 else 0.0
        prev = f
        m += 1
        saturated = True
        for k in range(pi.shape[0]):
            if (x - mu[k]) / sigma[k] <= _SATURATE:
                saturated = False
                break
        if saturated:
            # every later edge gives the same f, hence exactly zero mass
            while m < n - 1:
                out[m] = 0.0
                m += 1
    last = 1.0 - prev
    out[n - 1] = last if last > 0.0 else 0.0


@njit(cache=True)
def pmf_rows(pi, mu, sigma, lo, hi):
    n = pi.shape[0]
    out = np.empty((n, hi - lo + 1))
    for i in range(n):
        pmf_row(pi[i], mu[i], sigma[i], lo, hi, out[i])
    return out


@njit(cache=True, inline="always")
def _bin_of(v, tau):
    step = 2 * tau + 1
    return step * ((v + tau) // step)


@njit(cache=True)
def bin_row(pmf, lo, hi, tau, out):
    """Sum a stride-1 PMF over [lo, hi] into bins of width 2*tau+1 (sequentially)."""
    step = 2 * tau + 1
    q_lo = _bin_of(lo, tau)
    out[:] = 0.0
    for m in range(hi - lo + 1):
        out[(_bin_of(lo + m, tau) - q_lo) // step] += pmf[m]


@njit(cache=True)
def _kth_largest(vals, s, d, cand, hist):
    """Value of the d-th largest of vals[:s] (1-based d), by repeated bucketing.

    Each round histograms the remaining candidates over their own [min, max]
    range and keeps only the bucket holding the boundary. Bucketing is
    monotone in the value, so the answer is exact.
    """
    n = s
    for m in range(s):
        cand[m] = m
    while True:
        vmin = vals[cand[0]]
        vmax = vmin
        for i in range(1, n):
            v = vals[cand[i]]
            if v < vmin:
                vmin = v
            elif v > vmax:
                vmax = v
        if vmin == vmax:
            return vmin
        if n <= 16:
            tmp = np.empty(n)
            for i in range(n):
                tmp[i] = vals[cand[i]]
            return np.sort(tmp)[n - d]
        scale = _BUCKETS / (vmax - vmin)
        hist[:] = 0
        for i in range(n):
            hist[min(int((vals[cand[i]] - vmin) * scale), _BUCKETS - 1)] += 1
        tb = _BUCKETS - 1
        while hist[tb] < d:
            d -= hist[tb]
            tb -= 1
        k = 0
        for i in range(n):
            if min(int((vals[cand[i]] - vmin) * scale), _BUCKETS - 1) == tb:
                cand[k] = cand[i]
                k += 1
        n = k


@njit(cache=True)
def counts_row(pmf, out, rem, cand, hist):
    """Largest-remainder rounding to 65536, then lift zeros to 1 from the largest.

    ``rem``/``cand`` are scratch buffers at least as long as ``pmf``, ``hist``
    has ``_BUCKETS`` entries.
    Returns False when the support is too wide for every symbol to get a count.
    """
    s = pmf.shape[0]
    total = 0.0
    for m in range(s):
        total += pmf[m]
    acc = 0
    for m in range(s):
        x = pmf[m] / total * TOTAL
        c = math.floor(x)
        out[m] = np.int64(c)
        rem[m] = x - c
        acc += out[m]
    d = TOTAL - acc
    if d > 0:
        kth = _kth_largest(rem, s, d, cand, hist)
        above = 0
        for m in range(s):
            if rem[m] > kth:
                above += 1
        # ties at kth go to the lowest indices
        room = d - above
        for m in range(s):
            if rem[m] > kth:
                out[m] += 1
            elif rem[m] == kth and room > 0:
                out[m] += 1
                room -= 1
    need = 0
    for m in range(s):
        if out[m] == 0:
            out[m] = 1
            need += 1
    while need > 0:
        top = 0
        for m in range(1, s):
            if out[m] > out[top]:
                top = m
        take = min(need, out[top] - 1)
        if take <= 0:
            return False
        out[top] -= take
        need -= take
    return True


@njit(cache=True)
def counts_rows(pmf):
    n, s = pmf.shape
    out = np.empty((n, s), np.int64)
    rem = np.empty(s)
    cand = np.empty(s, np.int64)
    hist = np.empty(_BUCKETS, np.int64)
    ok = True
    for i in range(n):
        ok &= counts_row(pmf[i], out[i], rem, cand, hist)
    return out, ok


@njit(cache=True)
def cdf_rows(pi, mu, sigma, lo, hi, tau):
    """Cumulative 16-bit counts (n, nbins+1) for mixture params over values [lo, hi]."""
    n = pi.shape[0]
    step = 2 * tau + 1
    nb = (_bin_of(hi, tau) - _bin_of(lo, tau)) // step + 1
    pmf = np.empty(hi - lo + 1)
    binned = np.empty(nb)
    counts = np.empty(nb, np.int64)
    rem = np.empty(hi - lo + 1)
    cand = np.empty(hi - lo + 1, np.int64)
    hist = np.empty(_BUCKETS, np.int64)
    cum = np.zeros((n, nb + 1), np.int64)
    ok = True
    for i in range(n):
        pmf_row(pi[i], mu[i], sigma[i], lo, hi, pmf)
        if tau > 0:
            bin_row(pmf, lo, hi, tau, binned)
            ok &= counts_row(binned, counts, rem, cand, hist)
        else:
            ok &= counts_row(pmf, counts, rem, cand, hist)
        acc = 0
        for m in range(nb):
            acc += counts[m]
            cum[i, m + 1] = acc
    return cum, ok

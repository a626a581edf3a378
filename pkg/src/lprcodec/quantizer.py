"""l-infinity bounded residual quantization and the matching PMF quantization.

Bins have width ``2*tau + 1`` and are centred on integer multiples of that
width, so zero is always a bin centre and ``|r - q(r)| <= tau``.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .core import CodecError, ResidualGrid

MAX_TAU = 255


def check_tau(tau: int) -> int:
    tau = int(tau)
    if not 0 <= tau <= MAX_TAU:
        raise ValueError(f"tau must be in [0, {MAX_TAU}], got {tau}")
    return tau


def quantize_residual(r, tau: int):
    """Map residual(s) to the nearest bin centre; works on ints and arrays."""
    step = 2 * tau + 1
    if np.isscalar(r):
        r = int(r)
        mag = step * ((abs(r) + tau) // step)
        return mag if r >= 0 else -mag
    r = np.asarray(r)
    mag = step * ((np.abs(r).astype(np.int64) + tau) // step)
    return (np.sign(r) * mag).astype(r.dtype if r.dtype.kind == "i" else np.int64)


def bin_of(v: int, tau: int) -> int:
    """Bin centre containing ``v``.

    Written as nearest-multiple rounding rather than through the sign/magnitude
    form so the two can be checked against each other.
    """
    step = 2 * tau + 1
    return step * ((v + tau) // step)


def quantize_grid(r: ResidualGrid, tau: int) -> ResidualGrid:
    if tau == 0:
        return r
    return ResidualGrid(quantize_residual(r.samples.astype(np.int32), tau))


def quantize_pmf(pmf, tau: int, support: tuple[int, int]):
    """Sum a stride-1 PMF over ``[lo, hi]`` into bins of width ``2*tau + 1``.

    Returns ``((q_lo, q_hi, stride), q_pmf)``. Bins that straddle ``lo`` or
    ``hi`` keep only the mass of their in-support members.
    """
    lo, hi = support
    pmf = np.asarray(pmf, dtype=np.float64)
    if hi < lo or pmf.shape != (hi - lo + 1,):
        raise CodecError("empty support or PMF length mismatch")
    step = 2 * tau + 1
    if tau == 0:
        return (lo, hi, 1), pmf.copy()
    q_lo, q_hi = bin_of(lo, tau), bin_of(hi, tau)
    out = np.empty((q_hi - q_lo) // step + 1)
    _kernels.bin_row(np.ascontiguousarray(pmf), int(lo), int(hi), int(tau), out)
    return (q_lo, q_hi, step), out


def value_support(q_lo: int, q_hi: int, tau: int) -> tuple[int, int]:
    """Stride-1 range of original residuals whose bins fall in [q_lo, q_hi]."""
    return max(-255, q_lo - tau), min(255, q_hi + tau)

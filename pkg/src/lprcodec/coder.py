"""Range coding of residual symbols against 16-bit quantized CDFs.

The coder keeps a 64-bit ``low``/``range`` pair and renormalises a byte at a
time, with LZMA-style carry propagation through a cached byte. At 16-bit
probability precision the truncation loss per symbol is below 2**-40, so the
output stays within a few bytes of the quantized cross-entropy.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .core import CodecError, ResidualGrid, Truncated
from .quantizer import quantize_residual

PROB_BITS = 16
TOTAL = 1 << PROB_BITS
_STATE_BITS = 64
_TOP = 1 << (_STATE_BITS - 8)
_MASK = (1 << _STATE_BITS) - 1
_LOW_BYTES = _STATE_BITS // 8


class SymbolOutOfSupport(CodecError):
    pass


@dataclass(frozen=True)
class QuantizedCdf:
    """Cumulative counts over ``symbols``; ``cum[0] == 0`` and ``cum[-1] == 65536``."""

    symbols: tuple[int, int, int]  # lo, hi, stride
    cum: np.ndarray

    def __post_init__(self):
        c = self.cum
        if c[0] != 0 or c[-1] != TOTAL or np.any(np.diff(c) < 1):
            raise CodecError("invalid quantized CDF")
        lo, hi, stride = self.symbols
        if (hi - lo) // stride + 2 != len(c):
            raise CodecError("CDF length does not match its support")

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.cum)

    def index(self, symbol: int) -> int:
        lo, hi, stride = self.symbols
        i, rem = divmod(symbol - lo, stride)
        if rem or not lo <= symbol <= hi:
            raise SymbolOutOfSupport(f"symbol {symbol} not in support {self.symbols}")
        return i

    def prob(self, symbol: int) -> float:
        i = self.index(symbol)
        return (int(self.cum[i + 1]) - int(self.cum[i])) / TOTAL


def quantize_counts(pmf: np.ndarray) -> np.ndarray:
    """Integer counts (N, S) summing to 65536 per row, every count >= 1.

    Largest-remainder rounding of ``pmf * 65536`` (ties to the lower index),
    then each zero count is raised to 1 by taking from the largest count.
    """
    pmf = np.ascontiguousarray(np.atleast_2d(np.asarray(pmf, np.float64)))
    if pmf.shape[1] > TOTAL:
        raise CodecError(f"support of {pmf.shape[1]} symbols exceeds {TOTAL}")
    if np.any(~(pmf.sum(axis=1) > 0)) or np.any(pmf < 0):
        raise CodecError("PMF has no mass or negative entries")
    counts, ok = _kernels.counts_rows(pmf)
    if not ok:
        raise CodecError("support too large for 16-bit probabilities")
    return counts


def cum_from_counts(counts: np.ndarray) -> np.ndarray:
    counts = np.atleast_2d(counts)
    cum = np.zeros((counts.shape[0], counts.shape[1] + 1), np.int64)
    np.cumsum(counts, axis=1, out=cum[:, 1:])
    return cum


def build_cdf(pmf, support: tuple[int, int, int] | tuple[int, int]) -> QuantizedCdf:
    """Quantize one PMF over ``support = (lo, hi[, stride])``."""
    if len(support) == 2:
        support = (support[0], support[1], 1)
    return QuantizedCdf(tuple(support), cum_from_counts(quantize_counts(pmf))[0])


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK
        self._cache = 0
        self._pending = 1
        self.out = bytearray()

    def encode(self, cum_lo: int, freq: int) -> None:
        r = self.range >> PROB_BITS
        self.low += r * cum_lo
        self.range = r * freq
        while self.range < _TOP:
            self.range <<= 8
            self._shift_low()

    def _shift_low(self) -> None:
        low = self.low
        if low < (0xFF << (_STATE_BITS - 8)) or low > _MASK:
            carry = low >> _STATE_BITS
            byte = self._cache
            out = self.out
            while self._pending:
                out.append((byte + carry) & 0xFF)
                byte = 0xFF
                self._pending -= 1
            self._cache = (low >> (_STATE_BITS - 8)) & 0xFF
        self._pending += 1
        self.low = (low & (_TOP - 1)) << 8

    def finish(self) -> bytes:
        for _ in range(_LOW_BYTES + 1):
            self._shift_low()
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        if len(data) < _LOW_BYTES + 1:
            raise Truncated("range-coded segment too short")
        if data[0]:
            # the interval never leaves [0, 2**64), so no carry can reach the lead byte
            raise CodecError("corrupt range-coded segment")
        self.pos = _LOW_BYTES + 1
        self.code = int.from_bytes(data[1 : self.pos], "big")
        self.range = _MASK
        self._r = 0

    def target(self) -> int:
        """Cumulative-count value of the next symbol, in [0, 65536)."""
        self._r = self.range >> PROB_BITS
        v = self.code // self._r
        return v if v < TOTAL else TOTAL - 1

    def consume(self, cum_lo: int, freq: int) -> None:
        r = self._r
        self.code -= r * cum_lo
        self.range = r * freq
        while self.range < _TOP:
            if self.pos >= len(self.data):
                raise Truncated("range-coded segment exhausted")
            self.code = (self.code << 8) | self.data[self.pos]
            self.pos += 1
            self.range <<= 8

    def decode(self, cum: Sequence[int]) -> int:
        """Decode one symbol index against cumulative counts ``cum``."""
        i = bisect_right(cum, self.target()) - 1
        self.consume(cum[i], cum[i + 1] - cum[i])
        return i


def encode_stream(symbols: Iterable[int], cdfs: Iterable[QuantizedCdf]) -> bytes:
    enc = RangeEncoder()
    for s, cdf in zip(symbols, cdfs, strict=True):
        i = cdf.index(s)
        lo = int(cdf.cum[i])
        enc.encode(lo, int(cdf.cum[i + 1]) - lo)
    return enc.finish()


def decode_stream(data: bytes, cdf_provider: Callable[[int, list[int]], QuantizedCdf | None]
                  ) -> list[int]:
    """Decode symbols until ``cdf_provider(position, decoded_so_far)`` returns None."""
    dec = RangeDecoder(data)
    out: list[int] = []
    while True:
        cdf = cdf_provider(len(out), out)
        if cdf is None:
            return out
        i = dec.decode(cdf.cum.tolist())
        lo, _, stride = cdf.symbols
        out.append(lo + i * stride)


def code_length_bits(symbols: Iterable[int], cdfs: Iterable[QuantizedCdf]) -> float:
    """Ideal code length of ``symbols`` under the quantized CDFs, in bits."""
    return float(sum(-np.log2(c.prob(s)) for s, c in zip(symbols, cdfs, strict=True)))


@dataclass(frozen=True)
class ResidualInterval:
    lo: int
    hi: int
    stride: int = 1

    def __post_init__(self):
        if self.hi < self.lo or (self.hi - self.lo) % self.stride:
            raise CodecError(f"bad residual interval [{self.lo}, {self.hi}] / {self.stride}")

    @property
    def size(self) -> int:
        return (self.hi - self.lo) // self.stride + 1

    @property
    def tau(self) -> int:
        return (self.stride - 1) // 2


def residual_interval(grid: ResidualGrid | np.ndarray, tau: int) -> ResidualInterval:
    """Observed [min, max] of the (quantized when tau > 0) residuals."""
    s = grid.samples if isinstance(grid, ResidualGrid) else np.asarray(grid)
    if s.size == 0:
        raise CodecError("empty residual grid")
    if tau:
        s = quantize_residual(s.astype(np.int32), tau)
    return ResidualInterval(int(s.min()), int(s.max()), 2 * tau + 1)


def full_interval(tau: int) -> ResidualInterval:
    return ResidualInterval(int(quantize_residual(-255, tau)), int(quantize_residual(255, tau)),
                            2 * tau + 1)

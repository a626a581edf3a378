"""Residual layer: turns a (quantized) residual grid into per-patch range-coded segments.

Symbol order inside a patch segment is fixed by the wavefront schedule:
step ``t``, then channel, then patch-local row. The decoder walks the same
steps, evaluates the PMFs of a whole step for every patch in one batch, and
decodes the symbols one by one.

Three encoder orders produce the same bytes:

``batch``
    All PMFs at once from the fully known grid (fast path).
``wavefront``
    Step by step with only earlier steps revealed, through the decoder's loop.
``raster``
    Pixel by pixel in raster order through the scalar model functions.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from . import _kernels
from . import entropy_model as em
from .coder import RangeDecoder, RangeEncoder, ResidualInterval, build_cdf
from .core import CodecError
from .quantizer import quantize_pmf, value_support
from .scheduler import ContextModelSpec, ImageSchedule, image_schedule

_CHUNK_ELEMS = 1 << 22


class EstimatorProvider:
    """Built-in K=1 estimator over the causal mask; channels are independent."""

    coupled = False
    all_channels = False  # params() returns only the requested channels
    K = 1

    def __init__(self, spec: ContextModelSpec):
        self.spec = spec
        off = np.array(spec.offsets, np.int64).reshape(-1, 2)
        self.dr, self.dc = off[:, 0], off[:, 1]

    def params(self, sched: ImageSchedule, idx: np.ndarray, buf: np.ndarray,
               channels: list[int], prev=None) -> em.LogisticMixtureParams:
        W = sched.W
        lr = sched.local_row[idx][:, None] + self.dr
        lc = sched.local_col[idx][:, None] + self.dc
        valid = (lr >= 0) & (lc >= 0) & (lc < sched.patch_w[idx][:, None])
        nb = np.where(valid, idx[:, None] + self.dr * W + self.dc, 0)
        flat = buf.reshape(-1, buf.shape[-1])
        mus, sigmas = [], []
        for c in channels:
            mu, sigma = em.estimate_batch(flat[nb, c], valid)
            mus.append(mu)
            sigmas.append(sigma)
        n = idx.size
        mu = np.stack(mus, axis=1)[:, :, None]
        sigma = np.stack(sigmas, axis=1)[:, :, None]
        return em.LogisticMixtureParams(np.ones((n, 1)), mu, sigma, None)

    def scalar_params(self, r: int, c: int, patch, buf: np.ndarray, revealed: np.ndarray,
                      channel: int) -> em.LogisticMixtureParams:
        ctx = []
        for dr, dc in self.spec.offsets:
            rr, cc = r + dr, c + dc
            if patch.row <= rr < patch.row + patch.height and patch.col <= cc < patch.col + patch.width:
                if not revealed[rr, cc]:
                    raise CodecError(f"context pixel {(rr, cc)} read before it was coded")
                ctx.append(((dr, dc), int(buf[rr, cc, channel])))
        return em.estimate_params(ctx)


class TensorProvider:
    """Per-pixel parameters loaded from an external tensor (raster order)."""

    all_channels = True

    def __init__(self, params: em.LogisticMixtureParams):
        self.table = params
        self.coupled = params.beta is not None and bool(np.any(params.beta))
        self.K = params.K

    def params(self, sched, idx, buf, channels, prev=None):
        return self.table.take(idx)

    def scalar_params(self, r, c, patch, buf, revealed, channel):
        return self.table.take(np.array([r * revealed.shape[1] + c]))


@dataclass
class LayerSetup:
    sched: ImageSchedule
    interval: ResidualInterval
    channels: int

    @property
    def tau(self) -> int:
        return self.interval.tau

    @property
    def value_support(self) -> tuple[int, int]:
        if self.tau == 0:
            return self.interval.lo, self.interval.hi
        return value_support(self.interval.lo, self.interval.hi, self.tau)


def make_setup(H: int, W: int, C: int, P: int, spec: ContextModelSpec,
               interval: ResidualInterval) -> LayerSetup:
    return LayerSetup(image_schedule(H, W, P, spec), interval, C)


def _cum_rows(setup, provider, idx, buf, channels, prev_for) -> np.ndarray:
    """Cumulative counts (len(channels), n, S+1) for pixels ``idx``."""
    params = provider.params(setup.sched, idx, buf, channels)
    vlo, vhi = setup.value_support
    out = []
    for ci, c in enumerate(channels):
        col = c if provider.all_channels else ci
        if provider.coupled and c > 0:
            mu = em.update_means(params, col, prev_for(idx, c))
        else:
            mu = params.mu[:, col, :]
        cum, ok = _kernels.cdf_rows(params.pi, np.ascontiguousarray(mu),
                                    np.ascontiguousarray(params.sigma[:, col, :]),
                                    vlo, vhi, setup.tau)
        if not ok:
            raise CodecError("support too large for 16-bit probabilities")
        out.append(cum)
    return np.stack(out)


def _emission(setup: LayerSetup):
    """Yield (step idx array, channel) in stream order."""
    for idx in setup.sched.steps:
        for c in range(setup.channels):
            yield idx, c


def encode_layer(rq: np.ndarray, setup: LayerSetup, provider, order: str = "batch") -> list[bytes]:
    """Range-code the quantized residual grid ``rq`` (H, W, C); one segment per patch."""
    if order == "batch":
        return _encode_batch(rq, setup, provider)
    if order == "wavefront":
        return _run_wavefront(setup, provider, known=rq)[1]
    if order == "raster":
        return _encode_raster(rq, setup, provider)
    raise ValueError(f"unknown coding order {order!r}")


def decode_layer(segments: list[bytes], setup: LayerSetup, provider) -> np.ndarray:
    return _run_wavefront(setup, provider, segments=segments)[0]


def _symbol_index(values: np.ndarray, interval: ResidualInterval) -> np.ndarray:
    i, rem = np.divmod(values.astype(np.int64) - interval.lo, interval.stride)
    if np.any(rem) or np.any(i < 0) or np.any(i >= interval.size):
        raise CodecError("residual outside the recorded interval")
    return i


def _encode_batch(rq, setup: LayerSetup, provider) -> list[bytes]:
    sched = setup.sched
    H, W, C = rq.shape
    flat = rq.reshape(-1, C)
    sym = _symbol_index(flat, setup.interval)
    n_px = H * W
    lo_tab = np.empty((n_px, C), np.int64)
    fr_tab = np.empty((n_px, C), np.int64)
    chunk = max(1, _CHUNK_ELEMS // (setup.interval.size + (setup.value_support[1] - setup.value_support[0]) + 2))
    channels = list(range(C))
    for start in range(0, n_px, chunk):
        idx = np.arange(start, min(n_px, start + chunk))
        cum = _cum_rows(setup, provider, idx, rq, channels, lambda i, c: flat[i, :c])
        for c in channels:
            s = sym[idx, c][:, None]
            lo = np.take_along_axis(cum[c], s, axis=1)[:, 0]
            lo_tab[idx, c] = lo
            fr_tab[idx, c] = np.take_along_axis(cum[c], s + 1, axis=1)[:, 0] - lo
    encs = [RangeEncoder() for _ in sched.patches]
    for idx, c in _emission(setup):
        for p, lo, f in zip(sched.patch_of[idx].tolist(), lo_tab[idx, c].tolist(),
                            fr_tab[idx, c].tolist()):
            encs[p].encode(lo, f)
    return [e.finish() for e in encs]


def _run_wavefront(setup: LayerSetup, provider, known: np.ndarray | None = None,
                   segments: list[bytes] | None = None):
    """Step-by-step coding loop shared by the decoder and the wavefront encoder.

    Only values from earlier steps (and earlier channels of the same pixel)
    are present in ``buf`` when a step's PMFs are evaluated.
    """
    sched = setup.sched
    H, W, C = sched.H, sched.W, setup.channels
    buf = np.zeros((H, W, C), np.int32)
    flat = buf.reshape(-1, C)
    lo, stride = setup.interval.lo, setup.interval.stride
    if known is not None:
        ksym = _symbol_index(known.reshape(-1, C), setup.interval)
        encs = [RangeEncoder() for _ in sched.patches]
    else:
        if len(segments) != len(sched.patches):
            raise CodecError("segment count does not match patch count")
        decs = [RangeDecoder(s) for s in segments]
    prev_for = lambda i, c: flat[i, :c]
    per_channel = provider.coupled
    for idx in sched.steps:
        patches = sched.patch_of[idx].tolist()
        groups = [[c] for c in range(C)] if per_channel else [list(range(C))]
        for chans in groups:
            cum = _cum_rows(setup, provider, idx, buf, chans, prev_for)
            for ci, c in enumerate(chans):
                rows = cum[ci]
                if known is not None:
                    s = ksym[idx, c]
                    lo_v = rows[np.arange(idx.size), s]
                    fr_v = rows[np.arange(idx.size), s + 1] - lo_v
                    for p, a, f in zip(patches, lo_v.tolist(), fr_v.tolist()):
                        encs[p].encode(a, f)
                else:
                    rows_l = rows.tolist()
                    s = np.fromiter((decs[p].decode(rows_l[i]) for i, p in enumerate(patches)),
                                    np.int64, idx.size)
                flat[idx, c] = lo + s * stride
    if known is not None:
        return buf, [e.finish() for e in encs]
    return buf, None


def _encode_raster(rq, setup: LayerSetup, provider) -> list[bytes]:
    """Serial reference: scalar model calls, one pixel at a time in raster order."""
    sched = setup.sched
    H, W, C = rq.shape
    interval = setup.interval
    vlo, vhi = setup.value_support
    buf = np.zeros_like(rq, dtype=np.int32)
    revealed = np.zeros((H, W), bool)
    cdfs = {}
    for patch in sched.patches:
        for r in range(patch.row, patch.row + patch.height):
            for c in range(patch.col, patch.col + patch.width):
                for ch in range(C):
                    params = provider.scalar_params(r, c, patch, buf, revealed, ch)
                    col = ch if provider.all_channels else 0
                    prev = buf[r, c, :ch][None, :] if ch and provider.coupled else None
                    pmf = em.discrete_pmf(params, col, (vlo, vhi), prev=prev)[0]
                    support, qpmf = quantize_pmf(pmf, setup.tau, (vlo, vhi))
                    cdf = build_cdf(qpmf, support)
                    assert support == (interval.lo, interval.hi, interval.stride)
                    cdfs[r * W + c, ch] = cdf
                    buf[r, c, ch] = rq[r, c, ch]
                revealed[r, c] = True
    encs = [RangeEncoder() for _ in sched.patches]
    for idx, ch in _emission(setup):
        for i, p in zip(idx.tolist(), sched.patch_of[idx].tolist()):
            cdf = cdfs[i, ch]
            k = cdf.index(int(rq.reshape(-1, C)[i, ch]))
            a = int(cdf.cum[k])
            encs[p].encode(a, int(cdf.cum[k + 1]) - a)
    return [e.finish() for e in encs]

"""``LPR1`` container: header, base payload, per-patch residual segments, checksum.

Layout (all integers little-endian)::

    magic "LPR1" | version u8 | H u32 | W u32 | C u8 | tau u8
    | base codec id u8 | factor u8 | P u16 | k u8 | j u8 | K u8
    | param source u8 | r_min i16 | r_max i16 | base length u32
    | segment length u32 * n_patches
    | base payload | segments ... | crc32 of reconstructed samples u32

``r_min``/``r_max`` bound the coded symbols; for tau > 0 they are the
quantized extremes and every symbol is a multiple of ``2*tau + 1``.
"""
from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, field

from . import entropy_model as em
from .coder import ResidualInterval, full_interval, residual_interval
from .core import CodecError, ImagePlane, ResidualGrid, Truncated, compute_residual, reconstruct
from .lossy_base import BaseCodecConfig, base_decode, base_encode
from .quantizer import check_tau, quantize_grid
from .residual_layer import EstimatorProvider, TensorProvider, decode_layer, encode_layer, make_setup
from .scheduler import ContextModelSpec, tile

MAGIC = b"LPR1"
VERSION = 1
_HEADER = struct.Struct("<4sBIIBBBBHBBBBhhI")
HEADER_SIZE = _HEADER.size
TRAILER_SIZE = 4


class ParamSource(enum.IntEnum):
    ESTIMATOR = 0
    TENSOR = 1


class ChecksumMismatch(CodecError):
    pass


@dataclass(frozen=True)
class CodecConfig:
    tau: int = 0
    base: BaseCodecConfig = field(default_factory=BaseCodecConfig.null)
    P: int = 64
    k: int = 7
    j: int = 3
    K: int = 1
    adaptive_interval: bool = True

    def __post_init__(self):
        check_tau(self.tau)
        spec = ContextModelSpec(self.k, self.j)
        if not -(-spec.k // 2) < self.P <= 0xFFFF:
            raise ValueError(f"patch size must be in ({-(-spec.k // 2)}, 65535], got {self.P}")

    @property
    def spec(self) -> ContextModelSpec:
        return ContextModelSpec(self.k, self.j)

    @classmethod
    def default_for(cls, tau: int = 0, **kw) -> "CodecConfig":
        """Null base for lossless, downsample-by-4 base for near-lossless."""
        base = BaseCodecConfig.null() if tau == 0 else BaseCodecConfig.downsample(4)
        return cls(tau=tau, base=kw.pop("base", base), **kw)


@dataclass(frozen=True)
class Header:
    height: int
    width: int
    channels: int
    tau: int
    base: BaseCodecConfig
    P: int
    k: int
    j: int
    K: int
    param_source: ParamSource
    r_min: int
    r_max: int
    base_length: int
    segment_lengths: tuple[int, ...]
    version: int = VERSION

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.height, self.width, self.channels

    @property
    def interval(self) -> ResidualInterval:
        return ResidualInterval(self.r_min, self.r_max, 2 * self.tau + 1)

    @property
    def size(self) -> int:
        return HEADER_SIZE + 4 * len(self.segment_lengths)

    def pack(self) -> bytes:
        head = _HEADER.pack(MAGIC, self.version, self.height, self.width, self.channels,
                            self.tau, self.base.codec_id, self.base.factor, self.P, self.k,
                            self.j, self.K, self.param_source, self.r_min, self.r_max,
                            self.base_length)
        return head + struct.pack(f"<{len(self.segment_lengths)}I", *self.segment_lengths)

    @classmethod
    def unpack(cls, data: bytes) -> "Header":
        if len(data) < HEADER_SIZE:
            raise Truncated("file shorter than the fixed header")
        (magic, version, h, w, c, tau, codec_id, factor, P, k, j, K, src, r_min, r_max,
         base_len) = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise CodecError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CodecError(f"unsupported container version {version}")
        if c not in (1, 3) or h < 1 or w < 1:
            raise CodecError(f"bad image shape {h}x{w}x{c}")
        try:
            spec = ContextModelSpec(k, j)
            src = ParamSource(src)
            base = BaseCodecConfig(codec_id, factor)
        except ValueError as e:
            raise CodecError(str(e)) from None
        if P <= -(-spec.k // 2):
            raise CodecError(f"bad patch size {P}")
        n = len(tile(h, w, P))
        end = HEADER_SIZE + 4 * n
        if len(data) < end:
            raise Truncated("file shorter than the segment table")
        seg = struct.unpack_from(f"<{n}I", data, HEADER_SIZE)
        return cls(h, w, c, tau, base, P, k, j, K, src, r_min, r_max, base_len, seg, version)


def _provider(source: ParamSource, spec: ContextModelSpec, tensor, shape):
    if source == ParamSource.ESTIMATOR:
        return EstimatorProvider(spec)
    if tensor is None:
        raise CodecError("container was coded with a parameter tensor; pass params=")
    params = tensor if isinstance(tensor, em.LogisticMixtureParams) else em.load_param_tensor(tensor)
    h, w, c = shape
    if len(params) != h * w or params.C != c:
        raise CodecError("parameter tensor does not match the image shape")
    return TensorProvider(params)


def checksum(img: ImagePlane) -> int:
    return zlib.crc32(img.samples.tobytes()) & 0xFFFFFFFF


def encode_file(x: ImagePlane, cfg: CodecConfig | None = None, params=None,
                order: str = "batch") -> bytes:
    """Encode ``x``; lossless for ``tau == 0``, else max abs error <= tau.

    ``params`` (LMT1 bytes or :class:`LogisticMixtureParams`) replaces the
    built-in estimator; the decoder then needs the same tensor. ``order``
    selects the encoder's internal processing order and never changes the
    output bytes.
    """
    cfg = cfg or CodecConfig()
    base_payload, x_lossy = base_encode(x, cfg.base)
    rq = quantize_grid(compute_residual(x, x_lossy), cfg.tau)
    return _encode_quantized(x.shape, x_lossy, rq, base_payload, cfg, params, order)


def _encode_quantized(shape, x_lossy: ImagePlane, rq: ResidualGrid, base_payload: bytes,
                      cfg: CodecConfig, params, order: str) -> bytes:
    # From here on only the quantized residuals exist; nothing downstream can see r.
    H, W, C = shape
    source = ParamSource.ESTIMATOR if params is None else ParamSource.TENSOR
    provider = _provider(source, cfg.spec, params, shape)
    interval = residual_interval(rq, cfg.tau) if cfg.adaptive_interval else full_interval(cfg.tau)
    setup = make_setup(H, W, C, cfg.P, cfg.spec, interval)
    segments = encode_layer(rq.samples, setup, provider, order=order)
    header = Header(H, W, C, cfg.tau, cfg.base, cfg.P, cfg.k, cfg.j, provider.K, source,
                    interval.lo, interval.hi, len(base_payload),
                    tuple(len(s) for s in segments))
    x_hat = reconstruct(x_lossy, rq)
    return b"".join([header.pack(), base_payload, *segments,
                     struct.pack("<I", checksum(x_hat))])


def _split(data: bytes) -> tuple[Header, bytes, list[bytes]]:
    hdr = Header.unpack(data)
    pos = hdr.size
    total = pos + hdr.base_length + sum(hdr.segment_lengths) + TRAILER_SIZE
    if len(data) < total:
        raise Truncated(f"file is {len(data)} bytes, header describes {total}")
    if len(data) > total:
        raise CodecError(f"{len(data) - total} trailing bytes after container")
    base = data[pos : pos + hdr.base_length]
    pos += hdr.base_length
    segments = []
    for n in hdr.segment_lengths:
        segments.append(data[pos : pos + n])
        pos += n
    return hdr, base, segments


def decode_file(data: bytes, params=None) -> ImagePlane:
    hdr, base_payload, segments = _split(data)
    x_lossy = base_decode(base_payload, hdr.base, hdr.shape)
    provider = _provider(hdr.param_source, ContextModelSpec(hdr.k, hdr.j), params, hdr.shape)
    setup = make_setup(hdr.height, hdr.width, hdr.channels, hdr.P, ContextModelSpec(hdr.k, hdr.j),
                       hdr.interval)
    rq = decode_layer(segments, setup, provider)
    x_hat = reconstruct(x_lossy, ResidualGrid(rq))
    (stored,) = struct.unpack_from("<I", data, len(data) - TRAILER_SIZE)
    if checksum(x_hat) != stored:
        raise ChecksumMismatch("reconstruction checksum mismatch")
    return x_hat


def bpsp(n_bytes: int, H: int, W: int, C: int) -> float:
    """Bits per subpixel: each RGB pixel counts as three subpixels."""
    return 8.0 * n_bytes / (H * W * C)


@dataclass(frozen=True)
class RateReport:
    height: int
    width: int
    channels: int
    tau: int
    total_bytes: int
    base_bytes: int
    residual_bytes: int

    @property
    def subpixels(self) -> int:
        return self.height * self.width * self.channels

    @property
    def bpsp_total(self) -> float:
        return bpsp(self.total_bytes, self.height, self.width, self.channels)

    @property
    def bpsp_base(self) -> float:
        return bpsp(self.base_bytes, self.height, self.width, self.channels)

    @property
    def bpsp_residual(self) -> float:
        return bpsp(self.residual_bytes, self.height, self.width, self.channels)


def stats(data: bytes) -> RateReport:
    """Rate split: fixed header + base payload vs segment table + segments + trailer."""
    hdr, _, _ = _split(data)
    base = HEADER_SIZE + hdr.base_length
    return RateReport(hdr.height, hdr.width, hdr.channels, hdr.tau, len(data), base,
                      len(data) - base)


def read_header(data: bytes) -> Header:
    return Header.unpack(data)

"""Pluggable lossy base layer.

Two reference codecs ship with the package:

``null``
    Empty payload and an all-zero reconstruction, so the residual is the image.
``downsample``
    Box-filter average over f x f blocks (edge-replicated, round half up),
    stored raw, and an 8.8 fixed-point bilinear upsample back to full size.

Both are integer-exact, so encoder and decoder reconstructions agree bit for
bit. Codec ids >= 128 are reserved for user codecs added with
:func:`register_base_codec`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import CodecError, ImagePlane


class BaseCodecId(enum.IntEnum):
    NULL = 0
    DOWNSAMPLE = 1


USER_CODEC_MIN = 128
_FACTORS = (2, 4, 8)


@dataclass(frozen=True)
class BaseCodecConfig:
    codec_id: int = BaseCodecId.NULL
    factor: int = 0

    def __post_init__(self):
        if self.codec_id == BaseCodecId.DOWNSAMPLE and self.factor not in _FACTORS:
            raise ValueError(f"downsample factor must be one of {_FACTORS}, got {self.factor}")
        if self.codec_id == BaseCodecId.NULL and self.factor != 0:
            object.__setattr__(self, "factor", 0)

    @classmethod
    def null(cls) -> "BaseCodecConfig":
        return cls(BaseCodecId.NULL, 0)

    @classmethod
    def downsample(cls, factor: int = 4) -> "BaseCodecConfig":
        return cls(BaseCodecId.DOWNSAMPLE, factor)

    @property
    def name(self) -> str:
        try:
            return BaseCodecId(self.codec_id).name.lower()
        except ValueError:
            return f"user{self.codec_id}"


class UnknownBaseCodec(CodecError):
    pass


Encoder = Callable[[ImagePlane, BaseCodecConfig], tuple[bytes, ImagePlane]]
Decoder = Callable[[bytes, BaseCodecConfig, tuple[int, int, int]], ImagePlane]
_USER_CODECS: dict[int, tuple[Encoder, Decoder]] = {}


def register_base_codec(codec_id: int, encode: Encoder, decode: Decoder) -> None:
    if not USER_CODEC_MIN <= codec_id <= 255:
        raise ValueError(f"user codec ids must be in [{USER_CODEC_MIN}, 255]")
    _USER_CODECS[codec_id] = (encode, decode)


def box_downsample(s: np.ndarray, f: int) -> np.ndarray:
    """Round-half-up mean over f x f blocks of an (H, W, C) uint8 array."""
    h, w, c = s.shape
    hh, ww = -(-h // f), -(-w // f)
    padded = np.pad(s, ((0, hh * f - h), (0, ww * f - w), (0, 0)), mode="edge")
    sums = padded.reshape(hh, f, ww, f, c).sum(axis=(1, 3), dtype=np.int64)
    return ((sums + f * f // 2) // (f * f)).astype(np.uint8)


def _taps(n_out: int, n_in: int, f: int):
    # sample centre of output y in input coordinates: (y + 0.5) / f - 0.5, in 1/256 units
    pos = (2 * np.arange(n_out) + 1 - f) * (128 // f)
    pos = np.clip(pos, 0, (n_in - 1) * 256)
    i0 = pos >> 8
    frac = pos & 255
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, frac


def bilinear_upsample(small: np.ndarray, f: int, h: int, w: int) -> np.ndarray:
    """8.8 fixed-point bilinear upsample to (h, w), edge-replicated, round half up."""
    sh, sw, _ = small.shape
    r0, r1, fy = _taps(h, sh, f)
    c0, c1, fx = _taps(w, sw, f)
    s = small.astype(np.int64)
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = s[r0][:, c0] * (256 - fx) + s[r0][:, c1] * fx
    bot = s[r1][:, c0] * (256 - fx) + s[r1][:, c1] * fx
    acc = top * (256 - fy) + bot * fy
    return ((acc + 32768) >> 16).astype(np.uint8)


def base_encode(x: ImagePlane, cfg: BaseCodecConfig) -> tuple[bytes, ImagePlane]:
    if cfg.codec_id == BaseCodecId.NULL:
        return b"", ImagePlane.zeros(*x.shape)
    if cfg.codec_id == BaseCodecId.DOWNSAMPLE:
        small = box_downsample(x.samples, cfg.factor)
        payload = small.tobytes()
        return payload, base_decode(payload, cfg, x.shape)
    if cfg.codec_id in _USER_CODECS:
        return _USER_CODECS[cfg.codec_id][0](x, cfg)
    raise UnknownBaseCodec(f"unknown base codec id {cfg.codec_id}")


def base_payload_size(cfg: BaseCodecConfig, shape: tuple[int, int, int]) -> int | None:
    """Expected payload length, or None when the codec does not fix it."""
    h, w, c = shape
    if cfg.codec_id == BaseCodecId.NULL:
        return 0
    if cfg.codec_id == BaseCodecId.DOWNSAMPLE:
        f = cfg.factor
        return -(-h // f) * -(-w // f) * c
    return None


def base_decode(payload: bytes, cfg: BaseCodecConfig, shape: tuple[int, int, int]) -> ImagePlane:
    h, w, c = shape
    if cfg.codec_id in _USER_CODECS and cfg.codec_id >= USER_CODEC_MIN:
        return _USER_CODECS[cfg.codec_id][1](payload, cfg, shape)
    expected = base_payload_size(cfg, shape)
    if cfg.codec_id not in (BaseCodecId.NULL, BaseCodecId.DOWNSAMPLE):
        raise UnknownBaseCodec(f"unknown base codec id {cfg.codec_id}")
    if len(payload) != expected:
        raise CodecError(f"base payload is {len(payload)} bytes, expected {expected}")
    if cfg.codec_id == BaseCodecId.NULL:
        return ImagePlane.zeros(h, w, c)
    f = cfg.factor
    small = np.frombuffer(payload, np.uint8).reshape(-(-h // f), -(-w // f), c)
    return ImagePlane(bilinear_upsample(small, f, h, w))

"""Grid types, PPM/PGM I/O, residual formation and clamped reconstruction."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class CodecError(Exception):
    """Base class for every error raised by this package."""


class ImageFormatError(CodecError):
    pass


class MaxvalUnsupported(ImageFormatError):
    pass


class Truncated(CodecError):
    pass


class ShapeMismatch(CodecError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ImagePlane:
    """H x W x C grid of 8-bit samples, row-major and channel-interleaved."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim == 2:
            s = s[:, :, None]
        if s.ndim != 3 or s.shape[2] not in (1, 3):
            raise ShapeMismatch(f"expected H x W x {{1,3}} samples, got shape {s.shape}")
        if s.shape[0] < 1 or s.shape[1] < 1:
            raise ShapeMismatch("image must have at least one pixel")
        if s.dtype != np.uint8:
            if s.size and (s.min() < 0 or s.max() > 255):
                raise ValueError("samples outside [0, 255]")
            s = s.astype(np.uint8)
        object.__setattr__(self, "samples", _frozen(s))

    @classmethod
    def zeros(cls, height: int, width: int, channels: int) -> "ImagePlane":
        return cls(np.zeros((height, width, channels), np.uint8))

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return self.samples.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.samples.shape

    def __eq__(self, other):
        if not isinstance(other, ImagePlane):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.samples, other.samples)

    def __hash__(self):
        return hash((self.shape, self.samples.tobytes()))


@dataclass(frozen=True, eq=False)
class ResidualGrid:
    """Signed residuals in [-255, 255], same layout as :class:`ImagePlane`."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 3:
            raise ShapeMismatch(f"expected 3-d residual grid, got shape {s.shape}")
        if s.size and (s.min() < -255 or s.max() > 255):
            raise ValueError("residuals outside [-255, 255]")
        object.__setattr__(self, "samples", _frozen(s.astype(np.int16)))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.samples.shape

    def __eq__(self, other):
        if not isinstance(other, ResidualGrid):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.samples, other.samples)


# P5/P6 header: magic, width, height, maxval, then exactly one whitespace byte.
_HEADER_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def load_image(data: bytes) -> ImagePlane:
    """Parse a binary PGM (P5) or PPM (P6) file with maxval 255."""
    pos = 0
    tokens = []
    for _ in range(4):
        m = _HEADER_TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError("malformed header")
        tokens.append(m.group(1))
        pos = m.end()
    magic, width, height, maxval = tokens
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"unsupported magic {magic!r}")
    try:
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError:
        raise ImageFormatError("non-numeric header field") from None
    if maxval != 255:
        raise MaxvalUnsupported(f"maxval {maxval} (only 255 is supported)")
    if width < 1 or height < 1:
        raise ImageFormatError("zero-sized image")
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise ImageFormatError("missing whitespace after maxval")
    pos += 1
    need = width * height * channels
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise Truncated(f"expected {need} payload bytes, got {len(payload)}")
    samples = np.frombuffer(payload, np.uint8).reshape(height, width, channels)
    return ImagePlane(samples)


def save_image(img: ImagePlane) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + img.samples.tobytes()


def read_image(path) -> ImagePlane:
    with open(path, "rb") as f:
        return load_image(f.read())


def write_image(path, img: ImagePlane) -> None:
    with open(path, "wb") as f:
        f.write(save_image(img))


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f"shape {a.shape} != {b.shape}")


def compute_residual(x: ImagePlane, x_lossy: ImagePlane) -> ResidualGrid:
    _check_same_shape(x, x_lossy)
    return ResidualGrid(x.samples.astype(np.int16) - x_lossy.samples.astype(np.int16))


def reconstruct(x_lossy: ImagePlane, r_hat: ResidualGrid) -> ImagePlane:
    """x_lossy + r_hat, clamped to [0, 255].

    Clamping can only move a value toward the valid range, so it never
    increases the error against an original that lies in [0, 255].
    """
    _check_same_shape(x_lossy, r_hat)
    s = x_lossy.samples.astype(np.int16) + r_hat.samples
    return ImagePlane(np.clip(s, 0, 255).astype(np.uint8))

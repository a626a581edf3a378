"""Lossy-plus-residual image codec with an l-infinity error bound.

``encode_file``/``decode_file`` are the entry points; the submodules expose
the pieces (base codec, logistic mixture model, residual quantizer,
wavefront scheduler, range coder) for testing and experiments.
"""
from .container import (CodecConfig, RateReport, decode_file, encode_file, read_header,
                        stats)
from .core import (CodecError, ImageFormatError, ImagePlane, ResidualGrid, Truncated,
                   load_image, read_image, save_image, write_image)
from .lossy_base import BaseCodecConfig, register_base_codec
from .scheduler import ContextModelSpec

__all__ = [
    "BaseCodecConfig", "CodecConfig", "CodecError", "ContextModelSpec", "ImageFormatError",
    "ImagePlane", "RateReport", "ResidualGrid", "Truncated", "decode_file", "encode_file",
    "load_image", "read_header", "read_image", "register_base_codec", "save_image", "stats",
    "write_image",
]

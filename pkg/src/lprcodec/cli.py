"""Command-line front end: encode, decode, verify, stats, bench.

    python3 -m lprcodec encode --tau 2 in.ppm out.lpr
    python3 -m lprcodec decode out.lpr back.ppm
    python3 -m lprcodec verify in.ppm out.lpr      # prints max_error=N
    python3 -m lprcodec stats out.lpr
    python3 -m lprcodec bench images/ --tau 0,1,2,4 -o table.csv
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import entropy_model as em
from .container import CodecConfig, decode_file, encode_file, read_header, stats
from .core import CodecError, read_image, write_image
from .lossy_base import BaseCodecConfig, BaseCodecId

CSV_FIELDS = ["path", "H", "W", "tau", "bpsp_total", "bpsp_base", "bpsp_residual", "max_error",
              "encode_ms", "decode_ms"]
_IMAGE_SUFFIXES = {".ppm", ".pgm", ".pnm"}


@dataclass(frozen=True)
class CliConfig:
    command: str
    tau: int = 0
    base: str | None = None  # None: pick from tau
    factor: int = 4
    P: int = 64
    k: int = 7
    j: int = 3
    K: int = 1
    params: str | None = None

    def codec(self, tau: int | None = None) -> CodecConfig:
        tau = self.tau if tau is None else tau
        if self.base is None:
            base = BaseCodecConfig.null() if tau == 0 else BaseCodecConfig.downsample(self.factor)
        elif self.base == "null":
            base = BaseCodecConfig.null()
        else:
            base = BaseCodecConfig(BaseCodecId.DOWNSAMPLE, self.factor)
        return CodecConfig(tau=tau, base=base, P=self.P, k=self.k, j=self.j, K=self.K)

    def tensor(self):
        if self.params is None:
            if self.K != 1:
                raise CodecError("the built-in estimator is K=1; pass --params for K > 1")
            return None
        params = em.load_param_tensor(Path(self.params).read_bytes())
        if params.K != self.K:
            raise CodecError(f"tensor has K={params.K}, -K says {self.K}")
        return params


def _raw_samples(path) -> np.ndarray:
    """Pixel bytes of a binary PNM straight from the file: the raster is its tail."""
    data = Path(path).read_bytes()
    img = read_image(path)
    return np.frombuffer(data[len(data) - img.samples.size :], np.uint8).reshape(img.shape)


def max_error(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape != b.shape:
        raise CodecError(f"shape mismatch {a.shape} vs {b.shape}")
    return int(np.abs(a.astype(np.int16) - b.astype(np.int16)).max())


def _bench_one(job):
    path, cfg, tau = job
    x = read_image(path)
    t0 = time.perf_counter()
    data = encode_file(x, cfg.codec(tau), cfg.tensor())
    t1 = time.perf_counter()
    y = decode_file(data, cfg.tensor())
    t2 = time.perf_counter()
    rep = stats(data)
    return {"path": str(path), "H": x.height, "W": x.width, "tau": tau,
            "bpsp_total": f"{rep.bpsp_total:.4f}", "bpsp_base": f"{rep.bpsp_base:.4f}",
            "bpsp_residual": f"{rep.bpsp_residual:.4f}",
            "max_error": max_error(x.samples, y.samples),
            "encode_ms": f"{1e3 * (t1 - t0):.1f}", "decode_ms": f"{1e3 * (t2 - t1):.1f}"}


def _cmd_encode(cfg: CliConfig, a) -> int:
    data = encode_file(read_image(a.input), cfg.codec(), cfg.tensor())
    Path(a.output).write_bytes(data)
    rep = stats(data)
    print(f"{a.output}: {len(data)} bytes, bpsp={rep.bpsp_total:.4f}")
    return 0


def _cmd_decode(cfg: CliConfig, a) -> int:
    write_image(a.output, decode_file(Path(a.input).read_bytes(), cfg.tensor()))
    return 0


def _cmd_verify(cfg: CliConfig, a) -> int:
    orig = _raw_samples(a.image)
    if a.container:
        data = Path(a.container).read_bytes()
        tau = read_header(data).tau
    else:
        tau = cfg.tau
        data = encode_file(read_image(a.image), cfg.codec(), cfg.tensor())
    err = max_error(orig, decode_file(data, cfg.tensor()).samples)
    print(f"max_error={err}")
    if err > tau:
        print(f"error bound violated: {err} > tau={tau}", file=sys.stderr)
        return 1
    return 0


def _cmd_stats(cfg: CliConfig, a) -> int:
    data = Path(a.input).read_bytes()
    hdr, rep = read_header(data), stats(data)
    print(f"shape={hdr.height}x{hdr.width}x{hdr.channels} tau={hdr.tau} base={hdr.base.name}"
          f" P={hdr.P} k={hdr.k} j={hdr.j} K={hdr.K}")
    print(f"bytes={rep.total_bytes} base_bytes={rep.base_bytes} residual_bytes={rep.residual_bytes}")
    print(f"bpsp_total={rep.bpsp_total:.4f} bpsp_base={rep.bpsp_base:.4f}"
          f" bpsp_residual={rep.bpsp_residual:.4f}")
    return 0


def _cmd_bench(cfg: CliConfig, a) -> int:
    taus = [int(t) for t in a.taus.split(",")]
    paths = sorted(p for p in Path(a.directory).iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES)
    if not paths:
        raise CodecError(f"no .ppm/.pgm images in {a.directory}")
    jobs = [(p, cfg, t) for p in paths for t in taus]
    workers = a.jobs or os.cpu_count() or 1
    if workers == 1:
        rows = list(map(_bench_one, jobs))
    else:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_bench_one, jobs))
    out = open(a.output, "w", newline="") if a.output else sys.stdout
    try:
        w = csv.DictWriter(out, CSV_FIELDS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if a.output:
            out.close()
    return 0


def _codec_flags(p: argparse.ArgumentParser, tau_flag: bool = True):
    if tau_flag:
        p.add_argument("--tau", type=int, default=0, help="max abs error (0 = lossless)")
    p.add_argument("--base", choices=["null", "downsample"], default=None,
                   help="base codec (default: null for tau=0, downsample otherwise)")
    p.add_argument("--factor", type=int, default=4, choices=[2, 4, 8])
    p.add_argument("-P", type=int, default=64, help="patch size")
    p.add_argument("-k", type=int, default=7, help="context window size")
    p.add_argument("-j", type=int, default=3, help="wavefront slope")
    p.add_argument("-K", type=int, default=1, help="mixture components")
    p.add_argument("--params", default=None, help="LMT1 parameter tensor")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lprcodec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("encode", help="image -> container")
    _codec_flags(p)
    p.add_argument("input")
    p.add_argument("output")
    p = sub.add_parser("decode", help="container -> PPM/PGM")
    p.add_argument("--params", default=None)
    p.add_argument("input")
    p.add_argument("output")
    p = sub.add_parser("verify", help="check a container (or a fresh encode) against the image")
    _codec_flags(p)
    p.add_argument("image")
    p.add_argument("container", nargs="?")
    p = sub.add_parser("stats", help="print the rate split of a container")
    p.add_argument("input")
    p = sub.add_parser("bench", help="CSV of bpsp and timings over a directory")
    _codec_flags(p, tau_flag=False)
    p.add_argument("directory")
    p.add_argument("--tau", dest="taus", default="0,1,2,4", help="comma-separated tau list")
    p.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    return ap


_COMMANDS = {"encode": _cmd_encode, "decode": _cmd_decode, "verify": _cmd_verify,
             "stats": _cmd_stats, "bench": _cmd_bench}


def run(argv=None) -> int:
    a = build_parser().parse_args(argv)
    kw = {f: getattr(a, f) for f in ("base", "factor", "P", "k", "j", "K", "params")
          if hasattr(a, f)}
    if isinstance(getattr(a, "tau", None), int):
        kw["tau"] = a.tau
    try:
        cfg = CliConfig(a.command, **kw)
        return _COMMANDS[a.command](cfg, a)
    except (CodecError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Discrete logistic mixture model over residual symbols.

Parameter providers hand out :class:`LogisticMixtureParams`; the model turns
them into probability vectors over an integer support with the tail mass
folded into the two end symbols.

PMF evaluation runs in the compiled kernels of :mod:`lprcodec._kernels`, one
row at a time, so the value computed for one pixel does not depend on how
many other pixels share the batch. Encoder and decoder batch pixels
differently and still agree bit for bit.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax

from . import _kernels
from .core import CodecError, Truncated

SIGMA_MIN = 1e-3
# floor on the built-in estimator's scale; keeps first pixels from getting spiky PMFs
SIGMA_FLOOR_EST = 1.0
TENSOR_MAGIC = b"LMT1"


@dataclass(frozen=True)
class LogisticMixtureParams:
    """Mixture parameters for a batch of N pixels.

    pi: (N, K); mu, sigma: (N, C, K); beta: (N, 3, K) or None for grayscale.
    A single pixel is a batch of one.
    """

    pi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray | None = None

    def __post_init__(self):
        n, k = self.pi.shape
        if self.mu.shape != self.sigma.shape or self.mu.shape[0] != n or self.mu.shape[2] != k:
            raise CodecError("inconsistent mixture parameter shapes")
        if np.any(np.abs(self.pi.sum(axis=1) - 1.0) > 1e-6):
            raise CodecError("mixture weights must sum to 1")
        if np.any(~(self.sigma >= SIGMA_MIN)):
            raise CodecError(f"sigma below {SIGMA_MIN}")
        if self.beta is not None and self.beta.shape != (n, 3, k):
            raise CodecError("beta must have shape (N, 3, K)")

    @property
    def K(self) -> int:
        return self.pi.shape[1]

    @property
    def C(self) -> int:
        return self.mu.shape[1]

    def __len__(self):
        return self.pi.shape[0]

    def take(self, idx) -> "LogisticMixtureParams":
        beta = None if self.beta is None else self.beta[idx]
        return LogisticMixtureParams(self.pi[idx], self.mu[idx], self.sigma[idx], beta)


def single(pi, mu, sigma, beta=None) -> LogisticMixtureParams:
    """Build one pixel's params from per-pixel arrays (pi[K], mu[C][K], ...)."""
    pi = np.asarray(pi, np.float64).reshape(1, -1)
    mu = np.asarray(mu, np.float64).reshape(1, -1, pi.shape[1])
    sigma = np.asarray(sigma, np.float64).reshape(mu.shape)
    if beta is not None:
        beta = np.asarray(beta, np.float64).reshape(1, 3, pi.shape[1])
    return LogisticMixtureParams(pi, mu, sigma, beta)


def update_means(params: LogisticMixtureParams, channel: int, prev) -> np.ndarray:
    """Channel-adjusted means (N, K) for ``channel`` given earlier channels.

    ``prev`` holds the already coded residuals of channels ``0..channel-1``
    with shape (N, channel). Coupling per mixture k:
    mu1' = mu1, mu2' = mu2 + b1*r1, mu3' = mu3 + b2*r1 + b3*r2.
    """
    if not 0 <= channel < params.C:
        raise IndexError(f"channel {channel} out of range for C={params.C}")
    mu = params.mu[:, channel, :]
    if channel == 0 or params.beta is None:
        return mu
    prev = np.asarray(prev, np.float64).reshape(len(params), -1)
    b = params.beta
    if channel == 1:
        return mu + b[:, 0, :] * prev[:, 0:1]
    return mu + b[:, 1, :] * prev[:, 0:1] + b[:, 2, :] * prev[:, 1:2]


def pmf_from_params(pi, mu, sigma, lo: int, hi: int) -> np.ndarray:
    """Stride-1 PMFs (N, hi-lo+1), tails folded into the end symbols."""
    if hi < lo:
        raise CodecError("empty support")
    sigma = np.ascontiguousarray(sigma, np.float64)
    if np.any(~(sigma >= SIGMA_MIN)):
        raise CodecError(f"sigma below {SIGMA_MIN}")
    return _kernels.pmf_rows(np.ascontiguousarray(pi, np.float64),
                             np.ascontiguousarray(mu, np.float64), sigma, int(lo), int(hi))


def discrete_pmf(params: LogisticMixtureParams, channel: int, support: tuple[int, int],
                 prev=None) -> np.ndarray:
    """PMF over ``support = (lo, hi)`` for one channel of every pixel in the batch.

    Means are adjusted with :func:`update_means` when ``prev`` is given.
    Returns shape (N, hi-lo+1); for a single pixel, index ``[0]``.
    """
    lo, hi = support
    mu = update_means(params, channel, prev) if prev is not None else params.mu[:, channel, :]
    return pmf_from_params(params.pi, mu, params.sigma[:, channel, :], lo, hi)


def estimate_params(context, base_neighborhood=None, K: int = 1) -> LogisticMixtureParams:
    """Built-in causal estimator for one pixel.

    ``context`` holds residuals from causally preceding positions, either for
    one channel (a flat list) or one list per channel. Entries may be plain
    ints or ``((dr, dc), value)`` pairs. Per channel the mean is the plain
    average (0 when empty) and the scale ``max(1, 1.5 * mean abs deviation)``.
    ``base_neighborhood`` is accepted for provider-interface compatibility and
    not used.
    """
    if K != 1:
        raise ValueError("the built-in estimator only produces K=1")
    context = list(context)
    if not context or not isinstance(context[0], list):
        context = [context]
    mus, sigmas = [], []
    for vals in context:
        mu, sigma = _mean_and_scale([int(v[1]) if isinstance(v, tuple) else int(v) for v in vals])
        mus.append([mu])
        sigmas.append([sigma])
    beta = np.zeros(3) if len(mus) == 3 else None
    return single([1.0], mus, sigmas, beta)


def _mean_and_scale(vals: list[int]) -> tuple[float, float]:
    n = len(vals)
    if n == 0:
        return 0.0, SIGMA_FLOOR_EST
    s = sum(vals)
    dev = sum(abs(n * v - s) for v in vals)
    # exact integer numerators, one rounding each -> identical to the batch path
    return s / n, max(SIGMA_FLOOR_EST, (3 * dev) / (2 * n * n))


def estimate_batch(values: np.ndarray, valid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised twin of :func:`_mean_and_scale` over rows of context values.

    values, valid: (N, M) integer values and availability mask.
    Returns mu, sigma of shape (N,).
    """
    v = np.where(valid, values, 0).astype(np.int64)
    n = valid.sum(axis=1).astype(np.int64)
    s = v.sum(axis=1)
    dev = np.where(valid, np.abs(n[:, None] * v - s[:, None]), 0).sum(axis=1)
    safe = np.maximum(n, 1)
    mu = np.where(n > 0, s / safe, 0.0)
    sigma = np.where(n > 0, np.maximum(SIGMA_FLOOR_EST, (3 * dev) / (2 * safe * safe)),
                     SIGMA_FLOOR_EST)
    return mu, sigma


def floats_per_pixel(K: int, C: int) -> int:
    return 10 * K if C == 3 else 3 * K


def load_param_tensor(data: bytes, H: int | None = None, W: int | None = None,
                      K: int | None = None, C: int | None = None) -> LogisticMixtureParams:
    """Read an ``LMT1`` parameter tensor into per-pixel params in raster order.

    Layout after the 20-byte header (magic + H, W, K, C as little-endian u32)
    is little-endian float32 ``[row][col][pi(K), mu(C*K), sigma(C*K), beta(3*K)]``
    with beta omitted for C=1. ``pi`` holds logits (softmaxed here) and
    ``sigma`` raw values (softplus, then floored at ``SIGMA_MIN``). Optional
    H/W/K/C arguments are checked against the header.
    """
    if len(data) < 20 or data[:4] != TENSOR_MAGIC:
        raise CodecError("not an LMT1 parameter tensor")
    h, w, k, c = struct.unpack_from("<4I", data, 4)
    for name, want, got in (("H", H, h), ("W", W, w), ("K", K, k), ("C", C, c)):
        if want is not None and want != got:
            raise CodecError(f"tensor {name}={got}, expected {want}")
    if c not in (1, 3) or k < 1:
        raise CodecError(f"unsupported tensor layout K={k} C={c}")
    nf = floats_per_pixel(k, c)
    need = h * w * nf * 4
    if len(data) - 20 != need:
        raise Truncated(f"tensor payload is {len(data) - 20} bytes, expected {need}")
    raw = np.frombuffer(data, "<f4", offset=20).astype(np.float64).reshape(h * w, nf)
    if not np.all(np.isfinite(raw)):
        raise CodecError("non-finite values in parameter tensor")
    logits = raw[:, :k]
    pi = np.exp(log_softmax(logits, axis=1))
    mu = raw[:, k : k + c * k].reshape(-1, c, k)
    sig_raw = raw[:, k + c * k : k + 2 * c * k].reshape(-1, c, k)
    sigma = np.maximum(np.logaddexp(0.0, sig_raw), SIGMA_MIN)
    beta = raw[:, k + 2 * c * k :].reshape(-1, 3, k) if c == 3 else None
    return LogisticMixtureParams(pi, mu, sigma, beta)


def tensor_shape(data: bytes) -> tuple[int, int, int, int]:
    if len(data) < 20 or data[:4] != TENSOR_MAGIC:
        raise CodecError("not an LMT1 parameter tensor")
    return struct.unpack_from("<4I", data, 4)


def save_param_tensor(H: int, W: int, logits, mu, sigma_raw, beta=None) -> bytes:
    """Inverse layout of :func:`load_param_tensor`; arrays are per pixel in raster order.

    logits: (H*W, K); mu, sigma_raw: (H*W, C, K); beta: (H*W, 3, K) for C=3.
    """
    logits = np.asarray(logits, np.float64)
    n, k = logits.shape
    mu = np.asarray(mu, np.float64).reshape(n, -1, k)
    c = mu.shape[1]
    parts = [logits, mu.reshape(n, -1), np.asarray(sigma_raw, np.float64).reshape(n, -1)]
    if c == 3:
        b = np.zeros((n, 3, k)) if beta is None else np.asarray(beta, np.float64).reshape(n, 3, k)
        parts.append(b.reshape(n, -1))
    payload = np.concatenate(parts, axis=1).astype("<f4").tobytes()
    return TENSOR_MAGIC + struct.pack("<4I", H, W, k, c) + payload

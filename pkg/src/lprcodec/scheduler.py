"""Patch tiling, causal context masks and wavefront schedules.

A context model ``M_k^j`` keeps the raster-causal part of a k x k window
minus the upper-right pixels that would break the wavefront order
``t = (j - 1) * row + col``. With ``j = (k + 3) // 2`` nothing is removed and
the mask is the full raster-causal window; ``j = 1`` keeps only the pixels to
the left, so whole columns decode together.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class ContextModelSpec:
    k: int = 7
    j: int = 3

    def __post_init__(self):
        if self.k < 3 or self.k % 2 == 0:
            raise ValueError(f"kernel size must be odd and >= 3, got {self.k}")
        if not 1 <= self.j <= (self.k + 3) // 2:
            raise ValueError(f"j must be in [1, {(self.k + 3) // 2}] for k={self.k}, got {self.j}")

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        return context_offsets(self.k, self.j)


@lru_cache(maxsize=None)
def context_offsets(k: int, j: int) -> tuple[tuple[int, int], ...]:
    """(dr, dc) offsets of M_k^j, rows above first, then the same-row left part."""
    ContextModelSpec(k, j)
    h = k // 2
    out = [(dr, dc) for dr in range(-h, 0) for dc in range(-h, h + 1) if (j - 1) * dr + dc < 0]
    out += [(0, dc) for dc in range(-h, 0)]
    return tuple(out)


def wavefront_step(row: int, col: int, j: int) -> int:
    return (j - 1) * row + col


def num_steps(h: int, w: int, j: int) -> int:
    """Wavefront groups for an h x w patch."""
    return (j - 1) * (h - 1) + w


@dataclass(frozen=True)
class Schedule:
    """Pixel groups for one P x P patch; all pixels in a group are independent."""

    P: int
    spec: ContextModelSpec
    groups: tuple[tuple[tuple[int, int], ...], ...]

    def __len__(self):
        return len(self.groups)


def build_schedule(P: int, spec: ContextModelSpec, h: int | None = None,
                   w: int | None = None, strict: bool = True) -> Schedule:
    """Wavefront schedule for a P x P patch (or a smaller h x w edge patch).

    Within a group pixels are listed top row first. ``strict`` enforces
    ``P > ceil(k/2)``; the schedule itself stays valid for any P >= 1.
    """
    if P < 1 or (strict and P <= -(-spec.k // 2)):
        raise ValueError(f"patch size {P} must exceed ceil(k/2) = {-(-spec.k // 2)}")
    h = P if h is None else h
    w = P if w is None else w
    groups: list[list[tuple[int, int]]] = [[] for _ in range(num_steps(h, w, spec.j))]
    for r in range(h):
        for c in range(w):
            groups[wavefront_step(r, c, spec.j)].append((r, c))
    return Schedule(P, spec, tuple(tuple(g) for g in groups))


def raster_schedule(P: int, spec: ContextModelSpec, h: int | None = None,
                    w: int | None = None) -> Schedule:
    """One pixel per group in raster order (the serial baseline)."""
    h = P if h is None else h
    w = P if w is None else w
    return Schedule(P, spec, tuple(((r, c),) for r in range(h) for c in range(w)))


def check_schedule(schedule: Schedule, h: int | None = None, w: int | None = None) -> bool:
    """True if every in-patch context neighbour is coded in a strictly earlier group."""
    h = schedule.P if h is None else h
    w = schedule.P if w is None else w
    when = {}
    for t, g in enumerate(schedule.groups):
        for p in g:
            if p in when:
                return False
            when[p] = t
    if len(when) != h * w:
        return False
    for (r, c), t in when.items():
        for dr, dc in schedule.spec.offsets:
            q = (r + dr, c + dc)
            if 0 <= q[0] < h and 0 <= q[1] < w and when[q] >= t:
                return False
    return True


@dataclass(frozen=True)
class Patch:
    row: int
    col: int
    height: int
    width: int


def tile(H: int, W: int, P: int) -> list[Patch]:
    """Non-overlapping P x P patches in raster order; edge patches may be smaller."""
    return [Patch(r, c, min(P, H - r), min(P, W - c))
            for r in range(0, H, P) for c in range(0, W, P)]


@dataclass(frozen=True)
class ImageSchedule:
    """Wavefront order for a whole image, all patches advancing in lockstep.

    ``steps[t]`` is an index array into the flattened pixel list (row-major
    over the image) for pixels at wavefront step t, sorted by patch then
    patch-local row. ``patch_of``, ``local_row``, ``local_col`` and the patch
    extents are per-pixel arrays in the same flattened order.
    """

    H: int
    W: int
    P: int
    spec: ContextModelSpec
    patches: tuple[Patch, ...]
    patch_of: np.ndarray
    local_row: np.ndarray
    local_col: np.ndarray
    patch_w: np.ndarray
    steps: tuple[np.ndarray, ...]


def image_schedule(H: int, W: int, P: int, spec: ContextModelSpec) -> ImageSchedule:
    if P <= -(-spec.k // 2):
        raise ValueError(f"patch size {P} must exceed ceil(k/2) = {-(-spec.k // 2)}")
    rows, cols = np.divmod(np.arange(H * W), W)
    pr, pc = rows // P, cols // P
    n_pc = -(-W // P)
    patch_of = pr * n_pc + pc
    lr, lc = rows - pr * P, cols - pc * P
    patch_w = np.minimum(P, W - pc * P)
    t = (spec.j - 1) * lr + lc
    order = np.lexsort((lr, patch_of, t))
    bounds = np.flatnonzero(np.diff(t[order])) + 1
    steps = tuple(np.split(order, bounds))
    return ImageSchedule(H, W, P, spec, tuple(tile(H, W, P)), patch_of, lr, lc, patch_w, steps)


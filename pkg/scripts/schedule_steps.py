"""Wavefront steps per context model: counts for P=9 and a picture of the scan.

Prints the step count of every M_k^j next to the raster baseline P^2 and,
with --plot, saves a grid of step-index maps (one panel per j).
"""
from __future__ import annotations

import argparse

import numpy as np

from lprcodec.scheduler import ContextModelSpec, build_schedule, check_schedule, context_offsets


def step_map(P: int, spec: ContextModelSpec) -> np.ndarray:
    m = np.zeros((P, P), int)
    for t, group in enumerate(build_schedule(P, spec).groups):
        for r, c in group:
            m[r, c] = t
    return m


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-P", type=int, default=9)
    ap.add_argument("-k", type=int, default=7)
    ap.add_argument("--plot", default=None, help="output image path (needs matplotlib)")
    a = ap.parse_args()
    js = list(range((a.k + 3) // 2, 0, -1))
    print(f"P={a.P} k={a.k}: raster order needs {a.P * a.P} steps")
    print(f"{'j':>3} {'context':>8} {'steps':>6} {'jP-j+1':>7} {'angle':>7} valid")
    for j in js:
        spec = ContextModelSpec(a.k, j)
        s = build_schedule(a.P, spec)
        angle = np.degrees(np.arctan2(1, j - 1)) if j > 1 else 90.0
        print(f"{j:>3} {len(context_offsets(a.k, j)):>8} {len(s):>6} {j * a.P - j + 1:>7} "
              f"{angle:7.2f} {check_schedule(s)}")
    if a.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, axes = plt.subplots(1, len(js), figsize=(3 * len(js), 3))
        for ax, j in zip(axes, js):
            m = step_map(a.P, ContextModelSpec(a.k, j))
            ax.imshow(m, cmap="viridis")
            for (r, c), t in np.ndenumerate(m):
                ax.text(c, r, str(t), ha="center", va="center", fontsize=6, color="w")
            ax.set_title(f"M_{a.k}^{j}: {m.max() + 1} steps")
            ax.set_xticks([])
            ax.set_yticks([])
        fig.tight_layout()
        fig.savefig(a.plot, dpi=120)
        print("wrote", a.plot)


if __name__ == "__main__":
    main()

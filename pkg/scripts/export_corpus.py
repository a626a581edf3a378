"""Write the natural-image test fixtures: 128x128 crops of scikit-image samples as PPM/PGM."""
from __future__ import annotations

import argparse
from pathlib import Path

from skimage import data

from lprcodec import ImagePlane, write_image

# name -> (loader, top, left); crops chosen to contain texture, not flat background
CROPS = {
    "astronaut": (data.astronaut, 40, 150),
    "chelsea": (data.chelsea, 60, 120),
    "coffee": (data.coffee, 150, 200),
    "immunohistochemistry": (data.immunohistochemistry, 200, 200),
    "camera": (data.camera, 80, 200),
    "moon": (data.moon, 200, 200),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data"))
    ap.add_argument("--size", type=int, default=128)
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (load, top, left) in CROPS.items():
        img = load()[top : top + a.size, left : left + a.size]
        ext = ".ppm" if img.ndim == 3 else ".pgm"
        write_image(out / f"{name}{ext}", ImagePlane(img))
        print(out / f"{name}{ext}", img.shape)


if __name__ == "__main__":
    main()

"""Fidelity of spectral augmentation across noise levels.

For each method and maximum noise fraction, prints the mean PSNR (dB) of each
replication against its source, averaged over seeds, on the procedural texture
and on the demo dataset images.
"""

import argparse
from pathlib import Path

import numpy as np

from specaug import AugmentSpec, Manifest, load_image, psnr, synthesize
from specaug.textures import procedural_texture

ETAS = (0.005, 0.01, 0.05, 0.10)


def sweep(images, method, eta, seeds, R, **kw):
    table = np.zeros(R)
    for seed in range(seeds):
        spec = AugmentSpec(method, replications=R, eta=eta, seed=seed, **kw)
        for idx, img in enumerate(images):
            table += [psnr(img, out) for out in synthesize(img, spec, image_index=idx)]
    return table / (seeds * len(images))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "demo" / "manifest.json")
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--replications", type=int, default=5)
    parser.add_argument("--wavelet", default="haar")
    parser.add_argument("--levels", type=int, default=2)
    args = parser.parse_args()

    sets = {"texture": [procedural_texture(64)]}
    if args.manifest.exists():
        sets["demo"] = [load_image(e.image_path) for e in Manifest.load(args.manifest).entries]

    header = "  ".join(f"r={r:<5d}" for r in range(args.replications))
    for name, images in sets.items():
        print(f"\n{name} ({len(images)} images, {args.seeds} seeds)")
        print(f"{'method':>10} {'eta':>6}  {header}")
        for method in ("dct", "dwt"):
            for eta in ETAS:
                row = sweep(images, method, eta, args.seeds, args.replications, wavelet=args.wavelet, levels=args.levels)
                print(f"{method:>10} {eta:>6.3f}  " + "  ".join(f"{v:7.2f}" for v in row))


if __name__ == "__main__":
    main()

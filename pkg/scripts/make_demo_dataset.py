"""Regenerate the bundled demo dataset (10 labelled CT-like slices plus predicted masks)."""

import argparse
from pathlib import Path

from specaug.textures import make_demo_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "demo")
    parser.add_argument("--n-images", type=int, default=10)
    parser.add_argument("--size", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    manifest = make_demo_dataset(args.out, args.n_images, args.size, seed=args.seed)
    print(f"wrote {manifest}")


if __name__ == "__main__":
    main()

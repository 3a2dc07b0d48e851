"""Procedural test images and a small labelled demo dataset."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy import ndimage

from .image import DISEASED, HEALTHY, OUTSIDE, LabelGrid, save_image, save_labels


def procedural_texture(size: int = 64, seed: int = 0, amplitude: float = 100.0) -> np.ndarray:
    """Zero-mean, broadband texture: smoothed white noise plus two plane waves.

    Energy is spread over many spectral components, so averaged fidelity
    statistics of corrupted copies are stable across seeds.
    """
    rng = np.random.default_rng(seed)
    x = ndimage.gaussian_filter(rng.normal(size=(size, size)), 1.5, mode="wrap")
    x /= x.std()
    i, j = np.mgrid[:size, :size]
    x += 0.8 * np.sin(2 * np.pi * (3 * i + 5 * j) / size)
    x += 0.5 * np.cos(2 * np.pi * (7 * i - 2 * j) / size)
    return amplitude * x


def smooth_image(shape=(64, 64), seed: int = 0) -> np.ndarray:
    """Low-frequency test image in roughly [0, 1000]."""
    rng = np.random.default_rng(seed)
    x = ndimage.gaussian_filter(rng.normal(size=shape), 6.0, mode="reflect")
    x = (x - x.min()) / (np.ptp(x) or 1.0)
    return 1000.0 * x


def _lung_labels(shape, patch_size: int, rng, diseased: bool) -> LabelGrid:
    nr = -(-shape[0] // patch_size)
    nc = -(-shape[1] // patch_size)
    rr, cc = np.mgrid[:nr, :nc]
    # elliptical "lung field" on the patch lattice
    inside = ((rr - (nr - 1) / 2) / (nr / 2)) ** 2 + ((cc - (nc - 1) / 2) / (nc / 2)) ** 2 <= 1.0
    labels = np.where(inside, HEALTHY, OUTSIDE).astype(np.int8)
    if diseased:
        candidates = np.argwhere(inside)
        k = rng.integers(1, max(2, len(candidates) // 3) + 1)
        for r, c in candidates[rng.choice(len(candidates), size=k, replace=False)]:
            labels[r, c] = DISEASED
    return LabelGrid(labels, patch_size)


def _render(labels: LabelGrid, shape, rng) -> np.ndarray:
    # CT-like: air outside, parenchyma inside, denser mottled texture in diseased patches
    img = np.full(shape, -1000.0)
    tex = ndimage.gaussian_filter(rng.normal(size=shape), 1.2)
    tex /= tex.std()
    for (r, c), code in np.ndenumerate(labels.labels):
        rs, cs = labels.patch_slices(r, c, shape)
        if code == HEALTHY:
            img[rs, cs] = -850.0 + 40.0 * tex[rs, cs]
        elif code == DISEASED:
            img[rs, cs] = -300.0 + 150.0 * tex[rs, cs]
    return ndimage.gaussian_filter(img, 0.7)


def _predicted_mask(labels: LabelGrid, shape, rng) -> np.ndarray:
    """A plausible imperfect pixelwise prediction: a few flipped patches and pinholes."""
    mask = np.zeros(shape, dtype=bool)
    for (r, c), code in np.ndenumerate(labels.labels):
        if code == OUTSIDE:
            continue
        hit = code == DISEASED
        if rng.random() < 0.15:
            hit = not hit
        if hit:
            rs, cs = labels.patch_slices(r, c, shape)
            mask[rs, cs] = True
    mask &= rng.random(shape) > 0.03
    return mask


def make_demo_dataset(out_dir, n_images: int = 10, size: int = 100, patch_size: int = 20, seed: int = 0) -> Path:
    """Write images, patch labels, predicted masks and both manifests; return the truth manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    shape = (size, size)
    entries, pred_entries = [], []
    for k in range(n_images):
        image_id = f"img{k:02d}"
        # every third image is disease-free, exercising the diseased-only filter
        labels = _lung_labels(shape, patch_size, rng, diseased=k % 3 != 2)
        img = _render(labels, shape, rng)
        save_image(img, out_dir / f"{image_id}.spa")
        save_labels(labels, out_dir / f"{image_id}.csv")
        save_image(_predicted_mask(labels, shape, rng).astype(np.float64), out_dir / f"{image_id}_pred.pgm")
        entries.append({"image_id": image_id, "image_path": f"{image_id}.spa", "label_path": f"{image_id}.csv"})
        pred_entries.append({"image_id": image_id, "image_path": f"{image_id}_pred.pgm"})
    meta = {"patch_size": patch_size, "window_lo": -1000.0, "window_hi": 400.0}
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({**meta, "entries": entries}, indent=2) + "\n")
    (out_dir / "pred_manifest.json").write_text(json.dumps({**meta, "entries": pred_entries}, indent=2) + "\n")
    return manifest

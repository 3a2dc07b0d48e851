"""Diseased-class evaluation on patch lattices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import DISEASED, HEALTHY, OUTSIDE, LabelGrid, as_mask


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @property
    def f1(self) -> float:
        # no disease present and none predicted counts as a perfect score
        denom = 2 * self.tp + self.fp + self.fn
        return 1.0 if denom == 0 else 2 * self.tp / denom


def _shift_or(padded: np.ndarray, size: int, op) -> np.ndarray:
    n, m = padded.shape[0] - size + 1, padded.shape[1] - size + 1
    out = padded[:n, :m].copy()
    for dr in range(size):
        for dc in range(size):
            op(out, padded[dr : dr + n, dc : dc + m], out=out)
    return out


def dilate(mask, size: int = 5) -> np.ndarray:
    """Binary dilation by a ``size`` x ``size`` square, treating pixels off the mask as 0."""
    mask = as_mask(mask)
    r = size // 2
    return _shift_or(np.pad(mask, r), size, np.logical_or)


def erode(mask, size: int = 5, border: bool = False) -> np.ndarray:
    mask = as_mask(mask)
    r = size // 2
    return _shift_or(np.pad(mask, r, constant_values=border), size, np.logical_and)


def close(mask, size: int = 5) -> np.ndarray:
    """Binary closing on a zero background.

    The mask is embedded in a zero border wide enough that dilation never
    clips, so the result equals closing in the unbounded plane (extensive and
    idempotent).
    """
    mask = as_mask(mask)
    r = size // 2
    padded = np.pad(mask, r)
    return erode(dilate(padded, size), size)[r:-r or None, r:-r or None]


def hole_fill(mask, size: int = 5, method: str = "closing") -> np.ndarray:
    """Fill small holes in a binary prediction.

    ``closing`` uses a ``size`` x ``size`` square of ones; ``flood`` fills
    every background region not connected to the border instead.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError("structuring element size must be a positive odd integer")
    mask = as_mask(mask)
    if method == "closing":
        return close(mask, size)
    if method == "flood":
        return ndimage.binary_fill_holes(mask)
    raise ValueError(f"unknown hole-fill method {method!r}")


def pixels_to_patches(mask, grid: LabelGrid, threshold: float = 0.5) -> LabelGrid:
    """Predicted patch labels: diseased iff at least ``threshold`` of a patch's pixels are set.

    Patches marked ``outside`` in ``grid`` stay ``outside``.
    """
    mask = as_mask(mask)
    grid.check_image_shape(mask.shape)
    out = np.where(grid.labels == OUTSIDE, OUTSIDE, HEALTHY).astype(np.int8)
    nr, nc = grid.shape
    for r in range(nr):
        for c in range(nc):
            if out[r, c] == OUTSIDE:
                continue
            rs, cs = grid.patch_slices(r, c, mask.shape)
            patch = mask[rs, cs]
            if patch.size and patch.mean() >= threshold:
                out[r, c] = DISEASED
    return grid.with_labels(out)


def confusion_counts(pred: LabelGrid, truth: LabelGrid) -> ConfusionCounts:
    """Diseased-vs-rest counts over patches that are in-lung in ``truth``."""
    if pred.shape != truth.shape:
        raise ValueError(f"lattice mismatch: {pred.shape} vs {truth.shape}")
    in_lung = truth.labels != OUTSIDE
    p = (pred.labels == DISEASED) & in_lung
    t = (truth.labels == DISEASED) & in_lung
    return ConfusionCounts(
        tp=int(np.sum(p & t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t & in_lung)),
        tn=int(np.sum(~p & ~t & in_lung)),
    )


def f1_disease(pred: LabelGrid, truth: LabelGrid) -> float:
    return confusion_counts(pred, truth).f1

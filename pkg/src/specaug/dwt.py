"""Multilevel separable 2D DWT with periodic boundary extension.

Each level filters the current approximation band along both axes with an
orthonormal two-channel filter bank and keeps every second sample, giving one
new approximation band plus three detail bands:

* ``H``: lowpass along axis 0, highpass along axis 1
* ``V``: highpass along axis 0, lowpass along axis 1
* ``D``: highpass along both axes

With periodization every level is an orthogonal map, so the total number of
coefficients equals the number of pixels and energy is preserved. An axis of
odd length is padded by repeating its last row/column before analysis; the
inverse crops the padding back off, so reconstruction stays exact.

The filter-bank normalization folds all scaling into the filters. A textbook
definition that adds an explicit global ``1/sqrt(N*M)`` factor differs only by
that constant, which magnitude-proportional corruption is insensitive to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .image import as_image

ORIENTATIONS = ("H", "V", "D")


@dataclass(frozen=True)
class WaveletBasis:
    name: str
    lowpass: np.ndarray

    @property
    def highpass(self) -> np.ndarray:
        # quadrature mirror of the lowpass filter
        h = self.lowpass
        return h[::-1] * np.where(np.arange(h.size) % 2 == 0, 1.0, -1.0)

    # orthonormal bank: synthesis filters equal the analysis filters
    @property
    def synthesis_lowpass(self) -> np.ndarray:
        return self.lowpass

    @property
    def synthesis_highpass(self) -> np.ndarray:
        return self.highpass


_SQRT_HALF = np.sqrt(0.5)

BASES = {
    "haar": WaveletBasis("haar", np.array([_SQRT_HALF, _SQRT_HALF])),
    # Daubechies, 4 vanishing moments (8 taps)
    "db4": WaveletBasis(
        "db4",
        np.array(
            [
                0.2303778133088965,
                0.7148465705529157,
                0.6308807679298589,
                -0.027983769416859858,
                -0.18703481171909309,
                0.030841381835560764,
                0.0328830116668852,
                -0.010597401785069032,
            ]
        ),
    ),
}


def get_basis(basis) -> WaveletBasis:
    if isinstance(basis, WaveletBasis):
        return basis
    try:
        return BASES[basis]
    except KeyError:
        raise ValueError(f"unknown wavelet {basis!r}; choose from {sorted(BASES)}") from None


@dataclass(frozen=True)
class WaveletPyramid:
    """Approximation band plus detail bands ordered coarse to fine.

    ``details[0]`` is the coarsest level, ``details[-1]`` the first (finest)
    level of analysis. Each entry is an ``(H, V, D)`` tuple.
    """

    approx: np.ndarray
    details: list = field(default_factory=list)
    original_shape: tuple[int, int] = (0, 0)
    wavelet: str = "haar"

    @property
    def levels(self) -> int:
        return len(self.details)

    def bands(self):
        """All bands in the canonical traversal order: approx, then coarse to fine, H, V, D."""
        yield self.approx
        for level in self.details:
            yield from level

    def size(self) -> int:
        return sum(b.size for b in self.bands())

    def energy(self) -> float:
        return float(sum(np.sum(b**2) for b in self.bands()))

    def map_bands(self, fn) -> "WaveletPyramid":
        """New pyramid with ``fn`` applied to every band (same traversal order)."""
        return WaveletPyramid(
            fn(self.approx),
            [tuple(fn(b) for b in level) for level in self.details],
            self.original_shape,
            self.wavelet,
        )

    def flatten(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.bands()])

    def unflatten(self, values) -> "WaveletPyramid":
        values = np.asarray(values, dtype=np.float64)
        if values.size != self.size():
            raise ValueError(f"expected {self.size()} values, got {values.size}")
        offset = 0

        def take(band):
            nonlocal offset
            out = values[offset : offset + band.size].reshape(band.shape)
            offset += band.size
            return out

        return self.map_bands(take)


def level_shapes(shape, levels: int) -> list[tuple[int, int]]:
    """Input shape of each analysis level, finest first, then the coarsest band shape."""
    shapes = [tuple(shape)]
    for _ in range(levels):
        r, c = shapes[-1]
        shapes.append((-(-r // 2), -(-c // 2)))
    return shapes


def max_levels(shape) -> int:
    return int(np.floor(np.log2(min(shape)))) if min(shape) >= 1 else 0


def _analyze_axis(x: np.ndarray, basis: WaveletBasis, axis: int):
    x = np.moveaxis(x, axis, 0)
    if x.shape[0] % 2:
        x = np.concatenate([x, x[-1:]], axis=0)
    n = x.shape[0]
    k2 = 2 * np.arange(n // 2)
    lo = np.zeros((n // 2,) + x.shape[1:])
    hi = np.zeros_like(lo)
    for tap, (h, g) in enumerate(zip(basis.lowpass, basis.highpass)):
        rows = x[(k2 + tap) % n]
        lo += h * rows
        hi += g * rows
    return np.moveaxis(lo, 0, axis), np.moveaxis(hi, 0, axis)


def _synthesize_axis(lo: np.ndarray, hi: np.ndarray, basis: WaveletBasis, axis: int, length: int):
    lo = np.moveaxis(lo, axis, 0)
    hi = np.moveaxis(hi, axis, 0)
    n = 2 * lo.shape[0]
    k2 = 2 * np.arange(lo.shape[0])
    out = np.zeros((n,) + lo.shape[1:])
    for tap, (h, g) in enumerate(zip(basis.synthesis_lowpass, basis.synthesis_highpass)):
        # indices (k2 + tap) % n are distinct for a fixed tap, so plain += is safe
        out[(k2 + tap) % n] += h * lo + g * hi
    return np.moveaxis(out[:length], 0, axis)


def dwt2_level(x: np.ndarray, basis) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """One analysis level: ``(approx, (H, V, D))``."""
    basis = get_basis(basis)
    lo0, hi0 = _analyze_axis(x, basis, 0)
    ll, lh = _analyze_axis(lo0, basis, 1)
    hl, hh = _analyze_axis(hi0, basis, 1)
    return ll, (lh, hl, hh)


def idwt2_level(approx, detail, basis, shape) -> np.ndarray:
    basis = get_basis(basis)
    h, v, d = detail
    lo0 = _synthesize_axis(approx, h, basis, 1, shape[1])
    hi0 = _synthesize_axis(v, d, basis, 1, shape[1])
    return _synthesize_axis(lo0, hi0, basis, 0, shape[0])


def dwt2_forward(img, basis="haar", levels: int = 2) -> WaveletPyramid:
    img = as_image(img)
    basis = get_basis(basis)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if 2**levels > min(img.shape):
        raise ValueError(
            f"{levels} levels too deep for a {img.shape[0]}x{img.shape[1]} image "
            f"(at most {max_levels(img.shape)})"
        )
    approx = img
    details = []
    for _ in range(levels):
        approx, detail = dwt2_level(approx, basis)
        details.append(detail)
    return WaveletPyramid(approx, details[::-1], img.shape, basis.name)


def _check_structure(pyr: WaveletPyramid) -> list[tuple[int, int]]:
    if pyr.levels < 1:
        raise ValueError("pyramid has no detail levels")
    shapes = level_shapes(pyr.original_shape, pyr.levels)
    if pyr.approx.shape != shapes[-1]:
        raise ValueError(f"approx band shape {pyr.approx.shape}, expected {shapes[-1]}")
    for i, level in enumerate(pyr.details):
        expected = shapes[-1 - i]
        if len(level) != 3 or any(b.shape != expected for b in level):
            raise ValueError(f"detail level {i} has inconsistent band shapes, expected {expected}")
    return shapes


def dwt2_inverse(pyr: WaveletPyramid, basis=None) -> np.ndarray:
    basis = get_basis(basis if basis is not None else pyr.wavelet)
    shapes = _check_structure(pyr)
    approx = np.asarray(pyr.approx, dtype=np.float64)
    for i, detail in enumerate(pyr.details):
        approx = idwt2_level(approx, detail, basis, shapes[-2 - i])
    return approx

"""Baseline augmenters: replication, gamma intensity, affine and elastic warps.

Geometric augmenters use backward mapping: every output pixel looks up its
source position and samples the input bilinearly. Patch labels follow the same
map, evaluated at each patch's centre pixel and resolved to the nearest source
pixel. Source positions off the image become the image minimum (pixels) or
``outside`` (labels).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .image import OUTSIDE, LabelGrid, as_image, from_unit_range, to_unit_range
from .rng import NoiseDraw

_SUPPORT_TOL = 1e-9


def replicate_simple(img, R: int) -> list[np.ndarray]:
    if R < 1:
        raise ValueError("R must be >= 1")
    img = as_image(img)
    return [img.copy() for _ in range(R)]


def linear_values(R: int, lo: float, hi: float) -> list[float]:
    """R values spaced linearly over ``[lo, hi]`` inclusive; the midpoint when R == 1."""
    if R < 1:
        raise ValueError("R must be >= 1")
    if R == 1:
        return [(lo + hi) / 2.0]
    return [float(v) for v in np.linspace(lo, hi, R)]


def default_window(img) -> tuple[float, float]:
    lo, hi = float(np.min(img)), float(np.max(img))
    return (lo, hi) if hi > lo else (lo, lo + 1.0)


def gamma_transform(img, gamma: float, window=None) -> np.ndarray:
    """Window to [0, 1], raise to ``gamma``, map back to the window."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    img = as_image(img)
    lo, hi = window if window is not None else default_window(img)
    return from_unit_range(to_unit_range(img, lo, hi) ** gamma, lo, hi)


def gamma_augment(img, R: int, gamma_lo: float = 0.8, gamma_hi: float = 1.2, window=None) -> list[np.ndarray]:
    if not 0 < gamma_lo <= gamma_hi:
        raise ValueError(f"invalid gamma range ({gamma_lo}, {gamma_hi})")
    img = as_image(img)
    window = window if window is not None else default_window(img)
    return [gamma_transform(img, g, window) for g in linear_values(R, gamma_lo, gamma_hi)]


def bilinear_sample(img: np.ndarray, rows, cols, fill: float) -> np.ndarray:
    """Sample ``img`` at fractional ``(rows, cols)``; off-image positions get ``fill``."""
    n, m = img.shape
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    inside = (
        (rows >= -_SUPPORT_TOL)
        & (rows <= n - 1 + _SUPPORT_TOL)
        & (cols >= -_SUPPORT_TOL)
        & (cols <= m - 1 + _SUPPORT_TOL)
    )
    r = np.clip(rows, 0, n - 1)
    c = np.clip(cols, 0, m - 1)
    r0 = np.minimum(np.floor(r).astype(np.int64), max(n - 2, 0))
    c0 = np.minimum(np.floor(c).astype(np.int64), max(m - 2, 0))
    r1 = np.minimum(r0 + 1, n - 1)
    c1 = np.minimum(c0 + 1, m - 1)
    fr = r - r0
    fc = c - c0
    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bottom = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    return np.where(inside, top * (1 - fr) + bottom * fr, fill)


def warp_labels(labels: LabelGrid | None, image_shape, source_of) -> LabelGrid | None:
    """Nearest-neighbour label warp; ``source_of(rows, cols)`` gives source pixel positions."""
    if labels is None:
        return None
    labels.check_image_shape(image_shape)
    centre_r, centre_c = labels.patch_centers(image_shape)
    rr, cc = np.meshgrid(centre_r, centre_c, indexing="ij")
    src_r, src_c = source_of(rr, cc)
    src_r = np.rint(src_r).astype(np.int64)
    src_c = np.rint(src_c).astype(np.int64)
    inside = (src_r >= 0) & (src_r < image_shape[0]) & (src_c >= 0) & (src_c < image_shape[1])
    pr, pc = labels.pixel_to_patch(src_r, src_c)
    nr, nc = labels.shape
    inside &= (pr >= 0) & (pr < nr) & (pc >= 0) & (pc < nc)
    out = np.full(labels.shape, OUTSIDE, dtype=np.int8)
    out[inside] = labels.labels[pr[inside], pc[inside]]
    return labels.with_labels(out)


@dataclass(frozen=True)
class AffineParams:
    hflip: bool = False
    vflip: bool = False
    rotation_deg: float = 0.0
    scale: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def sample_affine_params(
    noise: NoiseDraw,
    rotation_max: float = 10.0,
    scale_range=(0.95, 1.05),
    flip_prob: float = 0.5,
) -> AffineParams:
    u = noise.uniforms(4)
    return AffineParams(
        hflip=bool(u[0] < flip_prob),
        vflip=bool(u[1] < flip_prob),
        rotation_deg=float(u[2] * rotation_max),
        scale=float(scale_range[0] + u[3] * (scale_range[1] - scale_range[0])),
    )


def affine_source_map(shape, params: AffineParams):
    """Backward map for ``params``: output pixel -> source position.

    The forward map flips first, then rotates by ``rotation_deg`` and scales
    about the image centre.
    """
    n, m = shape
    cr, cc = (n - 1) / 2.0, (m - 1) / 2.0
    theta = np.deg2rad(params.rotation_deg)
    cos, sin = np.cos(theta), np.sin(theta)

    def source_of(rows, cols):
        dr = np.asarray(rows, dtype=np.float64) - cr
        dc = np.asarray(cols, dtype=np.float64) - cc
        src_r = cr + (cos * dr - sin * dc) / params.scale
        src_c = cc + (sin * dr + cos * dc) / params.scale
        if params.vflip:
            src_r = (n - 1) - src_r
        if params.hflip:
            src_c = (m - 1) - src_c
        return src_r, src_c

    return source_of


def _warp(img: np.ndarray, labels, source_of):
    n, m = img.shape
    rr, cc = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
    src_r, src_c = source_of(rr, cc)
    out = bilinear_sample(img, src_r, src_c, fill=float(img.min()))
    return out, warp_labels(labels, img.shape, source_of)


def affine_transform(img, labels: LabelGrid | None, params: AffineParams):
    img = as_image(img)
    return _warp(img, labels, affine_source_map(img.shape, params))


def affine_augment(
    img,
    labels: LabelGrid | None,
    R: int,
    noise: NoiseDraw,
    rotation_max: float = 10.0,
    scale_range=(0.95, 1.05),
    flip_prob: float = 0.5,
) -> list[tuple[np.ndarray, LabelGrid | None]]:
    """R random flips/rotations/scalings; replication r draws from ``noise`` with replication index r."""
    if R < 1:
        raise ValueError("R must be >= 1")
    out = []
    for r in range(R):
        draw = NoiseDraw(noise.seed, noise.image_index, r, noise.stream)
        params = sample_affine_params(draw, rotation_max, scale_range, flip_prob)
        out.append(affine_transform(img, labels, params))
    return out


@dataclass(frozen=True)
class DisplacementGrid:
    """Coarse displacement vectors, ``vectors[gr, gc] = (d_row, d_col)`` in pixels."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 2 or min(v.shape[:2]) < 2:
            raise ValueError(f"displacement grid must have shape (>=2, >=2, 2), got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.vectors.shape[:2]

    @classmethod
    def zeros(cls, grid=(4, 4)) -> "DisplacementGrid":
        return cls(np.zeros((grid[0], grid[1], 2)))

    @classmethod
    def constant(cls, d_row: float, d_col: float, grid=(4, 4)) -> "DisplacementGrid":
        v = np.empty((grid[0], grid[1], 2))
        v[..., 0] = d_row
        v[..., 1] = d_col
        return cls(v)


def sample_displacement_grid(noise: NoiseDraw, grid=(4, 4), cap: float = 20.0) -> DisplacementGrid:
    """Uniform directions, magnitudes uniform in ``[0, cap]``."""
    g = grid[0] * grid[1]
    u = noise.uniforms(2 * g)
    angle = 2 * np.pi * u[:g]
    mag = cap * u[g:]
    v = np.stack([mag * np.sin(angle), mag * np.cos(angle)], axis=-1)
    return DisplacementGrid(v.reshape(grid[0], grid[1], 2))


def grid_positions(shape, grid_shape) -> tuple[np.ndarray, np.ndarray]:
    return np.linspace(0, shape[0] - 1, grid_shape[0]), np.linspace(0, shape[1] - 1, grid_shape[1])


def check_elastic_size(shape, grid_shape, disp_max: float) -> None:
    spacing = min((shape[0] - 1) / (grid_shape[0] - 1), (shape[1] - 1) / (grid_shape[1] - 1))
    if spacing <= disp_max:
        raise ValueError(
            f"grid spacing {spacing:.2f} px of a {grid_shape[0]}x{grid_shape[1]} grid on a "
            f"{shape[0]}x{shape[1]} image does not exceed the maximum displacement {disp_max}"
        )


def dense_field(grid: DisplacementGrid, shape) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel ``(d_row, d_col)`` by bicubic spline interpolation of the grid.

    The spline passes exactly through the grid vectors; grids with fewer than
    four points along an axis fall back to the highest usable degree.
    """
    gr, gc = grid.grid_shape
    pr, pc = grid_positions(shape, grid.grid_shape)
    kx, ky = min(3, gr - 1), min(3, gc - 1)
    rows, cols = np.arange(shape[0], dtype=np.float64), np.arange(shape[1], dtype=np.float64)
    fields = []
    for comp in range(2):
        spline = RectBivariateSpline(pr, pc, grid.vectors[..., comp], kx=kx, ky=ky, s=0)
        fields.append(spline(rows, cols))
    return fields[0], fields[1]


def elastic_transform(img, labels: LabelGrid | None, grid: DisplacementGrid):
    img = as_image(img)
    d_row, d_col = dense_field(grid, img.shape)

    def source_of(rows, cols):
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        return rows + d_row[rows, cols], cols + d_col[rows, cols]

    return _warp(img, labels, source_of)


def elastic_augment(
    img,
    labels: LabelGrid | None,
    R: int,
    noise: NoiseDraw,
    grid=(4, 4),
    disp_min: float = 1.0,
    disp_max: float = 20.0,
) -> list[tuple[np.ndarray, LabelGrid | None]]:
    """R elastic warps whose displacement cap ramps linearly from ``disp_min`` to ``disp_max``."""
    img = as_image(img)
    if not 0 <= disp_min <= disp_max:
        raise ValueError(f"invalid displacement range ({disp_min}, {disp_max})")
    check_elastic_size(img.shape, grid, disp_max)
    out = []
    for r, cap in enumerate(linear_values(R, disp_min, disp_max)):
        draw = NoiseDraw(noise.seed, noise.image_index, r, noise.stream)
        out.append(elastic_transform(img, labels, sample_displacement_grid(draw, grid, cap)))
    return out

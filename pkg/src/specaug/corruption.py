"""Spectral synthesis of augmented images.

An image is decomposed into DCT components or a wavelet pyramid, every
component ``c`` is perturbed by Gaussian noise with standard deviation
``rho * |c|``, and the result is transformed back. ``rho`` walks linearly up to
the maximum noise fraction ``eta`` over the ``R`` replications.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .dct import dct2_forward, dct2_inverse
from .dwt import WaveletPyramid, dwt2_forward, dwt2_inverse, get_basis
from .image import as_image
from .rng import NoiseDraw

METHODS = ("dct", "dwt", "simple", "affine", "intensity", "elastic")
SPECTRAL_METHODS = ("dct", "dwt")


@dataclass(frozen=True)
class AugmentSpec:
    """One augmentation stage.

    ``replications`` and ``eta`` follow the spectral methods' conventions;
    the remaining fields are per-method parameters with the defaults used in
    the experiments (R=5, 4x4 elastic grid with 1..20 px displacements,
    gamma 0.8..1.2, rotations up to 10 degrees).
    """

    method: str
    replications: int = 5
    eta: float = 0.0
    seed: int = 0
    wavelet: str = "haar"
    levels: int = 2
    details_only: bool = False
    gamma_range: tuple[float, float] = (0.8, 1.2)
    window: tuple[float, float] | None = None
    rotation_max: float = 10.0
    scale_range: tuple[float, float] = (0.95, 1.05)
    flip_prob: float = 0.5
    grid: tuple[int, int] = (4, 4)
    disp_range: tuple[float, float] = (1.0, 20.0)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        get_basis(self.wavelet)
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        lo, hi = self.gamma_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid gamma range {self.gamma_range}")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise ValueError(f"invalid window {self.window}")
        if self.rotation_max < 0:
            raise ValueError("rotation_max must be non-negative")
        if not 0 < self.scale_range[0] <= self.scale_range[1]:
            raise ValueError(f"invalid scale range {self.scale_range}")
        if not 0 <= self.flip_prob <= 1:
            raise ValueError("flip_prob must lie in [0, 1]")
        if min(self.grid) < 2:
            raise ValueError("elastic grid needs at least 2 points per axis")
        if not 0 <= self.disp_range[0] <= self.disp_range[1]:
            raise ValueError(f"invalid displacement range {self.disp_range}")
        # normalise tuples so that specs read back from JSON compare equal
        for name in ("gamma_range", "scale_range", "grid", "disp_range", "window"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(value))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentSpec":
        return cls(**data)


def rho_schedule(R: int, eta: float) -> list[float]:
    """``[eta*1/R, eta*2/R, ..., eta]``.

    Each value is computed exactly from the decimal form of ``eta`` and
    rounded once, so e.g. ``rho_schedule(3, 0.3) == [0.1, 0.2, 0.3]``.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    if eta < 0:
        raise ValueError("eta must be non-negative")
    top = Fraction(repr(float(eta)))
    return [float(top * r / R) for r in range(1, R + 1)]


def _corrupt_values(values: np.ndarray, rho: float, noise: NoiseDraw) -> np.ndarray:
    if rho < 0:
        raise ValueError("rho must be non-negative")
    z = noise.normals(values.size).reshape(values.shape)
    return values + rho * np.abs(values) * z


def corrupt_dct(comps, rho: float, noise: NoiseDraw) -> np.ndarray:
    """Add N(0, (rho*|F|)^2) noise to every component, in row-major draw order."""
    comps = as_image(comps, "DCT components")
    return _corrupt_values(comps, rho, noise)


def corrupt_dwt(pyr: WaveletPyramid, rho: float, noise: NoiseDraw, details_only: bool = False) -> WaveletPyramid:
    """Corrupt every coefficient of ``pyr`` in proportion to its magnitude.

    Draws follow :meth:`WaveletPyramid.bands` order. With ``details_only``
    the approximation band keeps its values but still consumes its draws, so
    detail-band noise is identical either way.
    """
    flat = pyr.flatten()
    out = _corrupt_values(flat, rho, noise)
    if details_only:
        n_approx = pyr.approx.size
        out[:n_approx] = flat[:n_approx]
    return pyr.unflatten(out)


def synthesize_one(img, spec: AugmentSpec, image_index: int, r: int, stream: int = 0) -> np.ndarray:
    """Replication ``r`` (0-based) of :func:`synthesize`."""
    if spec.method not in SPECTRAL_METHODS:
        raise ValueError(f"synthesize handles dct/dwt, not {spec.method!r}")
    img = as_image(img)
    rho = rho_schedule(spec.replications, spec.eta)[r]
    noise = NoiseDraw(spec.seed, image_index, r, stream)
    if spec.method == "dct":
        return dct2_inverse(corrupt_dct(dct2_forward(img), rho, noise))
    pyr = dwt2_forward(img, spec.wavelet, spec.levels)
    return dwt2_inverse(corrupt_dwt(pyr, rho, noise, spec.details_only), spec.wavelet)


def synthesize(img, spec: AugmentSpec, image_index: int = 0, stream: int = 0) -> list[np.ndarray]:
    """R synthetic images, one per value of the noise schedule, in schedule order."""
    img = as_image(img)
    if spec.method == "dwt" and 2**spec.levels > min(img.shape):
        raise ValueError(f"{spec.levels} wavelet levels too deep for a {img.shape[0]}x{img.shape[1]} image")
    return [synthesize_one(img, spec, image_index, r, stream) for r in range(spec.replications)]


def psnr(reference, test, data_range: float | None = None) -> float:
    """Peak signal-to-noise ratio in dB; peak defaults to the reference's value range."""
    reference = as_image(reference, "reference")
    test = as_image(test, "test")
    if data_range is None:
        data_range = float(reference.max() - reference.min()) or 1.0
    mse = float(np.mean((reference - test) ** 2))
    if mse == 0:
        return float("inf")
    return 10.0 * np.log10(data_range**2 / mse)

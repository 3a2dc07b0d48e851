"""Spectral (DCT/DWT) data augmentation with baseline augmenters and patch-level evaluation."""

from .baselines import (
    AffineParams,
    DisplacementGrid,
    affine_augment,
    affine_transform,
    elastic_augment,
    elastic_transform,
    gamma_augment,
    gamma_transform,
    replicate_simple,
)
from .corruption import AugmentSpec, corrupt_dct, corrupt_dwt, psnr, rho_schedule, synthesize
from .dct import dct2_forward, dct2_inverse
from .dwt import WaveletPyramid, dwt2_forward, dwt2_inverse
from .image import LabelGrid, load_image, load_labels, save_image, save_labels, to_unit_range
from .metrics import ConfusionCounts, confusion_counts, f1_disease, hole_fill, pixels_to_patches
from .pipeline import Manifest, PolicyConfig, replay_output, run_augment, run_eval
from .rng import NoiseDraw

__version__ = "0.1.0"

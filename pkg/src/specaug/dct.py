"""Orthonormal 2D DCT (type II forward, type III inverse).

The forward transform is

    F(u, v) = sqrt(2/N) sqrt(2/M) nu(u) nu(v)
              * sum_i sum_j cos(pi u (2i+1) / 2N) cos(pi v (2j+1) / 2M) f(i, j)

with nu(0) = 1/sqrt(2) and nu(k) = 1 otherwise. It is evaluated separably as
``C_N @ f @ C_M.T`` where ``C_K`` is the K-point orthonormal DCT-II matrix, so
the inverse is simply ``C_N.T @ F @ C_M``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .image import as_image


@lru_cache(maxsize=64)
def dct_matrix(n: int) -> np.ndarray:
    """K-point orthonormal DCT-II matrix, rows indexed by frequency."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * k * (2 * i + 1) / (2 * n))
    mat[0, :] /= np.sqrt(2.0)
    mat.setflags(write=False)
    return mat


def dct2_forward(img) -> np.ndarray:
    """DCT components of ``img``; same shape as the input."""
    img = as_image(img)
    n, m = img.shape
    return dct_matrix(n) @ img @ dct_matrix(m).T


def dct2_inverse(comps) -> np.ndarray:
    comps = as_image(comps, "DCT components")
    n, m = comps.shape
    return dct_matrix(n).T @ comps @ dct_matrix(m)

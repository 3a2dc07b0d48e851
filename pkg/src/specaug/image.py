"""Image and label containers, on-disk formats and intensity windowing.

Images are plain 2D ``float64`` numpy arrays, validated at API boundaries by
:func:`as_image`. Two file formats are supported:

* ``rawf64``: magic ``b"SPA1"``, two little-endian ``uint32`` dims (rows, cols),
  then rows*cols little-endian float64 values in row-major order. Lossless.
* ``pgm16``: binary P5 PGM with maxval 65535 and big-endian samples. Values are
  rounded half-to-even and clamped to [0, 65535] on write.

Patch labels are stored as CSV with header ``row,col,label`` and labels
``healthy``, ``diseased`` or ``outside``.
"""

from __future__ import annotations

import csv
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RAW_MAGIC = b"SPA1"
PGM_MAXVAL = 65535

HEALTHY = 0
DISEASED = 1
OUTSIDE = 2
LABEL_NAMES = {HEALTHY: "healthy", DISEASED: "diseased", OUTSIDE: "outside"}
LABEL_CODES = {name: code for code, name in LABEL_NAMES.items()}


class FormatError(ValueError):
    """A file does not parse under its declared format."""


def as_image(arr, name: str = "image") -> np.ndarray:
    """Return ``arr`` as a finite, non-empty 2D float64 array."""
    img = np.asarray(arr, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name} contains non-finite values")
    return img


def as_mask(arr, shape: tuple[int, int] | None = None) -> np.ndarray:
    mask = np.asarray(arr)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2D, got shape {mask.shape}")
    if shape is not None and mask.shape != tuple(shape):
        raise ValueError(f"mask shape {mask.shape} does not match {tuple(shape)}")
    return mask.astype(bool)


@dataclass(frozen=True)
class LabelGrid:
    """Per-patch labels on a regular lattice.

    ``labels[r, c]`` covers image rows ``origin[0] + r*patch_size`` up to the
    next patch (clipped to the image), and likewise for columns.
    """

    labels: np.ndarray
    patch_size: int = 20
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError(f"label lattice must be a non-empty 2D grid, got {labels.shape}")
        if not np.isin(labels, list(LABEL_NAMES)).all():
            raise ValueError("labels must be healthy, diseased or outside")
        if self.patch_size < 1:
            raise ValueError("patch_size must be positive")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @staticmethod
    def lattice_shape(image_shape, patch_size: int, origin=(0, 0)) -> tuple[int, int]:
        rows = -(-(image_shape[0] - origin[0]) // patch_size)
        cols = -(-(image_shape[1] - origin[1]) // patch_size)
        return rows, cols

    def check_image_shape(self, image_shape) -> None:
        expected = self.lattice_shape(image_shape, self.patch_size, self.origin)
        if self.shape != expected:
            raise ValueError(
                f"label lattice {self.shape} does not cover image {tuple(image_shape)} "
                f"with patch_size {self.patch_size} (expected {expected})"
            )

    def patch_slices(self, r: int, c: int, image_shape) -> tuple[slice, slice]:
        r0 = self.origin[0] + r * self.patch_size
        c0 = self.origin[1] + c * self.patch_size
        return (
            slice(max(r0, 0), min(r0 + self.patch_size, image_shape[0])),
            slice(max(c0, 0), min(c0 + self.patch_size, image_shape[1])),
        )

    def patch_centers(self, image_shape) -> tuple[np.ndarray, np.ndarray]:
        """Integer pixel coordinates of each patch's centre, clipped to the image."""
        nr, nc = self.shape
        rows = np.empty(nr, dtype=np.int64)
        cols = np.empty(nc, dtype=np.int64)
        for r in range(nr):
            sl = self.patch_slices(r, 0, image_shape)[0]
            rows[r] = sl.start + (sl.stop - sl.start - 1) // 2
        for c in range(nc):
            sl = self.patch_slices(0, c, image_shape)[1]
            cols[c] = sl.start + (sl.stop - sl.start - 1) // 2
        return rows, cols

    def pixel_to_patch(self, rows, cols):
        """Map integer pixel coordinates to lattice indices (may fall outside the lattice)."""
        pr = np.floor_divide(np.asarray(rows) - self.origin[0], self.patch_size)
        pc = np.floor_divide(np.asarray(cols) - self.origin[1], self.patch_size)
        return pr, pc

    def has_disease(self) -> bool:
        return bool((self.labels == DISEASED).any())

    def with_labels(self, labels) -> "LabelGrid":
        return LabelGrid(labels, self.patch_size, self.origin)

    def __eq__(self, other):
        if not isinstance(other, LabelGrid):
            return NotImplemented
        return (
            self.patch_size == other.patch_size
            and self.origin == other.origin
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


def infer_format(path) -> str:
    return "pgm16" if Path(path).suffix.lower() in (".pgm", ".pnm") else "rawf64"


def load_image(path, format: str | None = None) -> np.ndarray:
    """Read an image, converting samples to float64 without rescaling."""
    format = format or infer_format(path)
    data = Path(path).read_bytes()
    if format == "rawf64":
        return _decode_rawf64(data)
    if format == "pgm16":
        return _decode_pgm(data)
    raise ValueError(f"unknown image format {format!r}")


def save_image(img, path, format: str | None = None) -> None:
    img = as_image(img)
    format = format or infer_format(path)
    if format == "rawf64":
        payload = _encode_rawf64(img)
    elif format == "pgm16":
        payload = _encode_pgm16(img)
    else:
        raise ValueError(f"unknown image format {format!r}")
    Path(path).write_bytes(payload)


def _encode_rawf64(img: np.ndarray) -> bytes:
    header = RAW_MAGIC + struct.pack("<II", *img.shape)
    return header + np.ascontiguousarray(img, dtype="<f8").tobytes()


def _decode_rawf64(data: bytes) -> np.ndarray:
    if len(data) < 12 or data[:4] != RAW_MAGIC:
        raise FormatError("missing SPA1 header")
    rows, cols = struct.unpack("<II", data[4:12])
    payload = data[12:]
    if rows < 1 or cols < 1:
        raise FormatError(f"invalid dimensions {rows}x{cols}")
    if len(payload) != 8 * rows * cols:
        raise FormatError(
            f"size mismatch: header {rows}x{cols} needs {8 * rows * cols} bytes, got {len(payload)}"
        )
    img = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(img)):
        raise FormatError("non-finite values in rawf64 payload")
    return img


def _encode_pgm16(img: np.ndarray) -> bytes:
    # np.rint rounds half to even
    q = np.clip(np.rint(img), 0, PGM_MAXVAL).astype(">u2")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + q.tobytes()


_PGM_TOKEN = re.compile(rb"(?:\s+|#[^\n]*\n?)*([0-9]+)")


def _decode_pgm(data: bytes) -> np.ndarray:
    if data[:2] != b"P5":
        raise FormatError("not a binary (P5) PGM file")
    pos = 2
    values = []
    for _ in range(3):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("malformed PGM header")
        values.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = values
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("malformed PGM header")
    pos += 1
    if width < 1 or height < 1 or not 0 < maxval <= PGM_MAXVAL:
        raise FormatError(f"invalid PGM header values {values}")
    dtype = ">u2" if maxval > 255 else "u1"
    nbytes = width * height * np.dtype(dtype).itemsize
    payload = data[pos:]
    if len(payload) != nbytes:
        raise FormatError(f"size mismatch: expected {nbytes} payload bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=dtype).astype(np.float64).reshape(height, width)


def to_unit_range(img, window_lo: float, window_hi: float) -> np.ndarray:
    """Linearly map ``[window_lo, window_hi]`` onto ``[0, 1]``, clamping outside values."""
    if not window_lo < window_hi:
        raise ValueError(f"window_lo ({window_lo}) must be below window_hi ({window_hi})")
    img = as_image(img)
    return np.clip((img - window_lo) / (window_hi - window_lo), 0.0, 1.0)


def from_unit_range(img, window_lo: float, window_hi: float) -> np.ndarray:
    if not window_lo < window_hi:
        raise ValueError(f"window_lo ({window_lo}) must be below window_hi ({window_hi})")
    return window_lo + np.asarray(img, dtype=np.float64) * (window_hi - window_lo)


def load_labels(path, patch_size: int = 20, origin=(0, 0)) -> LabelGrid:
    entries = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["row", "col", "label"]:
            raise FormatError(f"{path}: expected header row,col,label, got {reader.fieldnames}")
        for line in reader:
            try:
                key = (int(line["row"]), int(line["col"]))
                code = LABEL_CODES[line["label"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}: bad label line {line}") from exc
            if key in entries:
                raise FormatError(f"{path}: duplicate entry for patch {key}")
            entries[key] = code
    if not entries:
        raise FormatError(f"{path}: no label entries")
    nr = max(r for r, _ in entries) + 1
    nc = max(c for _, c in entries) + 1
    if len(entries) != nr * nc or min(min(k) for k in entries) < 0:
        raise FormatError(f"{path}: label lattice is incomplete")
    labels = np.empty((nr, nc), dtype=np.int8)
    for (r, c), code in entries.items():
        labels[r, c] = code
    return LabelGrid(labels, patch_size, origin)


def save_labels(grid: LabelGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "label"])
        for (r, c), code in np.ndenumerate(grid.labels):
            writer.writerow([r, c, LABEL_NAMES[int(code)]])

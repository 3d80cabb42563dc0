#  Copyright 2026 detpatch developers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from pathlib import Path

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
from PIL import Image

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ContractViolation, LossyFormatError

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "LOSSLESS_SUFFIXES",
    "IMAGE_SUFFIXES",
    "load_image",
    "save_image_lossless",
    "dump_heatmap",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

LOSSLESS_SUFFIXES = frozenset({".png", ".bmp", ".tif", ".tiff"})

# inputs may be lossy; outputs never are
IMAGE_SUFFIXES = LOSSLESS_SUFFIXES | {".jpg", ".jpeg", ".ppm"}


def _check_lossless(path: Path):
    if path.suffix.lower() not in LOSSLESS_SUFFIXES:
        raise LossyFormatError(
            f"{path}: refusing to write {path.suffix or 'an unknown format'}, "
            f"use one of {', '.join(sorted(LOSSLESS_SUFFIXES))}"
        )


def load_image(path: Path) -> np.ndarray:
    """
    Reads a raster file as an H x W x 3 float64 array on the 0..255 scale.
    Grayscale and alpha images are converted to RGB.

    Raises
    ------
    OSError
        When the file is missing or cannot be decoded (PIL.UnidentifiedImageError
        is an OSError).
    """
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64)


def save_image_lossless(image: np.ndarray, path: Path):
    """
    Writes an H x W x 3 image with integral values in [0, 255] to a lossless
    format, so that `load_image` returns it bit-exactly.

    Raises
    ------
    LossyFormatError
        When the extension names a lossy format.

    ContractViolation
        When the image is not H x W x 3, or has values that are out of range or
        not integral.
    """
    path = Path(path)
    _check_lossless(path)

    pixels = np.asarray(image, dtype=np.float64)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ContractViolation(f"{path}: expected an H x W x 3 image, got {pixels.shape}")
    if pixels.min(initial=0.0) < 0 or pixels.max(initial=0.0) > 255:
        raise ContractViolation(f"{path}: pixel values outside [0, 255]")
    if not np.array_equal(pixels, np.rint(pixels)):
        raise ContractViolation(f"{path}: pixel values must be integral to save losslessly")

    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels.astype(np.uint8)).save(path)


def dump_heatmap(values: np.ndarray, path: Path):
    """
    Writes a heatmap as an 8-bit grayscale image, scaled linearly so that the
    minimum maps to 0 and the maximum to 255.  A constant map is written as
    uniform 128.

    Raises
    ------
    ContractViolation
        When the map is not finite.
    """
    path = Path(path)
    _check_lossless(path)

    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise ContractViolation(f"{path}: heatmap has non-finite values")

    low, high = values.min(), values.max()
    if high > low:
        gray = np.rint((values - low) / (high - low) * 255.0)
    else:
        gray = np.full(values.shape, 128.0)

    path.parent.mkdir(parents=True, exist_ok=True)
    # a 2-D uint8 array is written as mode "L"
    Image.fromarray(gray.astype(np.uint8)).save(path)

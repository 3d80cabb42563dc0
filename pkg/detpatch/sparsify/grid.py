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

from dataclasses import dataclass
import math

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError
from ..masks import PatchMask

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["BAYER_4X4", "GridPattern", "grid_mask", "inflate_scale"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

# ordered-dither threshold matrix, values 0..15
BAYER_4X4 = np.array(
    [
        [0, 8, 2, 10],
        [12, 4, 14, 6],
        [3, 11, 1, 9],
        [15, 7, 13, 5],
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class GridPattern:
    """
    Grid that keeps pixel (i, j) iff BAYER_4X4[i % 4][j % 4] >= 16 * ratio.
    A larger ratio keeps fewer pixels; the kept density is quantized to
    sixteenths.
    """

    ratio: float

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ConfigurationError(f"grid ratio {self.ratio} outside [0, 1]")

    @property
    def tile(self) -> np.ndarray:
        return BAYER_4X4 >= 16 * self.ratio

    @property
    def density(self) -> float:
        return float(self.tile.sum()) / 16

    def keep(self, shape: tuple[int, int]) -> np.ndarray:
        """the boolean keep-grid over an image, anchored at pixel (0, 0)"""
        height, width = shape
        reps = (-(-height // 4), -(-width // 4))
        return np.tile(self.tile, reps)[:height, :width]


def grid_mask(mask: PatchMask, ratio: float) -> PatchMask:
    """
    Intersects the mask with the grid of the given ratio.  The patches are
    kept and the result is flagged as sparsified.
    """
    pattern = GridPattern(ratio)
    return mask.with_bitmap(mask.bitmap & pattern.keep(mask.shape), sparsified=True)


def inflate_scale(scale: int, ratio: float, limit: int) -> int:
    """
    Enlarges a patch side by 1 / sqrt(1 - ratio) so that the gridded patch
    covers a larger area; the result is capped at `limit`.
    """
    if ratio >= 1.0:
        return limit
    return min(math.ceil(scale / math.sqrt(1.0 - ratio)), limit)

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

# =============================================================================
# Patch masks and the one window selection rule used everywhere: greedy
# selection of non-overlapping square windows by window sum, computed from an
# integral image, with ties broken in raster order (smaller row, then smaller
# column).
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from dataclasses import dataclass, field, replace
from typing import Sequence

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .errors import ConfigurationError, ContractViolation

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "PatchWindow",
    "PatchMask",
    "integral_image",
    "window_sums",
    "greedy_windows",
    "rasterize_windows",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class PatchWindow:
    """a square window with its top-left corner at (row, col)"""

    row: int
    col: int
    scale: int
    weight: float = 0.0

    def overlaps(self, other: "PatchWindow") -> bool:
        return (
            self.row < other.row + other.scale
            and other.row < self.row + self.scale
            and self.col < other.col + other.scale
            and other.col < self.col + self.scale
        )

    def inside(self, shape: tuple[int, int]) -> bool:
        return (
            self.row >= 0
            and self.col >= 0
            and self.row + self.scale <= shape[0]
            and self.col + self.scale <= shape[1]
        )


@dataclass
class PatchMask:
    """
    Binary H x W mask assembled from square patches.

    Attributes
    ----------
    bitmap: np.ndarray
        Boolean H x W array.  Before grid sparsification it is exactly the
        union of the patches; afterwards it is a subset of that union.

    patches: list
        The PatchWindow squares the mask was built from.

    sparsified: bool
        True once a grid pattern has been applied.

    shortfall: int
        How many requested windows could not be placed.
    """

    bitmap: np.ndarray
    patches: list[PatchWindow] = field(default_factory=list)
    sparsified: bool = False
    shortfall: int = 0

    def __post_init__(self):
        self.bitmap = np.asarray(self.bitmap, dtype=bool)
        for patch in self.patches:
            if not patch.inside(self.bitmap.shape):
                raise ContractViolation(
                    f"Patch {patch} lies outside the {self.bitmap.shape} mask"
                )

    @classmethod
    def from_windows(
        cls, shape: tuple[int, int], windows: Sequence[PatchWindow], shortfall: int = 0
    ) -> "PatchMask":
        bitmap = np.zeros(shape, dtype=bool)
        for win in windows:
            bitmap[win.row : win.row + win.scale, win.col : win.col + win.scale] = True
        return cls(bitmap=bitmap, patches=list(windows), shortfall=shortfall)

    @property
    def shape(self) -> tuple[int, int]:
        return self.bitmap.shape

    @property
    def popcount(self) -> int:
        return int(self.bitmap.sum())

    @property
    def is_empty(self) -> bool:
        return not self.bitmap.any()

    def with_bitmap(self, bitmap: np.ndarray, sparsified: bool = True) -> "PatchMask":
        return replace(self, bitmap=np.asarray(bitmap, dtype=bool), sparsified=sparsified)


def integral_image(values: np.ndarray) -> np.ndarray:
    """(H+1) x (W+1) summed-area table with a zero first row and column"""
    table = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=np.float64)
    table[1:, 1:] = np.cumsum(np.cumsum(values, axis=0, dtype=np.float64), axis=1)
    return table


def window_sums(values: np.ndarray, scale: int) -> np.ndarray:
    """
    Sum of every scale x scale window; entry (r, c) is the window whose top-left
    corner is at (r, c).

    Raises
    ------
    ConfigurationError
        When the map is smaller than the window.
    """
    height, width = values.shape
    if scale < 1 or scale > min(height, width):
        raise ConfigurationError(
            f"window scale {scale} does not fit a {height}x{width} map"
        )

    table = integral_image(values)
    return (
        table[scale:, scale:]
        - table[:-scale, scale:]
        - table[scale:, :-scale]
        + table[:-scale, :-scale]
    )


def greedy_windows(
    values: np.ndarray, n: int, scale: int
) -> tuple[list[PatchWindow], int]:
    """
    Selects up to n non-overlapping scale x scale windows with the largest
    window sums.  Each step takes the best window that does not overlap an
    earlier pick; ties go to the window that comes first in raster order.

    Returns
    -------
    The selected windows (weight = window sum) in selection order, and the
    shortfall: how many of the n windows could not be placed.
    """
    if n < 0:
        raise ConfigurationError(f"window count must be >= 0, got {n}")

    sums = window_sums(np.asarray(values, dtype=np.float64), scale)
    available = np.ones(sums.shape, dtype=bool)
    picked: list[PatchWindow] = list()

    for _ in range(n):
        if not available.any():
            break

        # argmax returns the first maximum of the flattened array: raster order
        index = int(np.argmax(np.where(available, sums, -np.inf)))
        row, col = divmod(index, sums.shape[1])
        picked.append(PatchWindow(row, col, scale, float(sums[row, col])))

        available[
            max(row - scale + 1, 0) : row + scale, max(col - scale + 1, 0) : col + scale
        ] = False

    return picked, n - len(picked)


def rasterize_windows(
    shape: tuple[int, int], windows: Sequence[PatchWindow]
) -> np.ndarray:
    """adds each window's weight over the pixels it covers"""
    canvas = np.zeros(shape, dtype=np.float64)
    for win in windows:
        canvas[win.row : win.row + win.scale, win.col : win.col + win.scale] += win.weight
    return canvas

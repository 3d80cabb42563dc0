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

from dataclasses import dataclass, field, replace
from typing import Sequence, Union

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError, ContractViolation
from ..masks import PatchMask, PatchWindow, greedy_windows, rasterize_windows
from .l2_attack import Perturbation

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "PatchCandidateMap",
    "extract_top_patches",
    "normalize_candidates",
    "vote_map",
    "vote",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@dataclass
class PatchCandidateMap:
    """
    The sparsified evidence of one model.

    Attributes
    ----------
    magnitudes: np.ndarray
        H x W per-pixel perturbation strength.

    windows: list
        Pairwise non-overlapping PatchWindows; weight is the window's
        magnitude sum, or its share of the maximum after normalization.

    shortfall: int
        Requested windows that did not fit.

    degenerate: bool
        Set by `normalize_candidates` when every weight is zero.
    """

    magnitudes: np.ndarray
    windows: list[PatchWindow] = field(default_factory=list)
    shortfall: int = 0
    degenerate: bool = False

    def __post_init__(self):
        for index, win in enumerate(self.windows):
            if win.weight < 0:
                raise ContractViolation(f"window {win} has a negative weight")
            if not win.inside(self.magnitudes.shape):
                raise ContractViolation(f"window {win} lies outside the image")
            if any(win.overlaps(other) for other in self.windows[index + 1 :]):
                raise ContractViolation(f"window {win} overlaps another window")

    @property
    def shape(self) -> tuple[int, int]:
        return self.magnitudes.shape


def extract_top_patches(
    perturbation: Union[Perturbation, np.ndarray], n: int, scale: int
) -> PatchCandidateMap:
    """
    Sparsifies a perturbation into its n strongest scale x scale windows.

    The per-pixel magnitude is the L2 norm over the channels (an H x W array is
    taken as magnitudes directly); windows are chosen greedily by magnitude sum
    with the raster tie-break of `greedy_windows`.

    Raises
    ------
    ConfigurationError
        When n or scale is below 1, or the image is smaller than the window.
    """
    if n < 1 or scale < 1:
        raise ConfigurationError(f"n and scale must be >= 1, got n={n}, scale={scale}")

    if isinstance(perturbation, Perturbation):
        magnitudes = perturbation.magnitudes
    else:
        values = np.asarray(perturbation, dtype=np.float64)
        magnitudes = np.linalg.norm(values, axis=2) if values.ndim == 3 else values

    windows, shortfall = greedy_windows(magnitudes, n, scale)
    return PatchCandidateMap(magnitudes=magnitudes, windows=windows, shortfall=shortfall)


def normalize_candidates(candidates: PatchCandidateMap) -> PatchCandidateMap:
    """
    Divides every window weight by the largest one.  When all weights are zero
    the map is returned unchanged with `degenerate` set.
    """
    peak = max((win.weight for win in candidates.windows), default=0.0)
    if peak <= 0:
        return replace(candidates, degenerate=True)

    return replace(
        candidates,
        windows=[replace(win, weight=win.weight / peak) for win in candidates.windows],
        degenerate=False,
    )


def vote_map(per_model: Sequence[PatchCandidateMap]) -> np.ndarray:
    """
    Rasterizes each model's windows (weight added over the window pixels) and
    sums the maps over the models.

    Raises
    ------
    ConfigurationError
        When the list is empty.

    ContractViolation
        When the candidate maps differ in image size.
    """
    if not per_model:
        raise ConfigurationError("vote requires at least one model's candidates")

    shape = per_model[0].shape
    if any(cand.shape != shape for cand in per_model):
        raise ContractViolation("vote: candidate maps differ in image size")

    rasters = np.stack([rasterize_windows(shape, cand.windows) for cand in per_model])

    # sorted accumulation keeps the sum independent of the model order
    return np.sort(rasters, axis=0).sum(axis=0)


def vote(per_model: Sequence[PatchCandidateMap], n: int, scale: int) -> PatchMask:
    """selects the top n windows of the summed per-model candidate maps"""
    summed = vote_map(per_model)
    windows, shortfall = greedy_windows(summed, n, scale)
    return PatchMask.from_windows(summed.shape, windows, shortfall)

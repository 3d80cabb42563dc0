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

from typing import Sequence
import logging

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..detpatch_config import HeatmapConfig
from ..detector.detector_api import DetectorModel, ImageTensor
from ..errors import ConfigurationError
from ..masks import PatchMask, greedy_windows
from ..mask_method import Placement, build_patch_mask
from .gradcam import combined_heatmap, fuse_heatmaps
from .smoothing import smooth_heatmap

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["select_patches_from_heatmap", "heatmap_mask"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)


def select_patches_from_heatmap(values: np.ndarray, n: int, scale: int) -> PatchMask:
    """
    Returns the union of the n non-overlapping scale x scale windows with the
    largest heatmap sums.  When fewer than n windows fit, the mask holds the
    ones that do and `PatchMask.shortfall` counts the rest.
    """
    windows, shortfall = greedy_windows(values, n, scale)
    if shortfall:
        log.debug("only %d of %d windows of scale %d fit", len(windows), n, scale)
    return PatchMask.from_windows(np.shape(values), windows, shortfall)


@build_patch_mask.register
def heatmap_mask(
    config: HeatmapConfig, models: Sequence[DetectorModel], image: ImageTensor
) -> Placement:
    """
    The heatmap placement pipeline: combined heatmap per model, cross-model
    fusion, Gaussian smoothing, then greedy window selection.
    """
    if not models:
        raise ConfigurationError("heatmap placement requires at least one detector")

    maps = [
        combined_heatmap(model, image, layers=config.layers, threshold=config.threshold)
        for model in models
    ]
    fused = fuse_heatmaps(maps)
    degenerate = not (fused > 0).any()
    if degenerate:
        log.info("no detector found anything to place patches on")

    fused = smooth_heatmap(fused, config.smoothing_sigma)
    return Placement(
        mask=select_patches_from_heatmap(fused, config.n, config.scale),
        evidence=fused,
        degenerate=degenerate,
    )

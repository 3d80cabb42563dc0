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
# This file contains the mask-building dispatcher.  Each placement method
# module wires its pipeline into `build_patch_mask` by registering a function
# for its configuration model, so the harness can build a mask from whichever
# method configuration it holds.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from dataclasses import dataclass
from functools import singledispatch
from typing import Sequence

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .errors import ConfigurationError
from .masks import PatchMask
from .detector.detector_api import DetectorModel, ImageTensor

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["Placement", "build_patch_mask"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@dataclass
class Placement:
    """
    The outcome of a placement method.

    Attributes
    ----------
    mask: PatchMask
        The selected patch mask.

    evidence: np.ndarray
        The H x W map the windows were selected from: the smoothed fused
        heatmap, or the voted candidate map.

    degenerate: bool
        True when the method had no signal to work with, for example no model
        detected anything on the clean image.
    """

    mask: PatchMask
    evidence: np.ndarray
    degenerate: bool = False


@singledispatch
def build_patch_mask(
    method_config, models: Sequence[DetectorModel], image: ImageTensor
) -> Placement:
    """
    Builds the patch mask for one image with the placement method that
    `method_config` configures.  This function *MUST* exist so that the
    placement methods can be "wired into" it using the dispatch register
    mechanism; it is only called for unsupported configuration types.

    Raises
    ------
    ConfigurationError
        When no placement method is registered for the configuration type.
    """
    raise ConfigurationError(
        f"No placement method for configuration {type(method_config).__name__}"
    )

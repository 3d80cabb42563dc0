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

import math

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
from scipy.ndimage import correlate1d

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["gaussian_kernel", "smooth_heatmap"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


def gaussian_kernel(sigma: float) -> np.ndarray:
    """normalized 1-D Gaussian truncated at a half-width of ceil(2 sigma)"""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")

    radius = math.ceil(2 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2 * sigma**2))
    return kernel / kernel.sum()


def smooth_heatmap(values: np.ndarray, sigma: float) -> np.ndarray:
    """
    Gaussian smoothing of a heatmap, applied separably along rows and columns
    with reflect padding (the edge pixel is repeated: d c b a | a b c d).

    Raises
    ------
    ConfigurationError
        When sigma is not positive.
    """
    kernel = gaussian_kernel(sigma)
    smoothed = correlate1d(np.asarray(values, dtype=np.float64), kernel, axis=0, mode="reflect")
    return correlate1d(smoothed, kernel, axis=1, mode="reflect")

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
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError, GenerationError

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "generate_synthetic_image",
    "IMAGE_SIZE",
    "SIDE_RANGE",
    "BACKGROUND_MAX",
    "OBJECT_MIN",
    "MIN_GAP",
    "BORDER_MARGIN",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

IMAGE_SIZE = 128

# square side lengths are drawn uniformly from this inclusive range
SIDE_RANGE = (8, 12)

BACKGROUND_MAX = 40
OBJECT_MIN = 200

# two squares are separated by at least MIN_GAP pixels along at least one axis
MIN_GAP = 16
BORDER_MARGIN = 4

_PLACEMENT_ATTEMPTS = 1000

Box = tuple[int, int, int, int]


def _conflicts(a: Box, b: Box) -> bool:
    gap_x = max(b[0] - a[2], a[0] - b[2])
    gap_y = max(b[1] - a[3], a[1] - b[3])
    return gap_x < MIN_GAP and gap_y < MIN_GAP


def generate_synthetic_image(
    seed: int, num_objects: int, size: int = IMAGE_SIZE
) -> tuple[np.ndarray, list[Box]]:
    """
    Generates a dark noisy image with bright axis-aligned squares.

    The background is uniform integer noise in [0, BACKGROUND_MAX] per channel.
    Each square is filled with one colour drawn from [OBJECT_MIN, 255]^3 and has
    a side drawn from SIDE_RANGE.  Squares keep BORDER_MARGIN pixels from the
    image border and MIN_GAP pixels from each other.

    Parameters
    ----------
    seed: int
        Seed of the numpy generator; the same seed gives the same image.

    num_objects: int
        Number of squares, >= 0.

    size: int
        Height and width of the image.

    Returns
    -------
    The float64 image (size x size x 3) and the list of (x1, y1, x2, y2)
    ground-truth boxes in placement order.

    Raises
    ------
    GenerationError
        When the squares cannot be placed without violating the spacing rule.
    """
    if num_objects < 0:
        raise ConfigurationError(f"num_objects must be >= 0, got {num_objects}")

    rng = np.random.default_rng(seed)
    image = rng.integers(0, BACKGROUND_MAX + 1, size=(size, size, 3)).astype(np.float64)

    boxes: list[Box] = list()
    for index in range(num_objects):
        side = int(rng.integers(SIDE_RANGE[0], SIDE_RANGE[1] + 1))
        hi = size - BORDER_MARGIN - side

        box = None
        attempts = _PLACEMENT_ATTEMPTS if hi >= BORDER_MARGIN else 0
        for _ in range(attempts):
            x1, y1 = (int(v) for v in rng.integers(BORDER_MARGIN, hi + 1, size=2))
            trial = (x1, y1, x1 + side, y1 + side)
            if not any(_conflicts(trial, other) for other in boxes):
                box = trial
                break

        if box is None:
            raise GenerationError(
                f"Unable to place object {index + 1} of {num_objects} in a "
                f"{size}x{size} image (seed {seed})"
            )

        colour = rng.integers(OBJECT_MIN, 256, size=3).astype(np.float64)
        image[box[1] : box[3], box[0] : box[2], :] = colour
        boxes.append(box)

    return image, boxes

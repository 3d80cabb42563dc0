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

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import torch
from torchvision.ops import box_iou

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError
from ..detector.detector_api import Detection

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["suppression_loss", "two_stage_loss", "KEY_BOX_IOU"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

# a detection is a "key" box when it overlaps a clean detection this much
KEY_BOX_IOU = 0.5


def _score_of(det: Detection) -> torch.Tensor:
    if det.score is not None:
        return det.score.reshape(())
    return torch.tensor(det.confidence, dtype=torch.float64)


def _sum_scores(detections: Sequence[Detection]) -> torch.Tensor:
    if not detections:
        return torch.zeros((), dtype=torch.float64)
    return torch.stack([_score_of(det) for det in detections]).sum()


def suppression_loss(detections: Sequence[Detection], threshold: float) -> torch.Tensor:
    """
    Returns the sum of the confidences strictly above the threshold, as a
    scalar tensor that keeps the graph of any attached detection scores.
    """
    return _sum_scores([det for det in detections if det.confidence > threshold])


def two_stage_loss(
    detections: Sequence[Detection],
    clean_boxes: Sequence[Detection],
    gamma: float,
) -> torch.Tensor:
    """
    Returns gamma * (sum of key scores) + (1 - gamma) * (sum of other scores).

    A detection is a key box when its IoU with any clean-image detection is at
    least KEY_BOX_IOU; every other detection is an "other" box.  No threshold
    is applied here; callers pass the detections that should count.

    Raises
    ------
    ConfigurationError
        When gamma is outside [0, 1].
    """
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError(f"gamma {gamma} outside [0, 1]")

    if not detections:
        return torch.zeros((), dtype=torch.float64)

    if clean_boxes:
        overlap = box_iou(
            torch.tensor([det.box for det in detections], dtype=torch.float64),
            torch.tensor([det.box for det in clean_boxes], dtype=torch.float64),
        )
        is_key = (overlap >= KEY_BOX_IOU).any(dim=1).tolist()
    else:
        is_key = [False] * len(detections)

    key = [det for det, flag in zip(detections, is_key) if flag]
    other = [det for det, flag in zip(detections, is_key) if not flag]
    return gamma * _sum_scores(key) + (1.0 - gamma) * _sum_scores(other)

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
# Scoring of adversarial images.  The per-model score is
#
#     S = (2 - changed / 5000) * (1 - min(BB(clean), BB(adv)) / BB(clean))
#
# where `changed` counts pixel locations that differ in any channel and BB is
# the number of boxes the model detects above the threshold.  The final score
# is the plain sum of S over models and images.
#
# Report layout (JSON, schema_version 1):
#
#   {schema_version, method, threshold, models, final_score,
#    images: [{image, status, message, scale, ratio, iterations, final_loss,
#              mask_pixels, placement_degenerate, ensemble_failed,
#              scores: [{model, boxes_clean, boxes_adv, pixels_changed,
#                        score, degenerate}]}]}
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from pathlib import Path
from typing import Iterable, Literal, Optional
import math

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
from pydantic import BaseModel, Field

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError
from ..detector.detector_api import DetectorModel, ImageTensor, detect

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "SCHEMA_VERSION",
    "PIXEL_BUDGET",
    "ModelScore",
    "ImageReport",
    "ScoreReport",
    "pixels_changed",
    "score_from_counts",
    "score",
    "final_score",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

SCHEMA_VERSION = 1

# changed pixels at which the perturbation factor of the score reaches 1
PIXEL_BUDGET = 5000


class ModelScore(BaseModel, extra="forbid"):
    """the score of one adversarial image against one model"""

    model: str
    boxes_clean: int = Field(ge=0)
    boxes_adv: int = Field(ge=0)
    pixels_changed: int = Field(ge=0)
    score: float
    degenerate: bool = False


class ImageReport(BaseModel, extra="forbid"):
    """the outcome for one input image; skipped images carry no scores"""

    image: str
    status: Literal["ok", "skipped"] = "ok"
    message: Optional[str] = None
    scale: Optional[int] = None
    ratio: Optional[float] = None
    iterations: Optional[int] = None
    final_loss: Optional[float] = None
    mask_pixels: Optional[int] = None
    placement_degenerate: bool = False
    ensemble_failed: bool = False
    scores: list[ModelScore] = Field(default_factory=list)

    @property
    def image_score(self) -> float:
        return math.fsum(item.score for item in self.scores)


class ScoreReport(BaseModel, extra="forbid"):
    """the run report, see the module header for the layout"""

    schema_version: int = SCHEMA_VERSION
    method: str
    threshold: float
    models: list[str]
    final_score: float = 0.0
    images: list[ImageReport] = Field(default_factory=list)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"

    def write(self, path: Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())


def pixels_changed(clean: ImageTensor, adv: ImageTensor) -> int:
    """counts pixel locations where any channel differs"""
    clean = np.asarray(clean)
    adv = np.asarray(adv)
    if clean.shape != adv.shape:
        raise ConfigurationError(f"image shapes differ: {clean.shape} != {adv.shape}")
    return int(np.any(clean != adv, axis=-1).sum())


def score_from_counts(changed: int, boxes_clean: int, boxes_adv: int) -> float:
    """
    Evaluates the score from the pixel and box counts; zero when the clean
    image has no boxes.
    """
    if boxes_clean <= 0:
        return 0.0
    suppressed = 1.0 - min(boxes_clean, boxes_adv) / boxes_clean
    return (2.0 - changed / PIXEL_BUDGET) * suppressed


def score(
    clean: ImageTensor,
    adv: ImageTensor,
    model: DetectorModel,
    threshold: float,
    boxes_clean: Optional[int] = None,
) -> ModelScore:
    """
    Scores an adversarial image against one model.

    Parameters
    ----------
    clean: ImageTensor
        The clean image.

    adv: ImageTensor
        The adversarial image.

    model: DetectorModel
        The scoring model.

    threshold: float
        Detection threshold used for both box counts.

    boxes_clean: int, optional
        The clean box count when the caller already knows it.

    Returns
    -------
    The ModelScore; `degenerate` is set and the score is zero when the model
    detects nothing on the clean image.
    """
    if boxes_clean is None:
        boxes_clean = len(detect(model, clean, threshold))
    boxes_adv = len(detect(model, adv, threshold))
    changed = pixels_changed(clean, adv)

    return ModelScore(
        model=model.name,
        boxes_clean=boxes_clean,
        boxes_adv=boxes_adv,
        pixels_changed=changed,
        score=score_from_counts(changed, boxes_clean, boxes_adv),
        degenerate=boxes_clean == 0,
    )


def final_score(reports: Iterable[ImageReport]) -> float:
    """sum of every per-model score over every image"""
    return math.fsum(item.score for report in reports for item in report.scores)

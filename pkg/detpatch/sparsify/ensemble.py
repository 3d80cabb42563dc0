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

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence
import logging
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
from ..mask_method import Placement
from ..detector.detector_api import DetectorModel, ImageTensor, detect
from .scoring import ModelScore, score

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["CandidateRun", "EnsembleChoice", "Pipeline", "ensemble_select"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)


@dataclass
class CandidateRun:
    """what one (scale, ratio) run of the attack pipeline produced"""

    image: np.ndarray
    mask: Optional[PatchMask] = None
    placement: Optional[Placement] = None
    iterations: int = 0
    final_loss: float = 0.0


# pipeline(clean image, scale, ratio) -> CandidateRun
Pipeline = Callable[[ImageTensor, int, float], CandidateRun]


@dataclass
class EnsembleChoice:
    """
    Attributes
    ----------
    run: CandidateRun
        The winning run.

    params: tuple
        Its (scale, ratio).

    index: int
        Its position in the candidate list.

    scores: list
        The per-model scores of the winning image.

    totals: list
        The summed score of every candidate, in candidate order.

    failed: bool
        True when every candidate scored zero.
    """

    run: CandidateRun
    params: tuple[int, float]
    index: int
    scores: list[ModelScore] = field(default_factory=list)
    totals: list[float] = field(default_factory=list)
    failed: bool = False

    @property
    def image(self) -> np.ndarray:
        return self.run.image

    @property
    def total(self) -> float:
        return self.totals[self.index]


def ensemble_select(
    image: ImageTensor,
    candidate_params: Sequence[tuple[int, float]],
    pipeline: Pipeline,
    scoring_models: Sequence[DetectorModel],
    threshold: float = 0.3,
) -> EnsembleChoice:
    """
    Runs the attack pipeline once per (scale, ratio) candidate and keeps the
    adversarial image with the largest summed score over the scoring models.
    Ties go to the earlier candidate.

    Raises
    ------
    ConfigurationError
        When the candidate list or the scoring model list is empty.
    """
    if not candidate_params:
        raise ConfigurationError("ensemble_select requires at least one candidate")
    if not scoring_models:
        raise ConfigurationError("ensemble_select requires at least one scoring model")

    clean_counts = [len(detect(model, image, threshold)) for model in scoring_models]

    best: Optional[EnsembleChoice] = None
    totals = list()

    for index, (scale, ratio) in enumerate(candidate_params):
        run = pipeline(image, scale, ratio)
        scores = [
            score(image, run.image, model, threshold, boxes_clean=count)
            for model, count in zip(scoring_models, clean_counts)
        ]
        total = math.fsum(item.score for item in scores)
        totals.append(total)
        log.debug("candidate scale=%d ratio=%.2f scored %.4f", scale, ratio, total)

        if best is None or total > totals[best.index]:
            best = EnsembleChoice(run=run, params=(scale, ratio), index=index, scores=scores)

    best.totals = totals
    best.failed = totals[best.index] == 0.0
    return best

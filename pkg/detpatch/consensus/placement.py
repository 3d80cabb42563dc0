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

from ..detpatch_config import ConsensusConfig
from ..detector.detector_api import DetectorModel, ImageTensor
from ..errors import ConfigurationError
from ..mask_method import Placement, build_patch_mask
from .l2_attack import l2_attack
from .voting import extract_top_patches, normalize_candidates, vote, vote_map

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["consensus_mask"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)


@build_patch_mask.register
def consensus_mask(
    config: ConsensusConfig, models: Sequence[DetectorModel], image: ImageTensor
) -> Placement:
    """
    The consensus placement pipeline.  Each voting model runs the L2 attack on
    the clean image, its perturbation is sparsified into the top n windows and
    normalized, and the models vote on the final n windows.  Models that detect
    nothing on the clean image abstain.
    """
    if not models:
        raise ConfigurationError("consensus placement requires at least one detector")

    per_model = list()
    for model in models:
        perturbation = l2_attack(model, image, config)
        if perturbation.no_detections:
            log.debug("%s abstains from the vote", model.name)
            continue
        per_model.append(
            normalize_candidates(extract_top_patches(perturbation, config.n, config.scale))
        )

    degenerate = not per_model or all(cand.degenerate for cand in per_model)
    if not per_model:
        log.info("no detector found anything to place patches on")
        blank = np.zeros(np.shape(image)[:2], dtype=np.float64)
        per_model.append(extract_top_patches(blank, config.n, config.scale))

    return Placement(
        mask=vote(per_model, config.n, config.scale),
        evidence=vote_map(per_model),
        degenerate=degenerate,
    )

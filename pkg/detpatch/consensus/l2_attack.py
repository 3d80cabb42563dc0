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
# The full-image score suppression attack whose perturbation is used as
# placement evidence.  It descends
#
#     J_L2 = J_model + omega * ||P / 255||^2
#
# with sign-gradient steps, where J_model is the suppression loss for
# single-stage detectors and the key/other weighted loss for two-stage ones.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from dataclasses import dataclass, field
from typing import Optional
import logging

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..detpatch_config import ConsensusConfig
from ..detector.detector_api import (
    Detection,
    DetectorFamily,
    DetectorModel,
    ImageTensor,
    detect,
    loss_and_gradient,
)
from .losses import suppression_loss, two_stage_loss

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["Perturbation", "l2_attack", "PIXEL_MAX"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)

PIXEL_MAX = 255.0


@dataclass
class Perturbation:
    """
    Additive H x W x 3 delta on the 0..255 scale.

    Attributes
    ----------
    values: np.ndarray
        The delta; clean + values stays inside [0, 255].

    no_detections: bool
        True when the model detected nothing on the clean image, in which case
        the delta is zero.

    iterations: int
        The attack iterations that were run.

    history: list
        (J_model, J_L2) before each iteration.
    """

    values: np.ndarray
    no_detections: bool = False
    iterations: int = 0
    history: list[tuple[float, float]] = field(default_factory=list)

    @classmethod
    def zeros(cls, shape: tuple[int, ...], **kwargs) -> "Perturbation":
        return cls(values=np.zeros(shape, dtype=np.float64), **kwargs)

    @property
    def magnitudes(self) -> np.ndarray:
        """per-pixel L2 norm over the channels"""
        return np.linalg.norm(self.values, axis=2)

    def apply(self, image: ImageTensor) -> np.ndarray:
        return np.clip(np.asarray(image, dtype=np.float64) + self.values, 0.0, PIXEL_MAX)


def _model_objective(
    model: DetectorModel, config: ConsensusConfig, clean_detections: list[Detection]
):
    if model.family is DetectorFamily.two_stage:

        def objective(found: list[Detection]):
            above = [det for det in found if det.confidence > config.threshold]
            return two_stage_loss(above, clean_detections, config.gamma)

    else:

        def objective(found: list[Detection]):
            return suppression_loss(found, config.threshold)

    return objective


def l2_attack(
    model: DetectorModel,
    image: ImageTensor,
    config: ConsensusConfig,
    iterations: Optional[int] = None,
) -> Perturbation:
    """
    Runs the full-image (unmasked) L2-regularized sign-gradient attack on one
    detector and returns the final perturbation.

    Parameters
    ----------
    model: DetectorModel
        The detector; its family selects the score suppression loss.

    image: ImageTensor
        The clean image.

    config: ConsensusConfig
        Supplies omega, gamma, threshold, the step size and the iteration
        count.

    iterations: int, optional
        Overrides `config.l2_iters`; zero returns the zero perturbation.

    Raises
    ------
    ContractViolation
        When the detector does not provide a scalar loss gradient.

    Returns
    -------
    The perturbation; zero with `no_detections` set when the model finds
    nothing above the threshold on the clean image.
    """
    clean = np.asarray(image, dtype=np.float64)
    iterations = config.l2_iters if iterations is None else iterations

    clean_detections = detect(model, clean, config.threshold)
    if not clean_detections:
        log.debug("%s: no detections on the clean image", model.name)
        return Perturbation.zeros(clean.shape, no_detections=True)

    objective = _model_objective(model, config, clean_detections)
    delta = np.zeros_like(clean)
    history = list()

    for _ in range(iterations):
        model_loss, grad = loss_and_gradient(model, clean + delta, objective)
        normalized = delta / PIXEL_MAX
        history.append(
            (model_loss, model_loss + config.omega * float((normalized**2).sum()))
        )

        grad = grad + 2.0 * config.omega * normalized / PIXEL_MAX
        delta = np.clip(clean + delta - config.step * np.sign(grad), 0.0, PIXEL_MAX) - clean

    if history:
        log.debug(
            "%s: L2 attack J_model %.4f -> %.4f after %d iterations",
            model.name,
            history[0][0],
            history[-1][0],
            len(history),
        )

    return Perturbation(values=delta, iterations=len(history), history=history)

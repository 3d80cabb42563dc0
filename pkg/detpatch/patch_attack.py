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
# The masked iterative sign-gradient attack.  The ensemble loss is the sum over
# models of the confidences above the threshold; each iteration moves the
# masked pixels by alpha against the sign of its gradient and clips them to
# [0, 255].  The loop stops when the loss reaches zero or the iteration budget
# is spent.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from dataclasses import dataclass
from typing import Sequence, Union
import logging
import math

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .errors import AttackError, ConfigurationError
from .detpatch_config import AttackConfig
from .masks import PatchMask
from .detector.detector_api import (
    DetectorModel,
    ImageTensor,
    candidates,
    loss_and_gradient,
)
from .consensus.losses import suppression_loss

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["AttackResult", "ensemble_loss", "ensemble_gradient", "fgsm_step", "attack"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)


@dataclass
class AttackResult:
    """
    Attributes
    ----------
    image: np.ndarray
        The adversarial image; equal to the input outside the mask.

    iterations: int
        Sign-gradient steps taken.

    initial_loss: float
        Ensemble loss of the clean image.

    final_loss: float
        Ensemble loss of the returned image; zero on success.
    """

    image: np.ndarray
    iterations: int
    initial_loss: float
    final_loss: float

    @property
    def success(self) -> bool:
        return self.final_loss == 0.0


def _check_models(models: Sequence[DetectorModel]):
    if not models:
        raise ConfigurationError("at least one detector is required")


def ensemble_loss(
    models: Sequence[DetectorModel], image: ImageTensor, threshold: float
) -> float:
    """sum over the models of the confidences above the threshold"""
    _check_models(models)
    return math.fsum(
        float(suppression_loss(candidates(model, image), threshold)) for model in models
    )


def ensemble_gradient(
    models: Sequence[DetectorModel], image: ImageTensor, threshold: float
) -> tuple[float, np.ndarray]:
    """
    Returns the ensemble loss and its image gradient; the per-model gradients
    are summed in model-list order.
    """
    _check_models(models)

    def objective(found):
        return suppression_loss(found, threshold)

    losses = list()
    total = np.zeros(np.shape(image), dtype=np.float64)
    for model in models:
        value, grad = loss_and_gradient(model, image, objective)
        losses.append(value)
        total += grad

    return math.fsum(losses), total


def fgsm_step(
    image: ImageTensor,
    mask: Union[PatchMask, np.ndarray],
    gradient: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """
    One masked descent step: pixels under the mask move by -alpha * sign(grad)
    and are clipped to [0, 255]; all other pixels are copied unchanged.
    sign(0) is 0, so a zero gradient leaves the pixel where it is.

    Raises
    ------
    ConfigurationError
        When the mask, gradient and image shapes disagree.
    """
    image = np.asarray(image, dtype=np.float64)
    bitmap = mask.bitmap if isinstance(mask, PatchMask) else np.asarray(mask, dtype=bool)

    if bitmap.shape != image.shape[:2] or np.shape(gradient) != image.shape:
        raise ConfigurationError(
            f"fgsm_step: image {image.shape}, mask {bitmap.shape} and gradient "
            f"{np.shape(gradient)} shapes disagree"
        )

    stepped = np.clip(image - alpha * np.sign(gradient), 0.0, 255.0)
    return np.where(bitmap[:, :, None], stepped, image)


def attack(
    image: ImageTensor,
    mask: PatchMask,
    models: Sequence[DetectorModel],
    config: AttackConfig,
) -> AttackResult:
    """
    Runs the masked sign-gradient attack until no model detects anything above
    the threshold or `config.max_iters` steps are spent.

    The perturbation starts at zero and the adversarial image is the clean
    image with the accumulated, clipped delta composited under the mask.

    Parameters
    ----------
    image: ImageTensor
        The clean image.

    mask: PatchMask
        The pixels the attack may change.

    models: list
        Detector handles of the attack ensemble.

    config: AttackConfig
        Step size, iteration budget and threshold.

    Raises
    ------
    AttackError
        When the mask is empty.

    ConfigurationError
        When no model is given.
    """
    _check_models(models)
    if mask.is_empty:
        raise AttackError("The patch mask is empty; there is nothing to optimize")

    adv = np.asarray(image, dtype=np.float64).copy()
    loss, grad = ensemble_gradient(models, adv, config.threshold)
    initial_loss = loss

    iterations = 0
    while loss > 0 and iterations < config.max_iters:
        adv = fgsm_step(adv, mask, grad, config.alpha)
        iterations += 1
        loss, grad = ensemble_gradient(models, adv, config.threshold)
        log.debug("iteration %d: ensemble loss %.4f", iterations, loss)

    log.debug(
        "attack finished after %d iterations, loss %.4f -> %.4f",
        iterations,
        initial_loss,
        loss,
    )
    return AttackResult(
        image=adv, iterations=iterations, initial_loss=initial_loss, final_loss=loss
    )

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
# This file contains the detector contract that every attack consumes.  A
# detector adapter subclasses `DetectorModel` and implements `forward`; the
# module level functions (detect, input_gradient, activation_and_gradient) are
# written only against that contract.
#
# Conventions for adapter authors:
#
#   * images are H x W x 3 arrays on the 0..255 pixel scale; adapters
#     normalize internally.
#   * `forward` returns one raw candidate per anchor with a differentiable
#     confidence tensor; thresholding and NMS are done here, not in adapters.
#   * every name in `activation_layers` must appear in the activations of the
#     forward pass as a K x h x w tensor that is part of the autograd graph.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence
import hashlib
import threading

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import torch
from torchvision.ops import nms

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError, ContractViolation

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "ImageTensor",
    "DetectorFamily",
    "Detection",
    "ActivationRecord",
    "ForwardPass",
    "DetectorModel",
    "LossFunction",
    "NMS_IOU",
    "candidates",
    "detect",
    "loss_and_gradient",
    "input_gradient",
    "activation_and_gradient",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

# H x W x 3 float array with values in [0, 255]
ImageTensor = np.ndarray

NMS_IOU = 0.5


class DetectorFamily(str, Enum):
    """selects which score-suppression loss the consensus attack uses"""

    single_stage = "single-stage"
    two_stage = "two-stage"


@dataclass(frozen=True)
class Detection:
    """
    One bounding box produced by a detector.

    Attributes
    ----------
    box: tuple
        (x1, y1, x2, y2) in pixel coordinates.

    confidence: float
        The maximum class confidence of the box, in [0, 1].

    class_id: int
        The class label.

    score: torch.Tensor, optional
        The same confidence as a 0-dim tensor that is still attached to the
        forward pass that produced it.  Losses are built from this value.
    """

    box: tuple[float, float, float, float]
    confidence: float
    class_id: int = 0
    score: Optional[torch.Tensor] = field(default=None, compare=False, repr=False)

    @property
    def area(self) -> float:
        x1, y1, x2, y2 = self.box
        return (x2 - x1) * (y2 - y1)


@dataclass
class ActivationRecord:
    """forward activation of a named layer and the box-score gradient on it"""

    layer_name: str
    activation: np.ndarray
    gradient: np.ndarray

    def __post_init__(self):
        if self.activation.shape != self.gradient.shape:
            raise ContractViolation(
                f"Activation record {self.layer_name}: activation shape "
                f"{self.activation.shape} != gradient shape {self.gradient.shape}"
            )


@dataclass
class ForwardPass:
    """
    The result of running a detector on one image.

    Attributes
    ----------
    image: torch.Tensor
        The H x W x 3 leaf tensor the pass was computed from; it requires grad
        so that input gradients can be taken from the same graph.

    boxes: torch.Tensor
        N x 4 candidate boxes, one per anchor.

    scores: torch.Tensor
        N candidate confidences, attached to the graph.

    class_ids: torch.Tensor
        N integer labels.

    activations: dict
        layer-name -> K x h x w activation tensor, attached to the graph.
    """

    image: torch.Tensor
    boxes: torch.Tensor
    scores: torch.Tensor
    class_ids: torch.Tensor
    activations: dict[str, torch.Tensor]


# a loss maps the candidate detections of one forward pass to a scalar
LossFunction = Callable[[list[Detection]], "torch.Tensor | float"]


class DetectorModel(ABC):
    """
    The detector contract.  A handle is used by at most one attack at a time;
    independent handles share no mutable state.
    """

    def __init__(
        self,
        *,
        name: str,
        family: DetectorFamily,
        activation_layers: Sequence[str],
        input_shape: tuple[int, int],
    ):
        self.name = name
        self.family = DetectorFamily(family)
        self.activation_layers = tuple(activation_layers)
        self.input_shape = tuple(input_shape)

        # single entry cache of the last forward pass; used exclusively by
        # `forward_cache_get`.

        self._pass_cache_lock = threading.Lock()
        self._pass_cache: Optional[tuple[bytes, ForwardPass]] = None

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, family={self.family.value})"

    @abstractmethod
    def forward(self, image: torch.Tensor) -> ForwardPass:
        """
        Run the detector on an H x W x 3 float64 tensor on the 0..255 scale.
        Implementations must not detach the returned scores or activations
        from `image`.
        """

    def check_image(self, image: np.ndarray):
        """raises ConfigurationError when the image does not fit the model input"""
        expected = (*self.input_shape, 3)
        if tuple(np.shape(image)) != expected:
            raise ConfigurationError(
                f"Detector {self.name}: image shape {tuple(np.shape(image))} "
                f"does not match expected input {expected}"
            )

    def forward_cache_get(self, image: np.ndarray) -> ForwardPass:
        """
        Returns the forward pass for the given image, reusing the previous pass
        when the image content is identical.  Gradients of several scalars
        (for example one per detection) can then be taken from one graph.
        """
        self.check_image(image)
        pixels = np.ascontiguousarray(image, dtype=np.float64)
        key = hashlib.blake2b(pixels.tobytes(), digest_size=16).digest()

        with self._pass_cache_lock:
            if self._pass_cache and self._pass_cache[0] == key:
                return self._pass_cache[1]

            leaf = torch.from_numpy(pixels.copy()).requires_grad_(True)
            fwd = self.forward(leaf)
            self._pass_cache = (key, fwd)
            return fwd


def _as_detections(fwd: ForwardPass, index: Sequence[int]) -> list[Detection]:
    boxes = fwd.boxes.detach().cpu().numpy()
    labels = fwd.class_ids.detach().cpu().numpy()
    return [
        Detection(
            box=tuple(float(v) for v in boxes[i]),
            confidence=float(fwd.scores[i].detach()),
            class_id=int(labels[i]),
            score=fwd.scores[i],
        )
        for i in index
    ]


def _check_threshold(threshold: float):
    if not 0.0 <= threshold <= 1.0:
        raise ConfigurationError(f"threshold {threshold} outside [0, 1]")


def candidates(model: DetectorModel, image: ImageTensor) -> list[Detection]:
    """
    Returns every anchor's raw detection, before thresholding and NMS, with
    differentiable scores.  Losses are formed over these candidates.
    """
    fwd = model.forward_cache_get(image)
    return _as_detections(fwd, range(fwd.scores.shape[0]))


def detect(
    model: DetectorModel, image: ImageTensor, threshold: float
) -> list[Detection]:
    """
    Runs the detector and returns the detections whose confidence is strictly
    greater than the threshold, after non-maximum suppression, sorted by
    descending confidence.  The length of the result is BB(image; model).

    Parameters
    ----------
    model: DetectorModel
        The detector handle.

    image: ImageTensor
        H x W x 3 array on the 0..255 scale.

    threshold: float
        Confidence threshold in [0, 1].

    Raises
    ------
    ConfigurationError
        When the image shape does not match the model input, or the threshold
        is outside [0, 1].
    """
    _check_threshold(threshold)
    fwd = model.forward_cache_get(image)

    scores = fwd.scores.detach()
    above = torch.nonzero(scores > threshold).flatten()
    if above.numel() == 0:
        return list()

    # nms requires boxes and scores of one dtype; adapters may mix them
    boxes = fwd.boxes.detach()[above]
    keep = nms(boxes, scores[above].to(boxes.dtype), NMS_IOU)
    found = _as_detections(fwd, above[keep].tolist())

    height, width = model.input_shape
    clipped = list()
    for det in found:
        x1, y1, x2, y2 = det.box
        box = (
            min(max(x1, 0.0), width),
            min(max(y1, 0.0), height),
            min(max(x2, 0.0), width),
            min(max(y2, 0.0), height),
        )
        clipped.append(
            Detection(box=box, confidence=det.confidence, class_id=det.class_id, score=det.score)
        )

    # nms already orders by score; stable sort keeps that order on ties
    return sorted(clipped, key=lambda d: -d.confidence)


def loss_and_gradient(
    model: DetectorModel, image: ImageTensor, loss: LossFunction
) -> tuple[float, np.ndarray]:
    """
    Evaluates the loss on the model's candidates for the image and returns the
    loss value together with d(loss)/d(image).

    Raises
    ------
    ContractViolation
        When the loss does not produce a scalar number or tensor.
    """
    fwd = model.forward_cache_get(image)
    value = loss(_as_detections(fwd, range(fwd.scores.shape[0])))

    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = torch.tensor(float(value), dtype=torch.float64)

    if not isinstance(value, torch.Tensor) or value.numel() != 1:
        raise ContractViolation(
            f"Loss for detector {model.name} must be a scalar, got {type(value).__name__}"
        )

    value = value.reshape(())
    if not value.requires_grad:
        return float(value), np.zeros(np.shape(image), dtype=np.float64)

    (grad,) = torch.autograd.grad(
        value, fwd.image, retain_graph=True, allow_unused=True
    )
    if grad is None:
        return float(value.detach()), np.zeros(np.shape(image), dtype=np.float64)

    return float(value.detach()), grad.detach().cpu().numpy().copy()


def input_gradient(
    model: DetectorModel, image: ImageTensor, loss: LossFunction
) -> np.ndarray:
    """returns d(loss)/d(image) evaluated at the image, shape H x W x 3"""
    _, grad = loss_and_gradient(model, image, loss)
    return grad


def activation_and_gradient(
    model: DetectorModel,
    image: ImageTensor,
    layer: str,
    box_score: torch.Tensor,
) -> ActivationRecord:
    """
    Returns the forward activation of a layer and the gradient of one box
    score with respect to it.

    Parameters
    ----------
    model: DetectorModel
        The detector handle.

    image: ImageTensor
        The image the box score was computed on.

    layer: str
        One of `model.activation_layers`.

    box_score: torch.Tensor
        The confidence y^b of one detection, as returned in `Detection.score`
        by `detect` or `candidates` on the same image.  A score that is not
        attached to the graph has a zero gradient.

    Raises
    ------
    ConfigurationError
        When the layer name is not one of the model's activation layers.
    """
    if layer not in model.activation_layers:
        raise ConfigurationError(
            f"Detector {model.name}: unknown activation layer {layer!r}, "
            f"expected one of {list(model.activation_layers)}"
        )

    fwd = model.forward_cache_get(image)
    act = fwd.activations[layer]
    act_np = act.detach().cpu().numpy().copy()

    if not isinstance(box_score, torch.Tensor) or not box_score.requires_grad:
        return ActivationRecord(layer, act_np, np.zeros_like(act_np))

    (grad,) = torch.autograd.grad(
        box_score.reshape(()), act, retain_graph=True, allow_unused=True
    )
    grad_np = np.zeros_like(act_np) if grad is None else grad.detach().cpu().numpy().copy()
    return ActivationRecord(layer, act_np, grad_np)

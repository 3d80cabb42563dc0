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
# Detection-adapted Grad-CAM.  Unlike the classifier variant the per-channel
# gradient is not pooled: every box keeps a spatial map
#
#     h_b = max(0, sum_k dy_b/dA_k * A_k)
#
# the box maps of one layer are z-scored and weighted by sqrt(box area) so
# that small boxes do not dominate, and the layer maps are upsampled to image
# resolution and summed.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from typing import Optional, Sequence
import logging

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import torch
import torch.nn.functional as F

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError, ContractViolation
from ..detector.detector_api import (
    ActivationRecord,
    DetectorModel,
    ImageTensor,
    activation_and_gradient,
    detect,
)

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "Heatmap",
    "VARIANCE_EPSILON",
    "box_heatmap",
    "layer_heatmap",
    "upsample_heatmap",
    "combined_heatmap",
    "fuse_heatmaps",
    "occlusion_sensitivity",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)

# real valued H x W saliency map
Heatmap = np.ndarray

# box maps with a population variance below this carry no localization signal
VARIANCE_EPSILON = 1e-12

OCCLUDER_VALUE = 128.0


def box_heatmap(record: ActivationRecord) -> Heatmap:
    """
    Returns the h x w map of one box: the channel sum of gradient times
    activation, clamped below at zero.

    Raises
    ------
    ContractViolation
        When the gradient and activation are not K x h x w tensors of one shape.
    """
    activation = np.asarray(record.activation, dtype=np.float64)
    gradient = np.asarray(record.gradient, dtype=np.float64)

    if activation.shape != gradient.shape or activation.ndim != 3:
        raise ContractViolation(
            f"Layer {record.layer_name}: expected matching K x h x w tensors, got "
            f"activation {activation.shape} and gradient {gradient.shape}"
        )

    return np.maximum((gradient * activation).sum(axis=0), 0.0)


def _standardized(values: np.ndarray) -> np.ndarray:
    variance = values.var()
    if variance < VARIANCE_EPSILON:
        return np.zeros_like(values)
    return (values - values.mean()) / np.sqrt(variance)


def layer_heatmap(
    box_maps: Sequence[tuple[Heatmap, float]],
    shape: Optional[tuple[int, int]] = None,
) -> Heatmap:
    """
    Combines the box maps of one layer.  Each map is standardized to zero mean
    and unit population variance, scaled by sqrt(area) and the results are
    summed.  A map whose variance is below VARIANCE_EPSILON contributes zero.

    Parameters
    ----------
    box_maps: list
        (box map, box area) pairs; all maps share one shape.

    shape: tuple, optional
        The map shape, used when the list is empty.

    Raises
    ------
    ContractViolation
        When the maps differ in shape, an area is not positive, or the list is
        empty and no shape is given.

    Returns
    -------
    The layer map; all-zero for an empty box list.
    """
    if not box_maps:
        if shape is None:
            raise ContractViolation("layer_heatmap: shape is required for an empty box list")
        return np.zeros(shape, dtype=np.float64)

    first_shape = np.shape(box_maps[0][0])
    terms = list()
    for values, area in box_maps:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != first_shape:
            raise ContractViolation(
                f"layer_heatmap: box map shape {values.shape} != {first_shape}"
            )
        if not area > 0:
            raise ContractViolation(f"layer_heatmap: box area must be > 0, got {area}")
        terms.append(_standardized(values) * np.sqrt(area))

    # summing sorted terms makes the result independent of the box order
    return np.sort(np.stack(terms), axis=0).sum(axis=0)


def upsample_heatmap(values: Heatmap, shape: tuple[int, int]) -> Heatmap:
    """bilinear resize of a layer map to image resolution"""
    if tuple(values.shape) == tuple(shape):
        return np.asarray(values, dtype=np.float64)

    tensor = torch.from_numpy(np.ascontiguousarray(values, dtype=np.float64))
    resized = F.interpolate(
        tensor[None, None], size=tuple(shape), mode="bilinear", align_corners=False
    )
    return resized[0, 0].numpy()


def combined_heatmap(
    model: DetectorModel,
    image: ImageTensor,
    layers: Optional[Sequence[str]] = None,
    threshold: float = 0.3,
) -> Heatmap:
    """
    Computes the image resolution heatmap of one detector.

    For every detection above the threshold and every requested layer the box
    map is formed from the layer activation and the gradient of the box
    confidence; the box maps of a layer are combined with `layer_heatmap`,
    upsampled bilinearly to the image size and the layer maps are summed.

    Parameters
    ----------
    model: DetectorModel
        The detector.

    image: ImageTensor
        H x W x 3 image on the 0..255 scale.

    layers: list, optional
        Activation layers to use; all of `model.activation_layers` when omitted.

    threshold: float
        Confidence threshold of the detections that contribute.

    Raises
    ------
    ConfigurationError
        When a layer is not one of the model's activation layers.

    Returns
    -------
    The H x W heatmap; all-zero when nothing is detected.
    """
    layers = list(model.activation_layers if layers is None else layers)
    if not layers:
        raise ConfigurationError(f"Detector {model.name}: no activation layers selected")

    for layer in layers:
        if layer not in model.activation_layers:
            raise ConfigurationError(
                f"Detector {model.name}: unknown activation layer {layer!r}"
            )

    shape = tuple(np.shape(image)[:2])
    total = np.zeros(shape, dtype=np.float64)

    detections = [det for det in detect(model, image, threshold) if det.area > 0]
    if not detections:
        log.debug("%s: no detections above %.2f, empty heatmap", model.name, threshold)
        return total

    for layer in layers:
        box_maps = [
            (
                box_heatmap(activation_and_gradient(model, image, layer, det.score)),
                det.area,
            )
            for det in detections
        ]
        total += upsample_heatmap(layer_heatmap(box_maps), shape)

    return total


def fuse_heatmaps(maps: Sequence[Heatmap]) -> Heatmap:
    """
    Combines the heatmaps of several detectors: each map is divided by its
    maximum and the results are summed.  A map whose maximum is not positive
    has no hot region and contributes nothing.

    Raises
    ------
    ConfigurationError
        When the list is empty or the maps differ in shape.
    """
    if not maps:
        raise ConfigurationError("fuse_heatmaps: at least one heatmap is required")

    shape = np.shape(maps[0])
    fused = np.zeros(shape, dtype=np.float64)
    for values in maps:
        if np.shape(values) != shape:
            raise ConfigurationError(
                f"fuse_heatmaps: heatmap shape {np.shape(values)} != {shape}"
            )
        peak = np.max(values)
        if peak > 0:
            fused += values / peak

    return fused


def occlusion_sensitivity(
    model: DetectorModel,
    image: ImageTensor,
    scale: int,
    threshold: float = 0.3,
    stride: int = 1,
    fill: float = OCCLUDER_VALUE,
) -> np.ndarray:
    """
    Brute-force saliency oracle.  A gray scale x scale occluder is placed at
    every window position and the drop of the summed confidence of the anchors
    that are above the threshold on the clean image is recorded.

    Parameters
    ----------
    model: DetectorModel
        The detector.

    image: ImageTensor
        The clean image.

    scale: int
        Side of the occluder.

    threshold: float
        Anchors above this confidence on the clean image are tracked.

    stride: int
        Step between window positions.

    fill: float
        The occluder pixel value.

    Returns
    -------
    Array of confidence drops; entry (i, j) belongs to the window with its
    top-left corner at (i * stride, j * stride).
    """
    model.check_image(image)
    height, width = np.shape(image)[:2]
    if scale < 1 or scale > min(height, width):
        raise ConfigurationError(f"occluder scale {scale} does not fit the image")
    if stride < 1:
        raise ConfigurationError(f"stride must be >= 1, got {stride}")

    def anchor_scores(pixels: np.ndarray) -> torch.Tensor:
        with torch.no_grad():
            return model.forward(torch.from_numpy(pixels)).scores

    clean = np.ascontiguousarray(image, dtype=np.float64)
    clean_scores = anchor_scores(clean)
    tracked = clean_scores > threshold
    baseline = float(clean_scores[tracked].sum())

    rows = range(0, height - scale + 1, stride)
    cols = range(0, width - scale + 1, stride)
    drops = np.zeros((len(rows), len(cols)), dtype=np.float64)

    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            occluded = clean.copy()
            occluded[row : row + scale, col : col + scale, :] = fill
            drops[i, j] = baseline - float(anchor_scores(occluded)[tracked].sum())

    return drops
